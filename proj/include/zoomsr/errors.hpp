#pragma once

#include <stdexcept>
#include <string>

namespace zoomsr {

/// Shape or size contract violated (non-divisible dims, channel mismatch, ...).
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// Filesystem / decoding failures for frames, checkpoints, configs and logs.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// A loss or parameter went NaN/Inf during optimisation. `component` names the culprit.
class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(std::string component, const std::string& what)
        : std::runtime_error(what), component_(std::move(component)) {}
    const std::string& component() const noexcept { return component_; }

private:
    std::string component_;
};

}  // namespace zoomsr
