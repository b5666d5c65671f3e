#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "zoomsr/image.hpp"

namespace zoomsr::nn {

/// Dense row-major tensor of doubles. Feature maps use (C, H, W); convolution weights use
/// (out, in, k, k); dense weights (out, in); vectors (n).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<int> shape, double fill = 0.0);
    Tensor(std::vector<int> shape, std::vector<double> data);

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_); }
    static Tensor scalar(double v) { return Tensor({1}, std::vector<double>{v}); }

    const std::vector<int>& shape() const noexcept { return shape_; }
    int dim(std::size_t i) const { return shape_.at(i); }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }

    // (C, H, W) accessors.
    int channels() const { return shape_.at(0); }
    int height() const { return shape_.at(1); }
    int width() const { return shape_.at(2); }
    double& at(int c, int y, int x) {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }
    double at(int c, int y, int x) const {
        return data_[(static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x];
    }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    double* raw() noexcept { return data_.data(); }
    const double* raw() const noexcept { return data_.data(); }
    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    double item() const;
    void fill(double v);
    bool all_finite() const noexcept;
    bool same_shape(const Tensor& o) const noexcept { return shape_ == o.shape_; }
    std::string shape_string() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<int> shape_;
    std::vector<double> data_;
};

/// HWC image -> CHW tensor.
Tensor to_tensor(const Image& img);
/// CHW tensor -> HWC image.
Image to_image(const Tensor& t);

std::size_t shape_volume(const std::vector<int>& shape);

}  // namespace zoomsr::nn
