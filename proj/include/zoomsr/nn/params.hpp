#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "zoomsr/nn/autograd.hpp"

namespace zoomsr::nn {

/// Named trainable tensors, ordered by name so iteration (and serialisation) is deterministic.
class ParamStore {
public:
    Var& add(const std::string& name, Tensor init);
    const Var& at(const std::string& name) const;
    Var& at(const std::string& name);
    bool contains(const std::string& name) const { return params_.count(name) != 0; }
    std::size_t size() const noexcept { return params_.size(); }
    std::size_t parameter_count() const;

    void zero_grad();
    bool all_finite() const;

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    /// Deep copy (fresh leaf nodes with copied values).
    ParamStore clone() const;

private:
    std::map<std::string, Var> params_;
};

/// He-normal initialisation for a (O, I, K, K) conv weight or (O, I) dense weight.
Tensor he_normal(const std::vector<int>& shape, std::mt19937_64& rng, double gain = 1.0);

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
    void step(ParamStore& params);
    std::int64_t steps() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return cfg_; }
    void set_learning_rate(double lr) { cfg_.learning_rate = lr; }

    // Moments are exported under "<prefix>m/<name>" and "<prefix>v/<name>".
    void export_state(std::map<std::string, Tensor>& out, const std::string& prefix) const;
    void import_state(const std::map<std::string, Tensor>& in, const std::string& prefix, std::int64_t steps);

private:
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::map<std::string, Tensor> m_, v_;
};

// ---- checkpoint container ------------------------------------------------------------
//
// Layout (little-endian host order):
//   8 bytes  magic "ZOOMSRCK"
//   u32      format version (1)
//   u64      metadata length, then that many bytes of UTF-8 JSON
//   u64      array count, then per array:
//              u32 name length, name bytes, u32 rank, rank x i32 dims, volume x f64 values

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    nlohmann::json meta = nlohmann::json::object();
    std::map<std::string, Tensor> arrays;

    void put_params(const ParamStore& params, const std::string& prefix);
    /// Loads every array under `prefix` into a fresh store (names stripped of the prefix).
    ParamStore get_params(const std::string& prefix) const;
    bool has_prefix(const std::string& prefix) const;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace zoomsr::nn
