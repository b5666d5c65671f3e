#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include <nlohmann/json.hpp>

#include "zoomsr/image.hpp"
#include "zoomsr/nn/params.hpp"

namespace zoomsr::net {

using nn::ParamStore;
using nn::Var;

struct GeneratorConfig {
    int levels = 3;               // N: pyramid levels, level s emits x2^s
    int residual_blocks = 4;      // M per level
    int feature_channels = 64;
    int kernel_size = 3;
    int input_channels = 3;       // 3 single-image, 3 + 2 + 3*r^2 video
    int dense_layers = 4;         // internal 3x3 layers per dense block
    int growth = 32;              // channels added per dense layer
    double leaky_slope = 0.2;

    void validate() const;
    friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);

/// Per-level SR images; entry s-1 is level s, shaped (2^s H, 2^s W, 3).
using PyramidOutput = std::vector<Image>;

/// Laplacian-pyramid generator. Level s runs M residual dense blocks on features at the
/// level's input resolution, lifts them with upsample+conv, and predicts an RGB residual that
/// is summed with the bilinearly upsampled image from the previous level.
class Generator {
public:
    struct Output {
        std::vector<Var> levels;          // clamped SR image per level, (3, 2^s H, 2^s W)
        std::vector<Var> section_entry;   // trunk features entering level s
        std::vector<Var> section_exit;    // trunk features after the last block of level s
    };

    Generator(GeneratorConfig cfg, std::uint64_t seed);
    Generator(GeneratorConfig cfg, ParamStore params);

    /// x: (input_channels, H, W). The image base for level 1 is the last 3 channels.
    Output forward(const Var& x) const;
    /// Inference on an HWC image without recording a graph.
    PyramidOutput infer(const Image& lr) const;

    const GeneratorConfig& config() const noexcept { return cfg_; }
    ParamStore& params() noexcept { return params_; }
    const ParamStore& params() const noexcept { return params_; }

    /// Names of the parameters forming the RGB residual head of every level.
    std::vector<std::string> residual_output_params() const;

private:
    GeneratorConfig cfg_;
    ParamStore params_;
};

/// Registers dense-block parameters under `prefix` (dense{k}.w/b and fuse.w/b).
void init_dense_block(ParamStore& params, const std::string& prefix, int channels, int layers, int growth,
                      int kernel, std::mt19937_64& rng);
/// Dense block: layer k sees concat(x, out_0..out_{k-1}) -> conv(k x k) -> LeakyReLU; a 1x1
/// fusion maps concat(x, all layer outputs) back to `channels`. No skip connection here.
Var dense_block_forward(const Var& x, const ParamStore& params, const std::string& prefix, int layers,
                        double slope);
/// Nearest-neighbour x r upsampling, then conv + LeakyReLU.
Var upsample_conv(const Var& x, const Var& weight, const Var& bias, int r, double slope);

// ---- discriminator -------------------------------------------------------------------

struct DiscriminatorConfig {
    int input_size = 512;     // square x8 output resolution accepted
    int base_channels = 64;
    int max_channels = 512;
    int stages = 4;           // stride-2 convolutions
    int head_hidden = 100;
    double leaky_slope = 0.2;

    void validate() const;
    friend bool operator==(const DiscriminatorConfig&, const DiscriminatorConfig&) = default;
};

void to_json(nlohmann::json& j, const DiscriminatorConfig& c);
void from_json(const nlohmann::json& j, DiscriminatorConfig& c);

/// Conv stack with stride-2 stages doubling channels, then a two-layer dense head emitting C(x).
class Discriminator {
public:
    Discriminator(DiscriminatorConfig cfg, std::uint64_t seed);
    Discriminator(DiscriminatorConfig cfg, ParamStore params);

    /// img: (3, input_size, input_size) -> scalar score. Other sizes throw DimensionError.
    Var forward(const Var& img) const;
    double score(const Image& img) const;

    const DiscriminatorConfig& config() const noexcept { return cfg_; }
    ParamStore& params() noexcept { return params_; }
    const ParamStore& params() const noexcept { return params_; }

private:
    DiscriminatorConfig cfg_;
    ParamStore params_;
};

/// sigma(c_a - mean_c_b): probability that a is more realistic than the b batch.
double relativistic_probability(double c_a, double mean_c_b);

// ---- fixed feature extractor -------------------------------------------------------------

struct ExtractorConfig {
    double width_scale = 1.0 / 16.0;  // 1.0 gives the full 64..512 channel widths
    std::uint64_t seed = 19;
    friend bool operator==(const ExtractorConfig&, const ExtractorConfig&) = default;
};

void to_json(nlohmann::json& j, const ExtractorConfig& c);
void from_json(const nlohmann::json& j, ExtractorConfig& c);

/// Frozen VGG19-topology convolution stack: 16 3x3 convs (counted 1..16, convolutions only),
/// ReLU after each, 2x2 max-pool after convs 2, 4, 8 and 12. Weights are fixed seeded draws.
class FeatureExtractor {
public:
    static constexpr int kConvLayers = 16;

    explicit FeatureExtractor(ExtractorConfig cfg = {});

    /// Post-activation output of conv `layer` (1-based). Gradients flow to the input only.
    Var forward(const Var& img, int layer) const;
    /// Taps for several layers in one pass; result order follows `layers`.
    std::vector<Var> forward(const Var& img, const std::vector<int>& layers) const;

    /// Pooling factor applied before conv `layer` (input dims must be divisible by it).
    static int downsampling_before(int layer);
    int channels_at(int layer) const;
    const ExtractorConfig& config() const noexcept { return cfg_; }

private:
    ExtractorConfig cfg_;
    std::vector<Var> weights_, biases_;
};

/// Generator level -> extractor layer used for its content loss.
using FeatureTapConfig = std::map<int, int>;
FeatureTapConfig default_feature_taps();

}  // namespace zoomsr::net
