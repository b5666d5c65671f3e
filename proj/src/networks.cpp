#include "zoomsr/networks.hpp"

#include <algorithm>
#include <cmath>

namespace zoomsr::net {

using nlohmann::json;

namespace {

std::string level_name(int s) { return "level" + std::to_string(s) + "."; }

Var conv_layer(const Var& x, const ParamStore& p, const std::string& name, int stride = 1) {
    return nn::conv2d(x, p.at(name + ".w"), p.at(name + ".b"), stride);
}

void add_conv(ParamStore& p, const std::string& name, int out, int in, int k, std::mt19937_64& rng,
              double gain = 1.0) {
    p.add(name + ".w", nn::he_normal({out, in, k, k}, rng, gain));
    p.add(name + ".b", nn::Tensor({out}));
}

}  // namespace

void GeneratorConfig::validate() const {
    if (levels < 1) throw std::invalid_argument("generator: levels must be >= 1");
    if (residual_blocks < 1) throw std::invalid_argument("generator: residual_blocks must be >= 1");
    if (feature_channels <= 0 || growth <= 0 || dense_layers < 1)
        throw std::invalid_argument("generator: feature_channels, growth and dense_layers must be positive");
    if (kernel_size < 1 || kernel_size % 2 == 0) throw std::invalid_argument("generator: kernel_size must be odd");
    if (input_channels < 3) throw std::invalid_argument("generator: input_channels must be >= 3");
}

void to_json(json& j, const GeneratorConfig& c) {
    j = json{{"levels", c.levels},       {"residual_blocks", c.residual_blocks}, {"feature_channels", c.feature_channels},
             {"kernel_size", c.kernel_size}, {"input_channels", c.input_channels}, {"dense_layers", c.dense_layers},
             {"growth", c.growth},       {"leaky_slope", c.leaky_slope}};
}

void from_json(const json& j, GeneratorConfig& c) {
    c.levels = j.at("levels");
    c.residual_blocks = j.at("residual_blocks");
    c.feature_channels = j.at("feature_channels");
    c.kernel_size = j.at("kernel_size");
    c.input_channels = j.at("input_channels");
    c.dense_layers = j.at("dense_layers");
    c.growth = j.at("growth");
    c.leaky_slope = j.at("leaky_slope");
}

void init_dense_block(ParamStore& params, const std::string& prefix, int channels, int layers, int growth, int kernel,
                      std::mt19937_64& rng) {
    for (int k = 0; k < layers; ++k)
        add_conv(params, prefix + "dense" + std::to_string(k), growth, channels + k * growth, kernel, rng);
    // Small fusion init keeps each residual block close to identity at the start.
    add_conv(params, prefix + "fuse", channels, channels + layers * growth, 1, rng, 0.1);
}

Var dense_block_forward(const Var& x, const ParamStore& params, const std::string& prefix, int layers, double slope) {
    std::vector<Var> features{x};
    for (int k = 0; k < layers; ++k) {
        const Var in = nn::concat(features);
        features.push_back(nn::leaky_relu(conv_layer(in, params, prefix + "dense" + std::to_string(k)), slope));
    }
    return conv_layer(nn::concat(features), params, prefix + "fuse");
}

Var upsample_conv(const Var& x, const Var& weight, const Var& bias, int r, double slope) {
    return nn::leaky_relu(nn::conv2d(nn::upsample_nearest(x, r), weight, bias), slope);
}

Generator::Generator(GeneratorConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    const int f = cfg_.feature_channels, k = cfg_.kernel_size;
    add_conv(params_, "level1.adapter", f, cfg_.input_channels, k, rng);
    for (int s = 1; s <= cfg_.levels; ++s) {
        const std::string lv = level_name(s);
        for (int m = 0; m < cfg_.residual_blocks; ++m)
            init_dense_block(params_, lv + "block" + std::to_string(m) + ".", f, cfg_.dense_layers, cfg_.growth, k,
                             rng);
        add_conv(params_, lv + "up", f, f, k, rng);
        add_conv(params_, lv + "to_rgb", 3, f, k, rng, 0.1);
    }
}

Generator::Generator(GeneratorConfig cfg, ParamStore params) : cfg_(cfg), params_(std::move(params)) {
    cfg_.validate();
    Generator shape_ref(cfg_, 0);
    for (const auto& [name, v] : shape_ref.params()) {
        if (!params_.contains(name)) throw DimensionError("generator checkpoint is missing parameter " + name);
        if (params_.at(name).shape() != v.shape())
            throw DimensionError("generator parameter " + name + " has shape " + params_.at(name).value().shape_string() +
                                 ", expected " + v.value().shape_string());
    }
    if (params_.size() != shape_ref.params().size()) throw DimensionError("generator checkpoint has extra parameters");
    if (!params_.all_finite()) throw std::invalid_argument("generator parameters contain non-finite values");
}

Generator::Output Generator::forward(const Var& x) const {
    if (x.value().rank() != 3 || x.value().channels() != cfg_.input_channels)
        throw DimensionError("generator expects " + std::to_string(cfg_.input_channels) + " input channels, got " +
                             x.value().shape_string());
    const double slope = cfg_.leaky_slope;
    Output out;
    Var base = nn::slice_channels(x, cfg_.input_channels - 3, 3);
    Var feats = nn::leaky_relu(conv_layer(x, params_, "level1.adapter"), slope);
    for (int s = 1; s <= cfg_.levels; ++s) {
        const std::string lv = level_name(s);
        out.section_entry.push_back(feats);
        for (int m = 0; m < cfg_.residual_blocks; ++m)
            feats = nn::add(feats, dense_block_forward(feats, params_, lv + "block" + std::to_string(m) + ".",
                                                       cfg_.dense_layers, slope));
        out.section_exit.push_back(feats);
        feats = upsample_conv(feats, params_.at(lv + "up.w"), params_.at(lv + "up.b"), 2, slope);
        const Var residual = conv_layer(feats, params_, lv + "to_rgb");
        base = nn::clamp01(nn::add(nn::upsample_bilinear(base, 2), residual));
        out.levels.push_back(base);
    }
    return out;
}

PyramidOutput Generator::infer(const Image& lr) const {
    nn::NoGradGuard guard;
    const auto out = forward(nn::constant(nn::to_tensor(lr)));
    PyramidOutput images;
    for (const auto& v : out.levels) images.push_back(nn::to_image(v.value()));
    return images;
}

std::vector<std::string> Generator::residual_output_params() const {
    std::vector<std::string> names;
    for (int s = 1; s <= cfg_.levels; ++s) {
        names.push_back(level_name(s) + "to_rgb.w");
        names.push_back(level_name(s) + "to_rgb.b");
    }
    return names;
}

// ---- discriminator ---------------------------------------------------------------------

void DiscriminatorConfig::validate() const {
    if (stages < 0 || base_channels <= 0 || max_channels <= 0 || head_hidden <= 0)
        throw std::invalid_argument("discriminator: invalid configuration");
    if (input_size <= 0 || input_size % (1 << stages) != 0)
        throw std::invalid_argument("discriminator: input_size must be divisible by 2^stages");
}

void to_json(json& j, const DiscriminatorConfig& c) {
    j = json{{"input_size", c.input_size}, {"base_channels", c.base_channels}, {"max_channels", c.max_channels},
             {"stages", c.stages},         {"head_hidden", c.head_hidden},     {"leaky_slope", c.leaky_slope}};
}

void from_json(const json& j, DiscriminatorConfig& c) {
    c.input_size = j.at("input_size");
    c.base_channels = j.at("base_channels");
    c.max_channels = j.at("max_channels");
    c.stages = j.at("stages");
    c.head_hidden = j.at("head_hidden");
    c.leaky_slope = j.at("leaky_slope");
}

namespace {

int stage_channels(const DiscriminatorConfig& c, int stage) {
    return std::min(c.base_channels << stage, c.max_channels);
}

}  // namespace

Discriminator::Discriminator(DiscriminatorConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    add_conv(params_, "conv0", cfg_.base_channels, 3, 3, rng);
    for (int i = 1; i <= cfg_.stages; ++i)
        add_conv(params_, "stage" + std::to_string(i), stage_channels(cfg_, i), stage_channels(cfg_, i - 1), 3, rng);
    const int side = cfg_.input_size >> cfg_.stages;
    const int flat = stage_channels(cfg_, cfg_.stages) * side * side;
    params_.add("head1.w", nn::he_normal({cfg_.head_hidden, flat}, rng));
    params_.add("head1.b", nn::Tensor({cfg_.head_hidden}));
    params_.add("head2.w", nn::he_normal({1, cfg_.head_hidden}, rng));
    params_.add("head2.b", nn::Tensor({1}));
}

Discriminator::Discriminator(DiscriminatorConfig cfg, ParamStore params) : cfg_(cfg), params_(std::move(params)) {
    cfg_.validate();
    Discriminator shape_ref(cfg_, 0);
    for (const auto& [name, v] : shape_ref.params())
        if (!params_.contains(name) || params_.at(name).shape() != v.shape())
            throw DimensionError("discriminator parameter " + name + " missing or mis-shaped");
}

Var Discriminator::forward(const Var& img) const {
    const auto& t = img.value();
    if (t.rank() != 3 || t.channels() != 3 || t.height() != cfg_.input_size || t.width() != cfg_.input_size)
        throw DimensionError("discriminator accepts only (3," + std::to_string(cfg_.input_size) + "," +
                             std::to_string(cfg_.input_size) + ") inputs, got " + t.shape_string());
    const double slope = cfg_.leaky_slope;
    Var h = nn::leaky_relu(conv_layer(img, params_, "conv0"), slope);
    for (int i = 1; i <= cfg_.stages; ++i) h = nn::leaky_relu(conv_layer(h, params_, "stage" + std::to_string(i), 2), slope);
    h = nn::leaky_relu(nn::linear(h, params_.at("head1.w"), params_.at("head1.b")), slope);
    return nn::linear(h, params_.at("head2.w"), params_.at("head2.b"));
}

double Discriminator::score(const Image& img) const {
    nn::NoGradGuard guard;
    return forward(nn::constant(nn::to_tensor(img))).value().item();
}

double relativistic_probability(double c_a, double mean_c_b) {
    const double x = c_a - mean_c_b;
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// ---- feature extractor -----------------------------------------------------------------

namespace {

constexpr int kVggWidths[FeatureExtractor::kConvLayers] = {64,  64,  128, 128, 256, 256, 256, 256,
                                                           512, 512, 512, 512, 512, 512, 512, 512};

bool pool_after(int layer) { return layer == 2 || layer == 4 || layer == 8 || layer == 12; }

}  // namespace

void to_json(json& j, const ExtractorConfig& c) { j = json{{"width_scale", c.width_scale}, {"seed", c.seed}}; }
void from_json(const json& j, ExtractorConfig& c) {
    c.width_scale = j.at("width_scale");
    c.seed = j.at("seed");
}

FeatureExtractor::FeatureExtractor(ExtractorConfig cfg) : cfg_(cfg) {
    if (!(cfg_.width_scale > 0)) throw std::invalid_argument("extractor width_scale must be positive");
    std::mt19937_64 rng(cfg_.seed);
    int in = 3;
    for (int l = 1; l <= kConvLayers; ++l) {
        const int out = channels_at(l);
        weights_.push_back(nn::constant(nn::he_normal({out, in, 3, 3}, rng)));
        biases_.push_back(nn::constant(nn::Tensor({out})));
        in = out;
    }
}

int FeatureExtractor::channels_at(int layer) const {
    if (layer < 1 || layer > kConvLayers) throw std::out_of_range("extractor layer out of range");
    return std::max(1, static_cast<int>(std::lround(kVggWidths[layer - 1] * cfg_.width_scale)));
}

int FeatureExtractor::downsampling_before(int layer) {
    if (layer < 1 || layer > kConvLayers) throw std::out_of_range("extractor layer out of range");
    int f = 1;
    for (int l = 1; l < layer; ++l)
        if (pool_after(l)) f *= 2;
    return f;
}

std::vector<Var> FeatureExtractor::forward(const Var& img, const std::vector<int>& layers) const {
    if (layers.empty()) return {};
    const int deepest = *std::max_element(layers.begin(), layers.end());
    const int f = downsampling_before(deepest);
    const auto& t = img.value();
    if (t.rank() != 3 || t.channels() != 3) throw DimensionError("extractor expects (3,H,W) input");
    if (t.height() % f != 0 || t.width() % f != 0)
        throw DimensionError("extractor layer " + std::to_string(deepest) + " needs dims divisible by " +
                             std::to_string(f));
    std::vector<Var> taps(layers.size());
    Var h = img;
    for (int l = 1; l <= deepest; ++l) {
        h = nn::relu(nn::conv2d(h, weights_[l - 1], biases_[l - 1]));
        for (std::size_t i = 0; i < layers.size(); ++i)
            if (layers[i] == l) taps[i] = h;
        if (pool_after(l) && l < deepest) h = nn::maxpool2(h);
    }
    return taps;
}

Var FeatureExtractor::forward(const Var& img, int layer) const {
    if (layer < 1 || layer > kConvLayers) throw std::out_of_range("extractor layer " + std::to_string(layer));
    return forward(img, std::vector<int>{layer}).front();
}

FeatureTapConfig default_feature_taps() { return {{1, 7}, {2, 7}, {3, 16}}; }

}  // namespace zoomsr::net
