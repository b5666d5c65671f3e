#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "zoomsr/losses.hpp"
#include "zoomsr/metrics.hpp"
#include "zoomsr/networks.hpp"
#include "zoomsr/pairs.hpp"

namespace zoomsr::train {

/// A loss term became NaN or infinite; the message names the term and the iteration.
class NonFiniteError : public std::runtime_error {
public:
    NonFiniteError(const std::string& component, std::int64_t iteration);
    const std::string& component() const noexcept { return component_; }

private:
    std::string component_;
};

struct TrainConfig {
    int batch_size = 4;
    int iterations = 2000;
    double lr_generator = 1e-4;
    double lr_discriminator = 1e-4;
    std::uint64_t seed = 1;
    int crop_size = 64;              // LR crop edge; HR crops are crop_size * 2^levels
    int levels = 3;
    int eval_interval = 100;
    double warmup_fraction = 0.1;    // pixel-only iterations at the start
    bool augment = true;             // random crops and horizontal flips
    int feedback_scale = 0;          // 0: single image; otherwise video-mode recurrence scale
    double charbonnier_eps = loss::kDefaultCharbonnierEps;
    loss::LossWeights weights;
    net::FeatureTapConfig taps = net::default_feature_taps();

    void validate() const;
    int hr_crop() const { return crop_size << levels; }
    std::int64_t warmup_iterations() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
/// Missing keys keep their defaults.
void from_json(const nlohmann::json& j, TrainConfig& c);

struct StepMetrics {
    std::int64_t iteration = 0;
    double pixel = 0, content = 0, adversarial = 0, generator_total = 0, discriminator = 0;
    bool warmup = false;
};

struct HistoryRow {
    std::int64_t iteration = 0;
    StepMetrics last;
    metrics::EvalReport eval;
};

/// One training sample. `previous_lr` is only set in video mode.
struct Sample {
    TrainingPair pair;
    std::optional<Image> previous_lr;
};

/// Everything a GAN update touches. Networks and optimisers are owned here.
struct Models {
    net::Generator generator;
    net::Discriminator discriminator;
    net::FeatureExtractor extractor;
    nn::Adam opt_g, opt_d;
};

/// One discriminator update on the x8 outputs, then one generator update on the full
/// objective. Warm-up steps zero the content and adversarial weights.
StepMetrics train_step(Models& m, const std::vector<Sample>& batch, const TrainConfig& cfg, std::int64_t iteration);

/// Generator input for a sample: the LR frame, or in video mode the recurrence input built
/// from a no-grad pass over the previous frame.
Image generator_input(const net::Generator& g, const Sample& s, int feedback_scale);

class Trainer {
public:
    Trainer(TrainConfig cfg, net::GeneratorConfig gcfg, net::DiscriminatorConfig dcfg, net::ExtractorConfig ecfg,
            std::vector<Image> images);

    StepMetrics step();
    /// Runs until `config().iterations`; evaluates on the training images every eval_interval
    /// and once more at the end.
    void fit(const std::function<void(const StepMetrics&)>& on_step = {});

    std::int64_t iteration() const noexcept { return iteration_; }
    const std::vector<HistoryRow>& history() const noexcept { return history_; }
    const TrainConfig& config() const noexcept { return cfg_; }
    const Models& models() const noexcept { return m_; }
    Models& models() noexcept { return m_; }

    std::vector<Sample> sample_batch();
    metrics::EvalReport evaluate_training_set() const;

    nn::Checkpoint checkpoint() const;
    /// Restores networks, optimiser moments, RNG and history; `images` must be the same data.
    static Trainer resume(const nn::Checkpoint& ck, std::vector<Image> images);

private:
    TrainConfig cfg_;
    Models m_;
    std::vector<Image> images_;
    std::mt19937_64 rng_;
    std::int64_t iteration_ = 0;
    std::vector<HistoryRow> history_;
};

/// Header `iteration,pixel,content,adversarial,generator_total,discriminator,psnr_x2,ssim_x2,...`.
void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path);

void save_generator(const net::Generator& g, const std::filesystem::path& path);
/// Loads the generator of any checkpoint holding `g/` parameters and a `generator` config.
net::Generator load_generator(const std::filesystem::path& path);
net::Generator generator_from_checkpoint(const nn::Checkpoint& ck);

}  // namespace zoomsr::train
