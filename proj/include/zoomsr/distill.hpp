#pragma once

#include <random>
#include <vector>

#include "zoomsr/networks.hpp"
#include "zoomsr/train.hpp"

namespace zoomsr::distill {

using nn::Var;

struct DistillConfig {
    int iterations = 500;
    int batch_size = 2;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
    int crop_size = 8;          // LR crop edge, as in training
    bool fixed_batch = false;   // reuse one centre-cropped batch every step
    int output_layer = 16;      // extractor layer compared on the final outputs

    void validate() const;
};

void to_json(nlohmann::json& j, const DistillConfig& c);
void from_json(const nlohmann::json& j, DistillConfig& c);

/// Section taps of a forward pass: entry and exit of every level's trunk (2 per level).
std::vector<Var> section_taps(const net::Generator::Output& out);

/// Optional 1x1 projections mapping student tap channels onto the teacher's, keyed "tap{i}.w/b".
/// Empty when every tap already agrees.
nn::ParamStore make_projections(const net::GeneratorConfig& teacher, const net::GeneratorConfig& student,
                                std::uint64_t seed);

/// Sum over taps of mean squared feature difference plus the mean squared difference of the
/// extractor features of the final (deepest) outputs.
Var distill_loss(const net::Generator::Output& teacher, const net::Generator::Output& student,
                 const nn::ParamStore& projections, const net::FeatureExtractor& extractor, int output_layer);

class Distiller {
public:
    Distiller(net::Generator teacher, net::GeneratorConfig student_cfg, net::ExtractorConfig ecfg, DistillConfig cfg,
              std::vector<Image> images);

    /// One Adam step of the student (and projections) on the distill loss; returns the loss.
    double step();
    std::vector<double> fit();

    const net::Generator& teacher() const noexcept { return teacher_; }
    const net::Generator& student() const noexcept { return student_; }
    const nn::ParamStore& projections() const noexcept { return projections_; }
    std::int64_t iteration() const noexcept { return iteration_; }

    /// Stage-1 checkpoint: student weights, config and the stage marker.
    nn::Checkpoint checkpoint() const;

private:
    std::vector<Image> next_batch();

    DistillConfig cfg_;
    net::Generator teacher_, student_;
    net::FeatureExtractor extractor_;
    nn::ParamStore projections_;
    nn::Adam opt_;
    std::vector<Image> images_;
    std::mt19937_64 rng_;
    std::int64_t iteration_ = 0;
};

bool is_stage1_checkpoint(const nn::Checkpoint& ck);

/// Stage 2: a regular trainer whose generator starts from the retained stage-1 student.
/// Throws std::invalid_argument unless `stage1` carries the stage-1 marker.
train::Trainer stage2_trainer(const nn::Checkpoint& stage1, train::TrainConfig cfg, net::DiscriminatorConfig dcfg,
                              net::ExtractorConfig ecfg, std::vector<Image> images);

/// Median wall-clock milliseconds of `repeats` inference passes on `input`.
double median_latency_ms(const net::Generator& g, const Image& input, int repeats = 20);

}  // namespace zoomsr::distill
