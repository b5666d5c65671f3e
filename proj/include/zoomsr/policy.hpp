#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "zoomsr/image.hpp"
#include "zoomsr/nn/params.hpp"

namespace zoomsr::policy {

enum class Task { Suturing, KnotTying };

Task parse_task(const std::string& name);
std::string task_name(Task t);

inline constexpr int kSurgemeClasses = 4;

/// label 0 is Others; 1..3 are the task's named operations in the order
/// Suturing: PositioningNeedle, OrientingNeedle, PushingNeedleThroughTissue;
/// KnotTying: ReachingAndDroppingNeedle, ReachingAndMakingCLoop, ReachingAndPulling.
struct Surgeme {
    Task task = Task::Suturing;
    int label = 0;

    friend bool operator==(const Surgeme&, const Surgeme&) = default;
};

std::string surgeme_name(const Surgeme& s);
Surgeme parse_surgeme(Task task, const std::string& name);
/// JIGSAWS gesture id ("G1" .. "G15") to this task's surgeme; unnamed gestures become Others.
Surgeme surgeme_from_gesture(Task task, const std::string& gesture);

std::optional<ScaleFactor> surgeme_to_factor(const Surgeme& s);

inline constexpr double kDefaultDepthThresholdCm = 10.0;

/// True iff a depth exists and exceeds the threshold.
bool depth_gate(std::optional<double> depth_cm, double threshold_cm = kDefaultDepthThresholdCm);

struct ZoomDecision {
    std::optional<ScaleFactor> factor;
    friend bool operator==(const ZoomDecision&, const ZoomDecision&) = default;
};

ZoomDecision decide_zoom(std::optional<double> depth_cm, const Surgeme& s,
                         double threshold_cm = kDefaultDepthThresholdCm);

// ---- recurrent surgeme predictor ------------------------------------------------------

using FeatureWindow = std::vector<std::vector<double>>;  // [frame][feature]

struct PredictorConfig {
    int input_dim = 0;
    int hidden = 64;
    int classes = kSurgemeClasses;
    int window = 30;

    void validate() const;
};

/// Single GRU layer over the window followed by a linear head on the last hidden state.
/// Features are standardised with stored per-feature statistics before the GRU.
class SurgemePredictor {
public:
    SurgemePredictor(PredictorConfig cfg, std::uint64_t seed);
    SurgemePredictor(PredictorConfig cfg, nn::ParamStore params, std::vector<double> mean, std::vector<double> stddev);

    nn::Var logits(const FeatureWindow& window) const;
    int predict_class(const FeatureWindow& window) const;

    const PredictorConfig& config() const noexcept { return cfg_; }
    nn::ParamStore& params() noexcept { return params_; }
    const nn::ParamStore& params() const noexcept { return params_; }
    const std::vector<double>& feature_mean() const noexcept { return mean_; }
    const std::vector<double>& feature_std() const noexcept { return std_; }
    void set_normalisation(std::vector<double> mean, std::vector<double> stddev);

private:
    PredictorConfig cfg_;
    nn::ParamStore params_;
    std::vector<double> mean_, std_;
};

struct LabeledWindow {
    FeatureWindow features;
    int label = 0;
};

struct PolicyTrainConfig {
    int epochs = 30;
    int batch_size = 8;
    double learning_rate = 3e-3;
    std::uint64_t seed = 1;
};

/// Fits normalisation statistics, then Adam on mean cross-entropy over shuffled mini-batches.
/// Returns the mean training loss per epoch.
std::vector<double> train_predictor(SurgemePredictor& model, const std::vector<LabeledWindow>& data,
                                    const PolicyTrainConfig& cfg);
double accuracy(const SurgemePredictor& model, const std::vector<LabeledWindow>& data);

/// Windows of `window` frames ending at t, labelled with frame t + 1 (next-gesture prediction).
std::vector<LabeledWindow> sliding_windows(const std::vector<std::vector<double>>& kinematics,
                                           const std::vector<int>& frame_labels, int window, int stride = 1);

/// Numeric rows separated by whitespace, commas or semicolons; '#' starts a comment.
std::vector<std::vector<double>> load_kinematics(const std::filesystem::path& path);
/// JIGSAWS transcription lines "start end G<k>" (1-based inclusive frames) to per-frame labels;
/// frames not covered are Others.
std::vector<int> load_gesture_labels(const std::filesystem::path& path, Task task, std::size_t frame_count);

void save_predictor(const SurgemePredictor& model, Task task, const std::filesystem::path& path);
std::pair<SurgemePredictor, Task> load_predictor(const std::filesystem::path& path);

}  // namespace zoomsr::policy
