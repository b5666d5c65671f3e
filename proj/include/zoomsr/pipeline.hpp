#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "zoomsr/geometry.hpp"
#include "zoomsr/image.hpp"
#include "zoomsr/policy.hpp"
#include "zoomsr/stereo.hpp"
#include "zoomsr/tracker.hpp"

namespace zoomsr::app {

namespace fs = std::filesystem;

struct PipelineConfig {
    fs::path frames_dir;                       // left (or only) view
    std::optional<fs::path> right_frames_dir;  // stereo depth ...
    std::optional<fs::path> depth_override;    // ... or one depth value (cm) per line; exactly one of the two
    stereo::StereoCalibration calibration;
    stereo::StereoParams stereo;
    BBox roi;
    tracker::KcfParams kcf;

    policy::Task task = policy::Task::Suturing;
    double threshold_cm = policy::kDefaultDepthThresholdCm;
    std::optional<fs::path> surgeme_script;  // one surgeme name per frame ...
    std::optional<fs::path> predictor;       // ... or a trained predictor plus kinematics
    std::optional<fs::path> kinematics;

    fs::path generator;  // single-image or video generator checkpoint
    fs::path out_dir;
    bool render = true;       // annotated frames in out_dir/frames
    bool write_insets = true; // SR crops in out_dir/insets
    int sr_input = 64;        // ROI is fitted into sr_input x sr_input before SR
    int min_frames = 0;       // replay the sequence back and forth until this many frames ran

    void validate() const;
};

/// Reads the `pipeline`, `policy`, `stereo` and `tracker` sections.
PipelineConfig pipeline_config(const nlohmann::json& cfg);

enum class Stage { Track, Flow, Depth, Predict, Decide, Sr, Render };
inline constexpr std::array<Stage, 7> kAllStages{Stage::Track, Stage::Flow,   Stage::Depth, Stage::Predict,
                                                 Stage::Decide, Stage::Sr, Stage::Render};
std::string stage_name(Stage s);

/// Per-frame wall-clock milliseconds by stage; stages that did not run stay 0.
struct StageTimes {
    std::array<double, kAllStages.size()> ms{};
    double total = 0.0;
    double& operator[](Stage s) { return ms[static_cast<std::size_t>(s)]; }
    double operator[](Stage s) const { return ms[static_cast<std::size_t>(s)]; }
};

struct FrameResult {
    int frame = 0;         // processing index
    int source_frame = 0;  // index into the input sequence
    BBox box;
    bool lost = false;
    std::optional<double> depth_cm;
    policy::Surgeme surgeme;
    policy::ZoomDecision decision;
    std::optional<Image> sr;  // SR ROI, present iff decision.factor
    std::vector<std::string> trace;  // executed stages in order, e.g. track>depth>predict>decide>sr>render
    StageTimes times;
};

struct PipelineRun {
    std::vector<FrameResult> frames;  // sr images are dropped unless keep_sr was requested
    fs::path log_path;
};

/// Runs track -> depth -> predict -> decide -> super-resolve -> render for every frame, writing
/// out_dir/pipeline_log.csv, out_dir/timing.csv and the rendered outputs. `on_frame` sees each
/// result (with its SR image) before it is stored.
PipelineRun run_pipeline(const PipelineConfig& cfg, const std::function<void(const FrameResult&)>& on_frame = {},
                         bool keep_sr = false);

inline constexpr const char* kLogHeader = "frame,source_frame,x,y,w,h,lost,depth_cm,task,surgeme,factor,stages";

void write_pipeline_log(const std::vector<FrameResult>& rows, const fs::path& path);
std::vector<FrameResult> read_pipeline_log(const fs::path& path);

/// Offline audit of a log: every decision must equal decide_zoom(depth, surgeme) and every trace
/// must follow the fixed stage order. Returns a description per violation.
std::vector<std::string> audit_log(const std::vector<FrameResult>& rows, double threshold_cm);
bool valid_trace(const std::vector<std::string>& trace, bool has_factor);

struct TimingRow {
    std::string stage;
    double median_ms = 0.0;
};

/// Median per stage (track, flow, depth, predict, sr, render) and end-to-end.
std::vector<TimingRow> timing_report(const std::vector<FrameResult>& frames);
void write_timing_csv(const std::vector<TimingRow>& rows, const fs::path& path);

struct DemoSequenceConfig {
    int frames = 60;
    int height = 96;
    int width = 160;
    double dx = 2.0, dy = 0.0;  // pan per frame
    int disparity = 18;         // constant stereo disparity, pixels
    double depth_cm = 19.6;     // written to depth.txt
    std::string surgeme = "PositioningNeedle";
    policy::Task task = policy::Task::Suturing;
    std::uint64_t seed = 7;
};

/// Writes left/, right/, depth.txt and surgemes.txt under dir.
void make_demo_sequence(const fs::path& dir, const DemoSequenceConfig& cfg);

/// Fits an (h, w) crop into size x size: bilinear resize with aspect preserved, then reflect
/// padding at the bottom and right. Returns the padded image and the resized extent.
struct FittedRoi {
    Image padded;
    int valid_h = 0, valid_w = 0;
};
FittedRoi fit_roi(const Image& crop, int size);

}  // namespace zoomsr::app
