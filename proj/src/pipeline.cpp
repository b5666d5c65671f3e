#include "zoomsr/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "zoomsr/config.hpp"
#include "zoomsr/synthetic.hpp"
#include "zoomsr/train.hpp"
#include "zoomsr/video.hpp"

namespace zoomsr::app {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// Non-empty, non-comment lines.
std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

std::optional<double> parse_depth(const std::string& s, const std::string& where) {
    if (s == "none" || s == "nan" || s == "-") return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        if (!std::isfinite(v)) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        throw IoError(where + ": bad depth value '" + s + "'");
    }
}

struct PixelRect {
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool empty() const { return x1 <= x0 || y1 <= y0; }
    int w() const { return x1 - x0; }
    int h() const { return y1 - y0; }
};

PixelRect clamp_box(const BBox& b, int width, int height) {
    PixelRect r;
    r.x0 = std::clamp(static_cast<int>(std::floor(b.x)), 0, width);
    r.y0 = std::clamp(static_cast<int>(std::floor(b.y)), 0, height);
    r.x1 = std::clamp(static_cast<int>(std::ceil(b.x + b.w)), 0, width);
    r.y1 = std::clamp(static_cast<int>(std::ceil(b.y + b.h)), 0, height);
    return r;
}

cv::Mat to_bgr8(const Image& img) {
    cv::Mat f(img.height(), img.width(), img.channels() == 1 ? CV_64FC1 : CV_64FC3,
              const_cast<double*>(img.data().data()));
    cv::Mat out;
    f.convertTo(out, CV_8U, 255.0);
    cv::cvtColor(out, out, img.channels() == 1 ? cv::COLOR_GRAY2BGR : cv::COLOR_RGB2BGR);
    return out;
}

std::string frame_name(const char* stem, int i) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s_%05d.png", stem, i);
    return buf;
}

std::string overlay_text(const FrameResult& r) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(1);
    if (r.depth_cm)
        s << "depth " << *r.depth_cm << " cm";
    else
        s << "depth n/a";
    s << " / " << policy::surgeme_name(r.surgeme) << " / ";
    if (r.decision.factor)
        s << "x" << r.decision.factor->value();
    else
        s << "no zoom";
    if (r.lost) s << " / lost";
    return s.str();
}

void render_frame(const Image& frame, const FrameResult& r, const std::optional<Image>& sr_valid, const fs::path& path) {
    cv::Mat canvas = to_bgr8(frame);
    const cv::Scalar box_colour = r.lost ? cv::Scalar(0, 0, 255) : cv::Scalar(0, 255, 0);
    cv::rectangle(canvas, cv::Rect2d(r.box.x, r.box.y, r.box.w, r.box.h), box_colour, 1);

    const std::string text = overlay_text(r);
    int base = 0;
    const double unit_width = cv::getTextSize(text, cv::FONT_HERSHEY_SIMPLEX, 1.0, 1, &base).width;
    const double font = std::min(std::max(0.3, canvas.cols / 500.0), (canvas.cols - 4) / unit_width);
    const cv::Size ts = cv::getTextSize(text, cv::FONT_HERSHEY_SIMPLEX, font, 1, &base);
    const int strip = ts.height + base + 4;
    cv::rectangle(canvas, cv::Rect(0, canvas.rows - strip, canvas.cols, strip), cv::Scalar(0, 0, 0), cv::FILLED);
    cv::putText(canvas, text, cv::Point(2, canvas.rows - base - 2), cv::FONT_HERSHEY_SIMPLEX, font,
                cv::Scalar(255, 255, 255), 1, cv::LINE_AA);

    if (sr_valid) {
        const cv::Mat sr = to_bgr8(*sr_valid);
        const double fit = std::min(0.4 * canvas.cols / sr.cols, 0.4 * canvas.rows / sr.rows);
        const int iw = std::max(1, static_cast<int>(sr.cols * fit)), ih = std::max(1, static_cast<int>(sr.rows * fit));
        cv::Mat inset;
        cv::resize(sr, inset, cv::Size(iw, ih), 0, 0, cv::INTER_AREA);
        const cv::Rect where(canvas.cols - iw - 2, 2, iw, ih);
        inset.copyTo(canvas(where));
        cv::rectangle(canvas, where, cv::Scalar(255, 255, 255), 1);
    }
    if (!cv::imwrite(path.string(), canvas)) throw IoError("cannot write " + path.string());
}

// Source index for processing step i when the sequence is replayed back and forth.
int ping_pong(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    const int k = i % period;
    return k < n ? k : period - k;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

void PipelineConfig::validate() const {
    if (frames_dir.empty()) throw std::invalid_argument("pipeline: frames directory is required");
    if (right_frames_dir.has_value() == depth_override.has_value())
        throw std::invalid_argument("pipeline: give exactly one of right_frames (stereo) or depth_override");
    if (!roi.valid()) throw std::invalid_argument("pipeline: roi must have positive size");
    if (!(threshold_cm > 0)) throw std::invalid_argument("pipeline: threshold_cm must be > 0");
    if (surgeme_script.has_value() == predictor.has_value())
        throw std::invalid_argument("pipeline: give exactly one of surgeme_script or predictor");
    if (predictor && !kinematics) throw std::invalid_argument("pipeline: predictor needs kinematics");
    if (generator.empty()) throw std::invalid_argument("pipeline: generator checkpoint is required");
    if (out_dir.empty()) throw std::invalid_argument("pipeline: out_dir is required");
    if (sr_input < 8) throw std::invalid_argument("pipeline: sr_input must be >= 8");
    if (min_frames < 0) throw std::invalid_argument("pipeline: min_frames must be >= 0");
    if (right_frames_dir) calibration.validate();
    kcf.validate();
}

PipelineConfig pipeline_config(const json& cfg) {
    const json& p = config::section(cfg, "pipeline");
    const json& pol = config::section(cfg, "policy");
    const json& st = config::section(cfg, "stereo");
    const json& tr = config::section(cfg, "tracker");
    auto opt_path = [&](const char* key) -> std::optional<fs::path> {
        if (!p.contains(key)) return std::nullopt;
        return fs::path(p.at(key).get<std::string>());
    };
    PipelineConfig c;
    c.frames_dir = p.value("frames", std::string());
    c.right_frames_dir = opt_path("right_frames");
    c.depth_override = opt_path("depth_override");
    if (p.contains("roi")) c.roi = parse_bbox(p.at("roi").get<std::string>());
    c.surgeme_script = opt_path("surgeme_script");
    c.predictor = opt_path("predictor");
    c.kinematics = opt_path("kinematics");
    c.generator = p.value("generator", std::string());
    c.out_dir = p.value("out_dir", std::string());
    c.render = p.value("render", c.render);
    c.write_insets = p.value("insets", c.write_insets);
    c.sr_input = p.value("sr_input", c.sr_input);
    c.min_frames = p.value("min_frames", c.min_frames);

    c.task = policy::parse_task(pol.value("task", std::string("Suturing")));
    c.threshold_cm = pol.value("threshold_cm", c.threshold_cm);

    c.calibration.focal_px = st.value("focal_px", c.calibration.focal_px);
    c.calibration.baseline_cm = st.value("baseline_cm", c.calibration.baseline_cm);
    c.stereo.block = st.value("block", c.stereo.block);
    c.stereo.d_max = st.value("d_max", c.stereo.d_max);
    c.stereo.left_right_check = st.value("left_right_check", c.stereo.left_right_check);

    c.kcf.padding = tr.value("padding", c.kcf.padding);
    c.kcf.label_sigma_factor = tr.value("label_sigma_factor", c.kcf.label_sigma_factor);
    c.kcf.kernel_sigma = tr.value("kernel_sigma", c.kcf.kernel_sigma);
    c.kcf.lambda = tr.value("lambda", c.kcf.lambda);
    c.kcf.interp = tr.value("interp", c.kcf.interp);
    return c;
}

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::Track: return "track";
        case Stage::Flow: return "flow";
        case Stage::Depth: return "depth";
        case Stage::Predict: return "predict";
        case Stage::Decide: return "decide";
        case Stage::Sr: return "sr";
        case Stage::Render: return "render";
    }
    return "?";
}

FittedRoi fit_roi(const Image& crop, int size) {
    if (crop.empty()) throw DimensionError("fit_roi: empty crop");
    const double s = static_cast<double>(size) / std::max(crop.height(), crop.width());
    FittedRoi f;
    f.valid_h = std::clamp(static_cast<int>(std::lround(crop.height() * s)), 1, size);
    f.valid_w = std::clamp(static_cast<int>(std::lround(crop.width() * s)), 1, size);
    const Image resized = bilinear_resize(crop, f.valid_h, f.valid_w);
    cv::Mat src(resized.height(), resized.width(), CV_64FC(resized.channels()),
                const_cast<double*>(resized.data().data()));
    cv::Mat dst;
    cv::copyMakeBorder(src, dst, 0, size - f.valid_h, 0, size - f.valid_w, cv::BORDER_REFLECT_101);
    f.padded = Image(size, size, resized.channels(),
                     std::vector<double>(reinterpret_cast<const double*>(dst.datastart),
                                         reinterpret_cast<const double*>(dst.dataend)));
    return f;
}

PipelineRun run_pipeline(const PipelineConfig& cfg, const std::function<void(const FrameResult&)>& on_frame,
                         bool keep_sr) {
    cfg.validate();
    const VideoSequence left = load_frames(cfg.frames_dir);
    const int n_src = static_cast<int>(left.frames.size());
    const int fh = left.frames[0].height(), fw = left.frames[0].width();

    std::optional<VideoSequence> right;
    if (cfg.right_frames_dir) {
        right = load_frames(*cfg.right_frames_dir);
        if (static_cast<int>(right->frames.size()) != n_src || !right->frames[0].same_shape(left.frames[0]))
            throw DimensionError("pipeline: left and right sequences differ in length or size");
        if (cfg.stereo.d_max >= fw) throw std::invalid_argument("pipeline: stereo d_max must be below frame width");
    }
    std::vector<std::optional<double>> override_depth;
    if (cfg.depth_override) {
        const auto lines = read_lines(*cfg.depth_override);
        if (static_cast<int>(lines.size()) < n_src)
            throw IoError(cfg.depth_override->string() + ": fewer depth values than frames");
        for (std::size_t i = 0; i < lines.size(); ++i)
            override_depth.push_back(parse_depth(lines[i], cfg.depth_override->string() + ":" + std::to_string(i + 1)));
    }

    std::vector<policy::Surgeme> script;
    std::optional<policy::SurgemePredictor> predictor;
    std::vector<std::vector<double>> kin;
    policy::Task task = cfg.task;
    if (cfg.surgeme_script) {
        for (const auto& name : read_lines(*cfg.surgeme_script)) script.push_back(policy::parse_surgeme(task, name));
        if (static_cast<int>(script.size()) < n_src)
            throw IoError(cfg.surgeme_script->string() + ": fewer surgemes than frames");
    } else {
        auto [model, model_task] = policy::load_predictor(*cfg.predictor);
        if (model_task != task) throw std::invalid_argument("pipeline: predictor was trained for another task");
        predictor.emplace(std::move(model));
        kin = policy::load_kinematics(*cfg.kinematics);
        if (static_cast<int>(kin.size()) < n_src) throw IoError("pipeline: fewer kinematic rows than frames");
        if (static_cast<int>(kin[0].size()) != predictor->config().input_dim)
            throw DimensionError("pipeline: kinematic dimensionality does not match the predictor");
    }

    const net::Generator gen = train::load_generator(cfg.generator);
    if (gen.config().levels < 3) throw std::invalid_argument("pipeline: generator needs 3 levels for x2/x4/x8");
    int feedback = 0;  // 0 = single-image generator
    if (gen.config().input_channels != 3) {
        for (int r : {2, 4, 8})
            if (video::step_input_channels(r) == gen.config().input_channels) feedback = r;
        if (feedback == 0) throw std::invalid_argument("pipeline: generator input channels fit no feedback scale");
        video::check_video_generator(gen.config(), feedback);
    }
    const video::FlowParams flow_params;

    fs::create_directories(cfg.out_dir);
    if (cfg.render) fs::create_directories(cfg.out_dir / "frames");
    if (cfg.write_insets) fs::create_directories(cfg.out_dir / "insets");

    tracker::KcfModel model = tracker::init_tracker(left.frames[0], cfg.roi, cfg.kcf);
    std::optional<video::RecurrentState> state;
    const int total = std::max(n_src, cfg.min_frames);

    PipelineRun run;
    run.frames.reserve(total);
    for (int i = 0; i < total; ++i) {
        const auto t_frame = Clock::now();
        FrameResult r;
        r.frame = i;
        r.source_frame = ping_pong(i, n_src);
        r.surgeme.task = task;
        const Image& frame = left.frames[r.source_frame];

        auto t0 = Clock::now();
        if (i == 0) {
            r.box = cfg.roi;
        } else {
            auto [det, next] = tracker::detect_and_update(model, frame);
            r.box = det.box;
            r.lost = det.lost;
            if (!det.lost) model = std::move(next);
        }
        r.times[Stage::Track] = ms_since(t0);
        r.trace.push_back("track");

        const PixelRect px = clamp_box(r.box, fw, fh);
        t0 = Clock::now();
        if (cfg.depth_override) {
            r.depth_cm = override_depth[r.source_frame];
        } else if (!px.empty()) {
            // Disparity on a horizontal band around the ROI; the full width keeps the search range.
            const int margin = cfg.stereo.block;
            int y0 = std::max(0, px.y0 - margin), y1 = std::min(fh, px.y1 + margin);
            if (y1 - y0 < cfg.stereo.block + 1) {
                y0 = std::max(0, y1 - cfg.stereo.block - 1);
                y1 = std::min(fh, y0 + cfg.stereo.block + 1);
            }
            const Image lb = crop(frame, y0, 0, y1 - y0, fw);
            const Image rb = crop(right->frames[r.source_frame], y0, 0, y1 - y0, fw);
            const stereo::DisparityMap disp = stereo::disparity(lb, rb, cfg.stereo);
            const BBox band_roi{static_cast<double>(px.x0), static_cast<double>(px.y0 - y0),
                                static_cast<double>(px.w()), static_cast<double>(px.h())};
            r.depth_cm = stereo::roi_depth(disp, band_roi, cfg.calibration).depth_cm;
        }
        r.times[Stage::Depth] = ms_since(t0);
        r.trace.push_back("depth");

        t0 = Clock::now();
        if (predictor) {
            const int win = predictor->config().window;
            policy::FeatureWindow w;
            w.reserve(win);
            for (int k = r.source_frame - win + 1; k <= r.source_frame; ++k) w.push_back(kin[std::max(0, k)]);
            r.surgeme.label = predictor->predict_class(w);
        } else {
            r.surgeme = script[r.source_frame];
        }
        r.times[Stage::Predict] = ms_since(t0);
        r.trace.push_back("predict");

        t0 = Clock::now();
        r.decision = policy::decide_zoom(r.depth_cm, r.surgeme, cfg.threshold_cm);
        if (px.empty()) r.decision.factor.reset();  // box entirely outside the frame: nothing to zoom
        r.times[Stage::Decide] = ms_since(t0);
        r.trace.push_back("decide");

        std::optional<Image> sr_valid;
        if (r.decision.factor) {
            t0 = Clock::now();
            const int f = r.decision.factor->value();
            const FittedRoi fit = fit_roi(crop(frame, px.y0, px.x0, px.h(), px.w()), cfg.sr_input);
            net::PyramidOutput levels;
            if (feedback) {
                if (!state) state = video::initial_state(cfg.sr_input, cfg.sr_input, feedback);
                const auto tf = Clock::now();
                const video::FlowField flow = state->started
                                                  ? video::estimate_flow(state->prev_lr, fit.padded, flow_params)
                                                  : Image(cfg.sr_input, cfg.sr_input, 2);
                r.times[Stage::Flow] = ms_since(tf);
                video::StepResult step = video::sr_step(*state, fit.padded, flow, gen, flow_params.max_flow);
                levels = std::move(step.levels);
                state = std::move(step.state);
            } else {
                levels = gen.infer(fit.padded);
            }
            const Image& out = levels.at(r.decision.factor->level() - 1);
            r.sr = crop(out, 0, 0, fit.valid_h * f, fit.valid_w * f);
            sr_valid = r.sr;
            r.times[Stage::Sr] = ms_since(t0) - r.times[Stage::Flow];
            r.trace.push_back("sr");
            if (cfg.write_insets) save_image(*r.sr, cfg.out_dir / "insets" / frame_name("inset", i));
        } else {
            state.reset();  // the recurrence restarts after a gap
        }

        if (cfg.render) {
            t0 = Clock::now();
            render_frame(frame, r, sr_valid, cfg.out_dir / "frames" / frame_name("frame", i));
            r.times[Stage::Render] = ms_since(t0);
            r.trace.push_back("render");
        }
        r.times.total = ms_since(t_frame);

        if (on_frame) on_frame(r);
        if (!keep_sr) r.sr.reset();
        run.frames.push_back(std::move(r));
    }

    run.log_path = cfg.out_dir / "pipeline_log.csv";
    write_pipeline_log(run.frames, run.log_path);
    write_timing_csv(timing_report(run.frames), cfg.out_dir / "timing.csv");
    return run;
}

void write_pipeline_log(const std::vector<FrameResult>& rows, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << kLogHeader << '\n';
    for (const auto& r : rows) {
        std::string stages;
        for (const auto& s : r.trace) stages += (stages.empty() ? "" : ">") + s;
        out << r.frame << ',' << r.source_frame << ',' << fmt_double(r.box.x) << ',' << fmt_double(r.box.y) << ','
            << fmt_double(r.box.w) << ',' << fmt_double(r.box.h) << ',' << (r.lost ? 1 : 0) << ','
            << (r.depth_cm ? fmt_double(*r.depth_cm) : "none") << ',' << policy::task_name(r.surgeme.task) << ','
            << policy::surgeme_name(r.surgeme) << ','
            << (r.decision.factor ? std::to_string(r.decision.factor->value()) : "none") << ',' << stages << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<FrameResult> read_pipeline_log(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != kLogHeader) throw IoError(path.string() + ": unexpected header");
    std::vector<FrameResult> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        const auto f = split(trim(line), ',');
        if (f.size() != 12) throw IoError(where + ": expected 12 fields");
        try {
            FrameResult r;
            r.frame = std::stoi(f[0]);
            r.source_frame = std::stoi(f[1]);
            r.box = BBox{std::stod(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5])};
            r.lost = f[6] == "1";
            r.depth_cm = parse_depth(f[7], where);
            r.surgeme = policy::parse_surgeme(policy::parse_task(f[8]), f[9]);
            if (f[10] != "none") r.decision.factor = ScaleFactor(std::stoi(f[10]));
            r.trace = split(f[11], '>');
            rows.push_back(std::move(r));
        } catch (const IoError&) {
            throw;
        } catch (const std::exception& e) {
            throw IoError(where + ": " + e.what());
        }
    }
    return rows;
}

bool valid_trace(const std::vector<std::string>& trace, bool has_factor) {
    std::vector<std::string> want{"track", "depth", "predict", "decide"};
    if (has_factor) want.push_back("sr");
    if (trace.size() == want.size() + 1) want.push_back("render");
    return trace == want;
}

std::vector<std::string> audit_log(const std::vector<FrameResult>& rows, double threshold_cm) {
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const std::string at = "row " + std::to_string(i) + " (frame " + std::to_string(r.frame) + ")";
        if (r.frame != static_cast<int>(i)) problems.push_back(at + ": frame index out of sequence");
        policy::ZoomDecision expect = policy::decide_zoom(r.depth_cm, r.surgeme, threshold_cm);
        // A gated decision can only be dropped when the box left the frame.
        if (!(r.decision == expect) && !(expect.factor && !r.decision.factor && r.lost))
            problems.push_back(at + ": decision differs from decide_zoom(depth, surgeme)");
        if (!valid_trace(r.trace, r.decision.factor.has_value())) problems.push_back(at + ": stage order violated");
    }
    return problems;
}

std::vector<TimingRow> timing_report(const std::vector<FrameResult>& frames) {
    std::vector<TimingRow> rows;
    for (Stage s : {Stage::Track, Stage::Flow, Stage::Depth, Stage::Predict, Stage::Sr, Stage::Render}) {
        std::vector<double> v;
        for (const auto& f : frames) v.push_back(f.times[s]);
        rows.push_back({stage_name(s), median(v)});
    }
    std::vector<double> total;
    for (const auto& f : frames) total.push_back(f.times.total);
    rows.push_back({"end_to_end", median(total)});
    return rows;
}

void write_timing_csv(const std::vector<TimingRow>& rows, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "stage,median_ms\n";
    for (const auto& r : rows) out << r.stage << ',' << fmt_double(r.median_ms) << '\n';
}

void make_demo_sequence(const fs::path& dir, const DemoSequenceConfig& cfg) {
    if (cfg.frames < 1 || cfg.disparity < 0 || cfg.disparity >= cfg.width)
        throw std::invalid_argument("demo sequence: need frames >= 1 and 0 <= disparity < width");
    policy::parse_surgeme(cfg.task, cfg.surgeme);  // validates the name
    // One wide pan; the right view sees every point `disparity` pixels further left.
    const VideoSequence wide =
        synthetic::panning_sequence(cfg.height, cfg.width + cfg.disparity, cfg.frames, cfg.dx, cfg.dy, cfg.seed);
    VideoSequence l, r;
    for (const auto& f : wide.frames) {
        l.frames.push_back(crop(f, 0, 0, cfg.height, cfg.width));
        r.frames.push_back(crop(f, 0, cfg.disparity, cfg.height, cfg.width));
    }
    save_frames(l, dir / "left");
    save_frames(r, dir / "right");
    std::ofstream depth(dir / "depth.txt"), script(dir / "surgemes.txt");
    for (int i = 0; i < cfg.frames; ++i) {
        depth << fmt_double(cfg.depth_cm) << '\n';
        script << cfg.surgeme << '\n';
    }
}

}  // namespace zoomsr::app
