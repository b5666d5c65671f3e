// zoomsr command line: data preparation, training, distillation, evaluation and the zoom pipeline.
#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "zoomsr/config.hpp"
#include "zoomsr/dataset.hpp"
#include "zoomsr/distill.hpp"
#include "zoomsr/metrics.hpp"
#include "zoomsr/pipeline.hpp"
#include "zoomsr/policy.hpp"
#include "zoomsr/train.hpp"
#include "zoomsr/video.hpp"

using namespace zoomsr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_config(const std::string& path) {
    if (path.empty()) {
        json cfg = json::object();
        config::apply_seed_override(cfg);
        return cfg;
    }
    return config::load(path);
}

// Video training needs the recurrence input width; fill it in unless set explicitly.
net::GeneratorConfig generator_for(const json& cfg, const train::TrainConfig& t, const std::string& section) {
    net::GeneratorConfig g = config::generator_config(cfg, section);
    if (t.feedback_scale > 0 && !config::section(cfg, section).contains("input_channels")) {
        g.input_channels = video::step_input_channels(t.feedback_scale);
        g.validate();
    }
    return g;
}

void print_step(const train::StepMetrics& s, std::int64_t every) {
    if (every <= 0 || s.iteration % every != 0) return;
    std::printf("iter %6lld  pixel %.5f  content %.5f  adv %.5f  G %.5f  D %.5f%s\n",
                static_cast<long long>(s.iteration), s.pixel, s.content, s.adversarial, s.generator_total,
                s.discriminator, s.warmup ? "  (warm-up)" : "");
    std::fflush(stdout);
}

void finish_training(const train::Trainer& t, const fs::path& out) {
    fs::create_directories(out);
    nn::save_checkpoint(t.checkpoint(), out / "train_state.ckpt");
    train::save_generator(t.models().generator, out / "generator.ckpt");
    train::write_history_csv(t.history(), out / "history.csv");
    std::printf("wrote %s\n", (out / "generator.ckpt").c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Depth- and context-aware zoom with multi-scale super-resolution"};
    app.require_subcommand(1);

    // prepare-data
    std::string src, data_out;
    data::SplitRatios ratios;
    std::uint64_t seed = 0;
    int synthetic = 0, synthetic_size = 512;
    auto* prep = app.add_subcommand("prepare-data", "Seeded train/val/test split with a manifest");
    prep->add_option("--src", src, "Directory of source images");
    prep->add_option("--out", data_out, "Output root")->required();
    prep->add_option("--train", ratios.train);
    prep->add_option("--val", ratios.val);
    prep->add_option("--test", ratios.test);
    prep->add_option("--seed", seed);
    prep->add_option("--synthetic", synthetic, "Render this many synthetic scenes into <out>/raw as the source");
    prep->add_option("--size", synthetic_size, "Synthetic scene edge in pixels");

    // train
    std::string config_path, data_dir, out_dir, resume;
    std::int64_t iterations = -1, log_every = 50;
    auto* train_cmd = app.add_subcommand("train", "Adversarial training of the pyramid generator");
    train_cmd->add_option("--config", config_path);
    train_cmd->add_option("--data", data_dir, "Directory of HR training images")->required();
    train_cmd->add_option("--out", out_dir)->required();
    train_cmd->add_option("--iterations", iterations, "Override train.iterations");
    train_cmd->add_option("--resume", resume, "train_state.ckpt to continue from");
    train_cmd->add_option("--log-every", log_every);

    // distill
    std::string teacher, stage1;
    int stage = 1;
    auto* distill_cmd = app.add_subcommand("distill", "Two-stage knowledge distillation into a smaller student");
    distill_cmd->add_option("--config", config_path);
    distill_cmd->add_option("--data", data_dir)->required();
    distill_cmd->add_option("--out", out_dir)->required();
    distill_cmd->add_option("--stage", stage)->check(CLI::IsMember({1, 2}));
    distill_cmd->add_option("--teacher", teacher, "Teacher generator (stage 1)");
    distill_cmd->add_option("--stage1", stage1, "Stage-1 checkpoint (stage 2; default <out>/stage1.ckpt)");
    distill_cmd->add_option("--iterations", iterations, "Override distill.iterations (stage 1) or train.iterations");
    distill_cmd->add_option("--log-every", log_every);

    // eval
    std::string generator, report;
    bool bicubic = false;
    auto* eval_cmd = app.add_subcommand("eval", "PSNR / SSIM / checkerboard report per scale");
    eval_cmd->add_option("--generator", generator);
    eval_cmd->add_option("--data", data_dir)->required();
    eval_cmd->add_option("--report", report, "CSV output path");
    eval_cmd->add_flag("--bicubic", bicubic, "Evaluate the bicubic baseline instead of a generator");

    // infer-video
    std::string frames_dir;
    int scale = 4;
    auto* video_cmd = app.add_subcommand("infer-video", "Super-resolve a frame directory");
    video_cmd->add_option("--generator", generator)->required();
    video_cmd->add_option("--frames", frames_dir)->required();
    video_cmd->add_option("--out", out_dir)->required();
    video_cmd->add_option("--scale", scale)->check(CLI::IsMember({2, 4, 8}));

    // run-pipeline / timing
    std::string roi_text;
    int min_frames = 50;
    auto* pipe_cmd = app.add_subcommand("run-pipeline", "Track, estimate depth, predict, decide and zoom");
    pipe_cmd->add_option("--config", config_path)->required();
    pipe_cmd->add_option("--roi", roi_text, "x,y,w,h (overrides pipeline.roi)");
    pipe_cmd->add_option("--out", out_dir, "Overrides pipeline.out_dir");
    auto* timing_cmd = app.add_subcommand("timing", "Median per-stage latency of the pipeline");
    timing_cmd->add_option("--config", config_path)->required();
    timing_cmd->add_option("--generator", generator, "Overrides pipeline.generator");
    timing_cmd->add_option("--frames", min_frames, "Frames to time (the input is replayed if shorter)")
        ->check(CLI::Range(50, 100000));
    timing_cmd->add_option("--out", out_dir, "Overrides pipeline.out_dir");

    // train-policy
    std::string kinematics, labels, task_name = "Suturing";
    policy::PredictorConfig pcfg;
    policy::PolicyTrainConfig ptc;
    int stride = 1;
    auto* policy_cmd = app.add_subcommand("train-policy", "Fit the next-surgeme predictor on kinematics");
    policy_cmd->add_option("--kinematics", kinematics)->required();
    policy_cmd->add_option("--labels", labels, "Gesture ranges: start end G#")->required();
    policy_cmd->add_option("--task", task_name);
    policy_cmd->add_option("--out", out_dir, "Checkpoint path")->required();
    policy_cmd->add_option("--window", pcfg.window);
    policy_cmd->add_option("--hidden", pcfg.hidden);
    policy_cmd->add_option("--stride", stride);
    policy_cmd->add_option("--epochs", ptc.epochs);
    policy_cmd->add_option("--lr", ptc.learning_rate);
    policy_cmd->add_option("--seed", ptc.seed);

    // make-sequence
    app::DemoSequenceConfig demo;
    auto* seq_cmd = app.add_subcommand("make-sequence", "Write a synthetic stereo sequence with scripted context");
    seq_cmd->add_option("--out", out_dir)->required();
    seq_cmd->add_option("--frames", demo.frames);
    seq_cmd->add_option("--height", demo.height);
    seq_cmd->add_option("--width", demo.width);
    seq_cmd->add_option("--dx", demo.dx);
    seq_cmd->add_option("--dy", demo.dy);
    seq_cmd->add_option("--disparity", demo.disparity);
    seq_cmd->add_option("--depth", demo.depth_cm);
    seq_cmd->add_option("--surgeme", demo.surgeme);
    seq_cmd->add_option("--seed", demo.seed);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*prep) {
            fs::path source = src;
            if (synthetic > 0) {
                source = fs::path(data_out) / "raw";
                data::render_synthetic_images(source, synthetic, synthetic_size, seed);
            } else if (src.empty()) {
                throw std::invalid_argument("prepare-data needs --src or --synthetic");
            }
            const auto m = data::prepare_data(source, data_out, ratios, seed);
            std::printf("train %zu  val %zu  test %zu  (seed %llu)\n", m.count("train"), m.count("val"),
                        m.count("test"), static_cast<unsigned long long>(seed));
        } else if (*train_cmd) {
            const json cfg = load_config(config_path);
            auto images = data::load_image_dir(data_dir);
            if (!resume.empty()) {
                auto t = train::Trainer::resume(nn::load_checkpoint(resume), std::move(images));
                t.fit([&](const train::StepMetrics& s) { print_step(s, log_every); });
                finish_training(t, out_dir);
                return 0;
            }
            auto tc = config::train_config(cfg);
            if (iterations > 0) tc.iterations = iterations;
            train::Trainer t(tc, generator_for(cfg, tc, "generator"), config::discriminator_config(cfg, tc),
                             config::extractor_config(cfg), std::move(images));
            t.fit([&](const train::StepMetrics& s) { print_step(s, log_every); });
            finish_training(t, out_dir);
        } else if (*distill_cmd) {
            const json cfg = load_config(config_path);
            auto images = data::load_image_dir(data_dir);
            fs::create_directories(out_dir);
            if (stage == 1) {
                if (teacher.empty()) throw std::invalid_argument("distill --stage 1 needs --teacher");
                const auto tc = config::train_config(cfg);
                auto dc = config::distill_config(cfg);
                if (iterations > 0) dc.iterations = static_cast<int>(iterations);
                distill::Distiller d(train::load_generator(teacher), generator_for(cfg, tc, "student"),
                                     config::extractor_config(cfg), dc, std::move(images));
                for (std::int64_t i = 0; i < dc.iterations; ++i) {
                    const double loss = d.step();
                    if (log_every > 0 && d.iteration() % log_every == 0)
                        std::printf("iter %6lld  distill %.6f\n", static_cast<long long>(d.iteration()), loss);
                }
                nn::save_checkpoint(d.checkpoint(), fs::path(out_dir) / "stage1.ckpt");
                std::printf("wrote %s\n", (fs::path(out_dir) / "stage1.ckpt").c_str());
            } else {
                const fs::path s1 = stage1.empty() ? fs::path(out_dir) / "stage1.ckpt" : fs::path(stage1);
                auto tc = config::train_config(cfg);
                if (iterations > 0) tc.iterations = iterations;
                auto t = distill::stage2_trainer(nn::load_checkpoint(s1), tc, config::discriminator_config(cfg, tc),
                                                 config::extractor_config(cfg), std::move(images));
                t.fit([&](const train::StepMetrics& s) { print_step(s, log_every); });
                finish_training(t, out_dir);
            }
        } else if (*eval_cmd) {
            const auto images = data::load_image_dir(data_dir);
            metrics::EvalReport r;
            if (bicubic) {
                r = metrics::evaluate_bicubic(images);
            } else {
                if (generator.empty()) throw std::invalid_argument("eval needs --generator or --bicubic");
                r = metrics::evaluate(train::load_generator(generator), images);
            }
            std::cout << metrics::format_report_table(r);
            if (!report.empty()) metrics::write_report_csv(r, report);
        } else if (*video_cmd) {
            const auto g = train::load_generator(generator);
            const VideoSequence seq = load_frames(frames_dir);
            VideoSequence out;
            out.frame_rate = seq.frame_rate;
            if (g.config().input_channels == 3) {
                const int level = ScaleFactor(scale).level();
                if (level > g.config().levels) throw std::invalid_argument("generator has too few levels");
                for (const auto& f : seq.frames) out.frames.push_back(g.infer(f).at(level - 1));
            } else {
                out = video::super_resolve_video(seq, g, scale);
            }
            save_frames(out, out_dir);
            std::printf("wrote %zu frames to %s\n", out.frames.size(), out_dir.c_str());
        } else if (*pipe_cmd || *timing_cmd) {
            auto pc = app::pipeline_config(load_config(config_path));
            if (!roi_text.empty()) pc.roi = parse_bbox(roi_text);
            if (!out_dir.empty()) pc.out_dir = out_dir;
            if (!generator.empty()) pc.generator = generator;
            if (*timing_cmd) {
                pc.min_frames = min_frames;
                pc.write_insets = false;
            }
            const auto run = app::run_pipeline(pc);
            if (*timing_cmd) {
                std::printf("%-12s %10s\n", "stage", "median_ms");
                for (const auto& row : app::timing_report(run.frames))
                    std::printf("%-12s %10.3f\n", row.stage.c_str(), row.median_ms);
                std::printf("frames %zu; timing.csv in %s\n", run.frames.size(), pc.out_dir.c_str());
            } else {
                int zoomed = 0;
                for (const auto& f : run.frames) zoomed += f.decision.factor.has_value();
                const auto problems = app::audit_log(app::read_pipeline_log(run.log_path), pc.threshold_cm);
                std::printf("%zu frames, %d zoomed; log %s\n", run.frames.size(), zoomed, run.log_path.c_str());
                for (const auto& p : problems) std::fprintf(stderr, "audit: %s\n", p.c_str());
                if (!problems.empty()) return 2;
            }
        } else if (*policy_cmd) {
            const auto task = policy::parse_task(task_name);
            const auto kin = policy::load_kinematics(kinematics);
            const auto frame_labels = policy::load_gesture_labels(labels, task, kin.size());
            const auto windows = policy::sliding_windows(kin, frame_labels, pcfg.window, stride);
            pcfg.input_dim = static_cast<int>(kin.at(0).size());
            policy::SurgemePredictor model(pcfg, ptc.seed);
            const auto losses = policy::train_predictor(model, windows, ptc);
            std::printf("%zu windows, final loss %.4f, training accuracy %.3f\n", windows.size(), losses.back(),
                        policy::accuracy(model, windows));
            policy::save_predictor(model, task, out_dir);
        } else if (*seq_cmd) {
            app::make_demo_sequence(out_dir, demo);
            std::printf("wrote %d frames to %s\n", demo.frames, out_dir.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
