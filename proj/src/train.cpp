#include "zoomsr/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "zoomsr/video.hpp"

namespace zoomsr::train {

using nlohmann::json;
using nn::Var;

NonFiniteError::NonFiniteError(const std::string& component, std::int64_t iteration)
    : std::runtime_error("non-finite " + component + " loss at iteration " + std::to_string(iteration)),
      component_(component) {}

void TrainConfig::validate() const {
    if (batch_size < 1 || iterations < 0 || eval_interval < 1)
        throw std::invalid_argument("train config: batch_size and eval_interval must be >= 1, iterations >= 0");
    if (!(lr_generator > 0) || !(lr_discriminator > 0)) throw std::invalid_argument("learning rates must be positive");
    if (crop_size < 1 || crop_size % 8 != 0) throw std::invalid_argument("crop_size must be a positive multiple of 8");
    if (levels < 1) throw std::invalid_argument("levels must be >= 1");
    if (warmup_fraction < 0 || warmup_fraction > 1) throw std::invalid_argument("warmup_fraction must lie in [0,1]");
    if (feedback_scale != 0) {
        if (feedback_scale < 2 || (feedback_scale & (feedback_scale - 1)) != 0 || feedback_scale > (1 << levels))
            throw std::invalid_argument("feedback_scale must be 0 or a power of two up to 2^levels");
    }
    if (!(charbonnier_eps > 0)) throw std::invalid_argument("charbonnier_eps must be positive");
    weights.validate();
}

std::int64_t TrainConfig::warmup_iterations() const {
    return static_cast<std::int64_t>(std::llround(warmup_fraction * iterations));
}

void to_json(json& j, const TrainConfig& c) {
    json taps = json::object();
    for (const auto& [level, layer] : c.taps) taps[std::to_string(level)] = layer;
    j = json{{"batch_size", c.batch_size},
             {"iterations", c.iterations},
             {"lr_generator", c.lr_generator},
             {"lr_discriminator", c.lr_discriminator},
             {"seed", c.seed},
             {"crop_size", c.crop_size},
             {"levels", c.levels},
             {"eval_interval", c.eval_interval},
             {"warmup_fraction", c.warmup_fraction},
             {"augment", c.augment},
             {"feedback_scale", c.feedback_scale},
             {"charbonnier_eps", c.charbonnier_eps},
             {"mu", c.weights.mu},
             {"eta", c.weights.eta},
             {"lambda", c.weights.lambda},
             {"taps", taps}};
}

void from_json(const json& j, TrainConfig& c) {
    const TrainConfig d;
    c.batch_size = j.value("batch_size", d.batch_size);
    c.iterations = j.value("iterations", d.iterations);
    c.lr_generator = j.value("lr_generator", d.lr_generator);
    c.lr_discriminator = j.value("lr_discriminator", d.lr_discriminator);
    c.seed = j.value("seed", d.seed);
    c.crop_size = j.value("crop_size", d.crop_size);
    c.levels = j.value("levels", d.levels);
    c.eval_interval = j.value("eval_interval", d.eval_interval);
    c.warmup_fraction = j.value("warmup_fraction", d.warmup_fraction);
    c.augment = j.value("augment", d.augment);
    c.feedback_scale = j.value("feedback_scale", d.feedback_scale);
    c.charbonnier_eps = j.value("charbonnier_eps", d.charbonnier_eps);
    c.weights.mu = j.value("mu", d.weights.mu);
    c.weights.eta = j.value("eta", d.weights.eta);
    c.weights.lambda = j.value("lambda", d.weights.lambda);
    c.taps = d.taps;
    if (j.contains("taps")) {
        c.taps.clear();
        for (const auto& [level, layer] : j.at("taps").items()) c.taps[std::stoi(level)] = layer.get<int>();
    }
}

// ---- one update --------------------------------------------------------------------------

Image generator_input(const net::Generator& g, const Sample& s, int feedback_scale) {
    if (feedback_scale == 0) return s.pair.lr;
    if (!s.previous_lr) throw std::invalid_argument("video-mode sample without a previous frame");
    const auto first = video::sr_step(video::initial_state(s.pair.lr.height(), s.pair.lr.width(), feedback_scale),
                                      *s.previous_lr, g);
    const auto flow = video::estimate_flow(*s.previous_lr, s.pair.lr);
    return video::build_step_input(first.state, s.pair.lr, flow, video::FlowParams{}.max_flow);
}

namespace {

void require_finite(const Var& v, const char* component, std::int64_t iteration) {
    if (!std::isfinite(v.value().item())) throw NonFiniteError(component, iteration);
}

Var batch_mean(const std::vector<Var>& terms) {
    return nn::weighted_sum(terms, std::vector<double>(terms.size(), 1.0 / static_cast<double>(terms.size())));
}

}  // namespace

StepMetrics train_step(Models& m, const std::vector<Sample>& batch, const TrainConfig& cfg, std::int64_t iteration) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    const int levels = cfg.levels;
    if (m.generator.config().levels != levels) throw DimensionError("generator levels differ from train config");
    const int top = 1 << levels;
    const bool warm = iteration < cfg.warmup_iterations();
    const double eta = warm ? 0.0 : cfg.weights.eta;
    const double lambda = warm ? 0.0 : cfg.weights.lambda;

    std::vector<net::Generator::Output> outs;
    std::vector<Var> real_top;
    for (const auto& s : batch) {
        const Image input = generator_input(m.generator, s, cfg.feedback_scale);
        outs.push_back(m.generator.forward(nn::constant(nn::to_tensor(input))));
        real_top.push_back(nn::constant(nn::to_tensor(s.pair.targets.at(top))));
        if (outs.back().levels.back().value().height() != m.discriminator.config().input_size)
            throw DimensionError("discriminator only accepts the x" + std::to_string(top) + " output");
    }

    StepMetrics out;
    out.iteration = iteration;
    out.warmup = warm;

    // Discriminator: real x8 targets against detached x8 generator outputs.
    {
        std::vector<Var> cr, cf;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            cr.push_back(m.discriminator.forward(real_top[i]));
            cf.push_back(m.discriminator.forward(nn::constant(outs[i].levels.back().value())));
        }
        const Var d_loss = loss::adversarial_loss_discriminator(nn::stack(cr), nn::stack(cf));
        require_finite(d_loss, "discriminator", iteration);
        m.discriminator.params().zero_grad();
        nn::backward(d_loss);
        m.opt_d.step(m.discriminator.params());
        out.discriminator = d_loss.value().item();
    }

    // Generator.
    std::vector<Var> pixel_terms, content_terms;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        std::vector<Var> per_level;
        for (int s = 1; s <= levels; ++s)
            per_level.push_back(loss::pixel_loss(nn::constant(nn::to_tensor(batch[i].pair.targets.at(1 << s))),
                                                 outs[i].levels[s - 1], cfg.charbonnier_eps));
        pixel_terms.push_back(nn::weighted_sum(per_level, std::vector<double>(per_level.size(), 1.0)));
        if (eta > 0) {
            std::vector<Var> per_tap;
            for (const auto& [level, layer] : cfg.taps) {
                if (level > levels) continue;
                Var target;
                {
                    nn::NoGradGuard guard;
                    target = m.extractor.forward(
                        nn::constant(nn::to_tensor(batch[i].pair.targets.at(1 << level))), layer);
                }
                per_tap.push_back(loss::content_loss(nn::constant(target.value()),
                                                     m.extractor.forward(outs[i].levels[level - 1], layer),
                                                     cfg.charbonnier_eps));
            }
            if (!per_tap.empty())
                content_terms.push_back(nn::weighted_sum(per_tap, std::vector<double>(per_tap.size(), 1.0)));
        }
    }
    const Var pixel = batch_mean(pixel_terms);
    const Var content = content_terms.empty() ? nn::constant(nn::Tensor::scalar(0.0)) : batch_mean(content_terms);
    Var adv = nn::constant(nn::Tensor::scalar(0.0));
    if (lambda > 0) {
        std::vector<Var> cr, cf;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            {
                nn::NoGradGuard guard;
                cr.push_back(nn::constant(m.discriminator.forward(real_top[i]).value()));
            }
            cf.push_back(m.discriminator.forward(outs[i].levels.back()));
        }
        adv = loss::adversarial_loss_generator(nn::stack(cr), nn::stack(cf));
    }
    require_finite(pixel, "pixel", iteration);
    require_finite(content, "content", iteration);
    require_finite(adv, "adversarial", iteration);
    const Var total = loss::perceptual_total(pixel, content, adv, loss::LossWeights{cfg.weights.mu, eta, lambda});
    require_finite(total, "generator total", iteration);

    m.generator.params().zero_grad();
    nn::backward(total);
    m.opt_g.step(m.generator.params());
    m.discriminator.params().zero_grad();

    out.pixel = pixel.value().item();
    out.content = content.value().item();
    out.adversarial = adv.value().item();
    out.generator_total = total.value().item();
    return out;
}

// ---- trainer -----------------------------------------------------------------------------

namespace {

Models make_models(const TrainConfig& cfg, const net::GeneratorConfig& g, net::DiscriminatorConfig d,
                   const net::ExtractorConfig& e) {
    if (g.levels != cfg.levels) throw std::invalid_argument("generator levels differ from train.levels");
    const int expected_in = cfg.feedback_scale == 0 ? 3 : video::step_input_channels(cfg.feedback_scale);
    if (g.input_channels != expected_in)
        throw DimensionError("generator input_channels " + std::to_string(g.input_channels) + " but training needs " +
                             std::to_string(expected_in));
    if (d.input_size != cfg.hr_crop())
        throw DimensionError("discriminator input_size must equal the HR crop (" + std::to_string(cfg.hr_crop()) + ")");
    return Models{net::Generator(g, cfg.seed * 2 + 1), net::Discriminator(d, cfg.seed * 2 + 2),
                  net::FeatureExtractor(e), nn::Adam(nn::AdamConfig{cfg.lr_generator}),
                  nn::Adam(nn::AdamConfig{cfg.lr_discriminator})};
}

json report_to_json(const metrics::EvalReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"scale", row.scale},
                        {"psnr", std::isfinite(row.psnr_mean) ? json(row.psnr_mean) : json("inf")},
                        {"ssim", row.ssim_mean},
                        {"checkerboard", row.checkerboard_mean},
                        {"count", row.count},
                        {"infinite_psnr", row.infinite_psnr}});
    return rows;
}

metrics::EvalReport report_from_json(const json& j) {
    metrics::EvalReport r;
    for (const auto& row : j) {
        metrics::EvalRow e;
        e.scale = row.at("scale");
        e.psnr_mean = row.at("psnr").is_string() ? metrics::kInfinitePsnr : row.at("psnr").get<double>();
        e.ssim_mean = row.at("ssim");
        e.checkerboard_mean = row.at("checkerboard");
        e.count = row.at("count");
        e.infinite_psnr = row.at("infinite_psnr");
        r.rows.push_back(e);
    }
    return r;
}

json metrics_to_json(const StepMetrics& m) {
    return {{"iteration", m.iteration}, {"pixel", m.pixel},  {"content", m.content}, {"adversarial", m.adversarial},
            {"generator_total", m.generator_total}, {"discriminator", m.discriminator}, {"warmup", m.warmup}};
}

StepMetrics metrics_from_json(const json& j) {
    return {j.at("iteration"), j.at("pixel"),         j.at("content"), j.at("adversarial"),
            j.at("generator_total"), j.at("discriminator"), j.at("warmup")};
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, net::GeneratorConfig gcfg, net::DiscriminatorConfig dcfg, net::ExtractorConfig ecfg,
                 std::vector<Image> images)
    : cfg_((cfg.validate(), cfg)),
      m_(make_models(cfg_, gcfg, dcfg, ecfg)),
      images_(std::move(images)),
      rng_(cfg_.seed) {
    if (images_.empty()) throw std::invalid_argument("trainer needs at least one image");
    for (const auto& img : images_)
        if (img.height() < cfg_.hr_crop() || img.width() < cfg_.hr_crop() || img.channels() != 3)
            throw DimensionError("training image smaller than the " + std::to_string(cfg_.hr_crop()) +
                                 " px HR crop or not RGB");
}

std::vector<Sample> Trainer::sample_batch() {
    const int crop = cfg_.hr_crop(), step = 1 << cfg_.levels;
    std::vector<Sample> batch;
    for (int b = 0; b < cfg_.batch_size; ++b) {
        const Image& img = images_[std::uniform_int_distribution<std::size_t>(0, images_.size() - 1)(rng_)];
        int y = (img.height() - crop) / 2, x = (img.width() - crop) / 2;
        bool flip = false;
        if (cfg_.augment) {
            y = std::uniform_int_distribution<int>(0, img.height() - crop)(rng_);
            x = std::uniform_int_distribution<int>(0, img.width() - crop)(rng_);
            flip = std::bernoulli_distribution(0.5)(rng_);
        }
        auto cut = [&](int cy, int cx) {
            Image c = zoomsr::crop(img, cy, cx, crop, crop);
            return flip ? flip_horizontal(c) : c;
        };
        Sample s;
        s.pair = synthesize_pairs(cut(y, x), cfg_.levels);
        if (cfg_.feedback_scale != 0) {
            // Pseudo-motion: the previous frame views the same image shifted by whole LR pixels.
            std::uniform_int_distribution<int> shift(-2, 2);
            const int py = std::clamp(y + shift(rng_) * step, 0, img.height() - crop);
            const int px = std::clamp(x + shift(rng_) * step, 0, img.width() - crop);
            s.previous_lr = bilinear_downsample(cut(py, px), step);
        }
        batch.push_back(std::move(s));
    }
    return batch;
}

StepMetrics Trainer::step() {
    const auto batch = sample_batch();
    const StepMetrics metrics = train_step(m_, batch, cfg_, iteration_);
    ++iteration_;
    if (iteration_ % cfg_.eval_interval == 0) history_.push_back({iteration_, metrics, evaluate_training_set()});
    return metrics;
}

void Trainer::fit(const std::function<void(const StepMetrics&)>& on_step) {
    while (iteration_ < cfg_.iterations) {
        const StepMetrics m = step();
        if (on_step) on_step(m);
        // Close with an evaluation row unless the last step already produced one.
        if (iteration_ == cfg_.iterations && iteration_ % cfg_.eval_interval != 0)
            history_.push_back({iteration_, m, evaluate_training_set()});
    }
}

metrics::EvalReport Trainer::evaluate_training_set() const {
    const int crop = cfg_.hr_crop();
    std::vector<Image> crops;
    for (const auto& img : images_)
        crops.push_back(zoomsr::crop(img, (img.height() - crop) / 2, (img.width() - crop) / 2, crop, crop));
    return metrics::evaluate(m_.generator, crops);
}

nn::Checkpoint Trainer::checkpoint() const {
    nn::Checkpoint ck;
    ck.meta["kind"] = "zoomsr_train";
    ck.meta["train"] = cfg_;
    ck.meta["generator"] = m_.generator.config();
    ck.meta["discriminator"] = m_.discriminator.config();
    ck.meta["extractor"] = m_.extractor.config();
    ck.meta["iteration"] = iteration_;
    std::ostringstream rng;
    rng << rng_;
    ck.meta["rng"] = rng.str();
    ck.meta["opt_g_steps"] = m_.opt_g.steps();
    ck.meta["opt_d_steps"] = m_.opt_d.steps();
    json hist = json::array();
    for (const auto& h : history_)
        hist.push_back({{"iteration", h.iteration}, {"last", metrics_to_json(h.last)}, {"eval", report_to_json(h.eval)}});
    ck.meta["history"] = hist;
    ck.put_params(m_.generator.params(), "g/");
    ck.put_params(m_.discriminator.params(), "d/");
    m_.opt_g.export_state(ck.arrays, "opt_g/");
    m_.opt_d.export_state(ck.arrays, "opt_d/");
    return ck;
}

Trainer Trainer::resume(const nn::Checkpoint& ck, std::vector<Image> images) {
    if (ck.meta.value("kind", "") != "zoomsr_train") throw IoError("checkpoint is not a training checkpoint");
    const auto gcfg = ck.meta.at("generator").get<net::GeneratorConfig>();
    const auto dcfg = ck.meta.at("discriminator").get<net::DiscriminatorConfig>();
    Trainer t(ck.meta.at("train").get<TrainConfig>(), gcfg, dcfg, ck.meta.at("extractor").get<net::ExtractorConfig>(),
              std::move(images));
    t.m_.generator = net::Generator(gcfg, ck.get_params("g/"));
    t.m_.discriminator = net::Discriminator(dcfg, ck.get_params("d/"));
    t.m_.opt_g.import_state(ck.arrays, "opt_g/", ck.meta.at("opt_g_steps"));
    t.m_.opt_d.import_state(ck.arrays, "opt_d/", ck.meta.at("opt_d_steps"));
    t.iteration_ = ck.meta.at("iteration");
    std::istringstream rng(ck.meta.at("rng").get<std::string>());
    rng >> t.rng_;
    for (const auto& h : ck.meta.at("history"))
        t.history_.push_back({h.at("iteration"), metrics_from_json(h.at("last")), report_from_json(h.at("eval"))});
    return t;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "iteration,pixel,content,adversarial,generator_total,discriminator";
    if (!history.empty())
        for (const auto& row : history.front().eval.rows)
            out << ",psnr_x" << row.scale << ",ssim_x" << row.scale << ",checkerboard_x" << row.scale;
    out << '\n' << std::setprecision(10);
    for (const auto& h : history) {
        out << h.iteration << ',' << h.last.pixel << ',' << h.last.content << ',' << h.last.adversarial << ','
            << h.last.generator_total << ',' << h.last.discriminator;
        for (const auto& row : h.eval.rows) {
            out << ',';
            if (std::isfinite(row.psnr_mean))
                out << row.psnr_mean;
            else
                out << "inf";
            out << ',' << row.ssim_mean << ',' << row.checkerboard_mean;
        }
        out << '\n';
    }
}

void save_generator(const net::Generator& g, const std::filesystem::path& path) {
    nn::Checkpoint ck;
    ck.meta["kind"] = "zoomsr_generator";
    ck.meta["generator"] = g.config();
    ck.put_params(g.params(), "g/");
    nn::save_checkpoint(ck, path);
}

net::Generator generator_from_checkpoint(const nn::Checkpoint& ck) {
    if (!ck.meta.contains("generator") || !ck.has_prefix("g/"))
        throw IoError("checkpoint holds no generator");
    return net::Generator(ck.meta.at("generator").get<net::GeneratorConfig>(), ck.get_params("g/"));
}

net::Generator load_generator(const std::filesystem::path& path) {
    return generator_from_checkpoint(nn::load_checkpoint(path));
}

}  // namespace zoomsr::train
