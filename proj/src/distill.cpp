#include "zoomsr/distill.hpp"

#include <algorithm>
#include <chrono>

namespace zoomsr::distill {

using nlohmann::json;

void DistillConfig::validate() const {
    if (iterations < 0 || batch_size < 1 || !(learning_rate > 0))
        throw std::invalid_argument("distill config: iterations >= 0, batch_size >= 1, learning_rate > 0");
    if (crop_size < 1 || crop_size % 8 != 0) throw std::invalid_argument("crop_size must be a positive multiple of 8");
    if (output_layer < 1 || output_layer > net::FeatureExtractor::kConvLayers)
        throw std::invalid_argument("output_layer must be an extractor conv layer");
}

void to_json(json& j, const DistillConfig& c) {
    j = json{{"iterations", c.iterations}, {"batch_size", c.batch_size}, {"learning_rate", c.learning_rate},
             {"seed", c.seed},             {"crop_size", c.crop_size},   {"fixed_batch", c.fixed_batch},
             {"output_layer", c.output_layer}};
}

void from_json(const json& j, DistillConfig& c) {
    const DistillConfig d;
    c.iterations = j.value("iterations", d.iterations);
    c.batch_size = j.value("batch_size", d.batch_size);
    c.learning_rate = j.value("learning_rate", d.learning_rate);
    c.seed = j.value("seed", d.seed);
    c.crop_size = j.value("crop_size", d.crop_size);
    c.fixed_batch = j.value("fixed_batch", d.fixed_batch);
    c.output_layer = j.value("output_layer", d.output_layer);
}

std::vector<Var> section_taps(const net::Generator::Output& out) {
    std::vector<Var> taps;
    for (std::size_t s = 0; s < out.section_entry.size(); ++s) {
        taps.push_back(out.section_entry[s]);
        taps.push_back(out.section_exit[s]);
    }
    return taps;
}

nn::ParamStore make_projections(const net::GeneratorConfig& t, const net::GeneratorConfig& s, std::uint64_t seed) {
    if (t.levels != s.levels) throw DimensionError("teacher and student must have the same number of levels");
    if (t.input_channels != s.input_channels) throw DimensionError("teacher and student take different inputs");
    nn::ParamStore p;
    if (t.feature_channels == s.feature_channels) return p;
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 2 * t.levels; ++i) {
        p.add("tap" + std::to_string(i) + ".w", nn::he_normal({t.feature_channels, s.feature_channels, 1, 1}, rng));
        p.add("tap" + std::to_string(i) + ".b", nn::Tensor({t.feature_channels}));
    }
    return p;
}

Var distill_loss(const net::Generator::Output& teacher, const net::Generator::Output& student,
                 const nn::ParamStore& projections, const net::FeatureExtractor& extractor, int output_layer) {
    const auto tt = section_taps(teacher), st = section_taps(student);
    if (tt.size() != st.size()) throw DimensionError("distill: teacher and student tap counts differ");
    std::vector<Var> terms;
    for (std::size_t i = 0; i < tt.size(); ++i) {
        Var s = st[i];
        const std::string key = "tap" + std::to_string(i);
        if (projections.contains(key + ".w")) s = nn::conv2d(s, projections.at(key + ".w"), projections.at(key + ".b"), 1);
        if (s.value().shape() != tt[i].value().shape())
            throw DimensionError("distill: tap " + std::to_string(i) + " shapes differ: teacher " +
                                 tt[i].value().shape_string() + ", student " + s.value().shape_string());
        terms.push_back(nn::mse_mean(nn::constant(tt[i].value()), s));
    }
    if (teacher.levels.empty() || student.levels.empty()) throw DimensionError("distill: missing outputs");
    Var t_feat;
    {
        nn::NoGradGuard guard;
        t_feat = extractor.forward(nn::constant(teacher.levels.back().value()), output_layer);
    }
    terms.push_back(nn::mse_mean(nn::constant(t_feat.value()), extractor.forward(student.levels.back(), output_layer)));
    return nn::weighted_sum(terms, std::vector<double>(terms.size(), 1.0));
}

Distiller::Distiller(net::Generator teacher, net::GeneratorConfig student_cfg, net::ExtractorConfig ecfg,
                     DistillConfig cfg, std::vector<Image> images)
    : cfg_((cfg.validate(), cfg)),
      teacher_(std::move(teacher)),
      student_(student_cfg, cfg_.seed * 2 + 1),
      extractor_(ecfg),
      projections_(make_projections(teacher_.config(), student_cfg, cfg_.seed * 2 + 2)),
      opt_(nn::AdamConfig{cfg_.learning_rate}),
      images_(std::move(images)),
      rng_(cfg_.seed) {
    if (student_cfg.residual_blocks >= teacher_.config().residual_blocks)
        throw std::invalid_argument("student must have fewer residual blocks than the teacher");
    const int hr = cfg_.crop_size << teacher_.config().levels;
    if (images_.empty()) throw std::invalid_argument("distiller needs at least one image");
    for (const auto& img : images_)
        if (img.height() < hr || img.width() < hr) throw DimensionError("distill image smaller than the HR crop");
}

std::vector<Image> Distiller::next_batch() {
    const int levels = teacher_.config().levels, hr = cfg_.crop_size << levels;
    std::vector<Image> batch;
    for (int b = 0; b < cfg_.batch_size; ++b) {
        if (cfg_.fixed_batch) {
            const Image& img = images_[b % images_.size()];
            batch.push_back(crop(img, (img.height() - hr) / 2, (img.width() - hr) / 2, hr, hr));
            continue;
        }
        const Image& img = images_[std::uniform_int_distribution<std::size_t>(0, images_.size() - 1)(rng_)];
        const int y = std::uniform_int_distribution<int>(0, img.height() - hr)(rng_);
        const int x = std::uniform_int_distribution<int>(0, img.width() - hr)(rng_);
        Image c = crop(img, y, x, hr, hr);
        batch.push_back(std::bernoulli_distribution(0.5)(rng_) ? flip_horizontal(c) : c);
    }
    return batch;
}

double Distiller::step() {
    const int levels = teacher_.config().levels, extra = teacher_.config().input_channels - 3;
    std::vector<Var> losses;
    for (const Image& hr : next_batch()) {
        const Image lr = bilinear_downsample(hr, 1 << levels);
        const Image input = extra > 0 ? concat_channels({Image(lr.height(), lr.width(), extra), lr}) : lr;
        const Var x = nn::constant(nn::to_tensor(input));
        net::Generator::Output t;
        {
            nn::NoGradGuard guard;
            t = teacher_.forward(x);
        }
        losses.push_back(distill_loss(t, student_.forward(x), projections_, extractor_, cfg_.output_layer));
    }
    const Var loss = nn::weighted_sum(losses, std::vector<double>(losses.size(), 1.0 / losses.size()));
    if (!std::isfinite(loss.value().item())) throw train::NonFiniteError("distill", iteration_);
    student_.params().zero_grad();
    projections_.zero_grad();
    nn::backward(loss);
    opt_.step(student_.params());
    if (projections_.size() > 0) opt_.step(projections_);
    ++iteration_;
    return loss.value().item();
}

std::vector<double> Distiller::fit() {
    std::vector<double> history;
    while (iteration_ < cfg_.iterations) history.push_back(step());
    return history;
}

nn::Checkpoint Distiller::checkpoint() const {
    nn::Checkpoint ck;
    ck.meta["kind"] = "zoomsr_distill";
    ck.meta["distill_stage"] = 1;
    ck.meta["stage1_complete"] = iteration_ >= cfg_.iterations;
    ck.meta["iteration"] = iteration_;
    ck.meta["generator"] = student_.config();
    ck.meta["teacher_generator"] = teacher_.config();
    ck.meta["distill"] = cfg_;
    ck.put_params(student_.params(), "g/");
    return ck;
}

bool is_stage1_checkpoint(const nn::Checkpoint& ck) {
    return ck.meta.value("kind", "") == "zoomsr_distill" && ck.meta.value("distill_stage", 0) == 1 &&
           ck.meta.value("stage1_complete", false);
}

train::Trainer stage2_trainer(const nn::Checkpoint& stage1, train::TrainConfig cfg, net::DiscriminatorConfig dcfg,
                              net::ExtractorConfig ecfg, std::vector<Image> images) {
    if (!is_stage1_checkpoint(stage1))
        throw std::invalid_argument("stage 2 needs a completed stage-1 distillation checkpoint");
    net::Generator student = train::generator_from_checkpoint(stage1);
    train::Trainer t(cfg, student.config(), dcfg, ecfg, std::move(images));
    t.models().generator = std::move(student);
    return t;
}

double median_latency_ms(const net::Generator& g, const Image& input, int repeats) {
    if (repeats < 1) throw std::invalid_argument("repeats must be >= 1");
    std::vector<double> ms;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto out = g.infer(input);
        ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
    }
    std::nth_element(ms.begin(), ms.begin() + ms.size() / 2, ms.end());
    return ms[ms.size() / 2];
}

}  // namespace zoomsr::distill
