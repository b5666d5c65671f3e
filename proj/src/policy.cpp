#include "zoomsr/policy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace zoomsr::policy {

using nn::Var;

namespace {

constexpr std::array<const char*, kSurgemeClasses> kSuturingNames{"Others", "PositioningNeedle", "OrientingNeedle",
                                                                  "PushingNeedleThroughTissue"};
constexpr std::array<const char*, kSurgemeClasses> kKnotNames{"Others", "ReachingAndDroppingNeedle",
                                                              "ReachingAndMakingCLoop", "ReachingAndPulling"};

const std::array<const char*, kSurgemeClasses>& names_for(Task t) {
    return t == Task::Suturing ? kSuturingNames : kKnotNames;
}

}  // namespace

Task parse_task(const std::string& name) {
    if (name == "Suturing" || name == "suturing") return Task::Suturing;
    if (name == "KnotTying" || name == "knot_tying" || name == "knottying") return Task::KnotTying;
    throw std::invalid_argument("unknown task '" + name + "'");
}

std::string task_name(Task t) { return t == Task::Suturing ? "Suturing" : "KnotTying"; }

std::string surgeme_name(const Surgeme& s) {
    if (s.label < 0 || s.label >= kSurgemeClasses) throw std::out_of_range("surgeme label out of range");
    return names_for(s.task)[s.label];
}

Surgeme parse_surgeme(Task task, const std::string& name) {
    const auto& names = names_for(task);
    for (int i = 0; i < kSurgemeClasses; ++i)
        if (name == names[i]) return {task, i};
    throw std::invalid_argument("'" + name + "' is not a " + task_name(task) + " surgeme");
}

Surgeme surgeme_from_gesture(Task task, const std::string& gesture) {
    if (task == Task::Suturing) {
        if (gesture == "G2") return {task, 1};
        if (gesture == "G8") return {task, 2};
        if (gesture == "G3") return {task, 3};
    } else {
        if (gesture == "G11") return {task, 1};
        if (gesture == "G13") return {task, 2};
        if (gesture == "G14" || gesture == "G15") return {task, 3};
    }
    return {task, 0};
}

std::optional<ScaleFactor> surgeme_to_factor(const Surgeme& s) {
    // Same factor pattern for both tasks: first operation x2, second x8, third x4.
    switch (s.label) {
        case 0: return std::nullopt;
        case 1: return ScaleFactor(2);
        case 2: return ScaleFactor(8);
        case 3: return ScaleFactor(4);
        default: throw std::out_of_range("surgeme label out of range");
    }
}

bool depth_gate(std::optional<double> depth_cm, double threshold_cm) {
    if (!(threshold_cm > 0)) throw std::invalid_argument("depth threshold must be positive");
    return depth_cm.has_value() && std::isfinite(*depth_cm) && *depth_cm > threshold_cm;
}

ZoomDecision decide_zoom(std::optional<double> depth_cm, const Surgeme& s, double threshold_cm) {
    if (!depth_gate(depth_cm, threshold_cm)) return {};
    return {surgeme_to_factor(s)};
}

// ---- predictor ---------------------------------------------------------------------------

void PredictorConfig::validate() const {
    if (input_dim < 1 || hidden < 1 || classes < 2 || window < 1)
        throw std::invalid_argument("predictor config: input_dim, hidden, window >= 1 and classes >= 2 required");
}

SurgemePredictor::SurgemePredictor(PredictorConfig cfg, std::uint64_t seed)
    : cfg_(cfg), mean_(cfg.input_dim, 0.0), std_(cfg.input_dim, 1.0) {
    cfg_.validate();
    std::mt19937_64 rng(seed);
    const int d = cfg_.input_dim, h = cfg_.hidden;
    for (const char* gate : {"r", "z", "n"}) {
        params_.add(std::string("w_i") + gate, nn::he_normal({h, d}, rng, std::sqrt(0.5)));
        params_.add(std::string("w_h") + gate, nn::he_normal({h, h}, rng, std::sqrt(0.5)));
        params_.add(std::string("b_i") + gate, nn::Tensor({h}));
        params_.add(std::string("b_h") + gate, nn::Tensor({h}));
    }
    params_.add("head.w", nn::he_normal({cfg_.classes, h}, rng, std::sqrt(0.5)));
    params_.add("head.b", nn::Tensor({cfg_.classes}));
}

SurgemePredictor::SurgemePredictor(PredictorConfig cfg, nn::ParamStore params, std::vector<double> mean,
                                   std::vector<double> stddev)
    : cfg_(cfg), params_(std::move(params)) {
    cfg_.validate();
    const SurgemePredictor ref(cfg_, 0);
    for (const auto& [name, v] : ref.params())
        if (!params_.contains(name) || params_.at(name).shape() != v.shape())
            throw DimensionError("predictor parameter " + name + " missing or mis-shaped");
    set_normalisation(std::move(mean), std::move(stddev));
}

void SurgemePredictor::set_normalisation(std::vector<double> mean, std::vector<double> stddev) {
    if (static_cast<int>(mean.size()) != cfg_.input_dim || static_cast<int>(stddev.size()) != cfg_.input_dim)
        throw DimensionError("predictor normalisation has wrong dimensionality");
    for (double s : stddev)
        if (!(s > 0)) throw std::invalid_argument("predictor normalisation std must be positive");
    mean_ = std::move(mean);
    std_ = std::move(stddev);
}

Var SurgemePredictor::logits(const FeatureWindow& window) const {
    if (static_cast<int>(window.size()) != cfg_.window)
        throw DimensionError("predictor expects a window of " + std::to_string(cfg_.window) + " frames, got " +
                             std::to_string(window.size()));
    const auto& p = params_;
    Var h = nn::constant(nn::Tensor({cfg_.hidden}));
    for (const auto& frame : window) {
        if (static_cast<int>(frame.size()) != cfg_.input_dim)
            throw DimensionError("kinematic frame has " + std::to_string(frame.size()) + " features, expected " +
                                 std::to_string(cfg_.input_dim));
        nn::Tensor xt({cfg_.input_dim});
        for (int i = 0; i < cfg_.input_dim; ++i) xt[i] = (frame[i] - mean_[i]) / std_[i];
        const Var x = nn::constant(std::move(xt));
        auto gate = [&](const char* g) {
            return nn::add(nn::linear(x, p.at(std::string("w_i") + g), p.at(std::string("b_i") + g)),
                           nn::linear(h, p.at(std::string("w_h") + g), p.at(std::string("b_h") + g)));
        };
        const Var r = nn::sigmoid(gate("r"));
        const Var z = nn::sigmoid(gate("z"));
        const Var n = nn::tanh(nn::add(nn::linear(x, p.at("w_in"), p.at("b_in")),
                                       nn::mul(r, nn::linear(h, p.at("w_hn"), p.at("b_hn")))));
        // h' = (1 - z) * n + z * h
        h = nn::add(nn::mul(nn::add_scalar(nn::scale(z, -1.0), 1.0), n), nn::mul(z, h));
    }
    return nn::linear(h, p.at("head.w"), p.at("head.b"));
}

int SurgemePredictor::predict_class(const FeatureWindow& window) const {
    nn::NoGradGuard guard;
    const nn::Tensor l = logits(window).value();
    int best = 0;
    for (int c = 1; c < cfg_.classes; ++c)
        if (l[c] > l[best]) best = c;
    return best;
}

std::vector<double> train_predictor(SurgemePredictor& model, const std::vector<LabeledWindow>& data,
                                    const PolicyTrainConfig& cfg) {
    if (data.empty()) throw std::invalid_argument("train_predictor: empty dataset");
    const int d = model.config().input_dim;
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    std::size_t n = 0;
    for (const auto& w : data)
        for (const auto& f : w.features) {
            for (int i = 0; i < d; ++i) mean[i] += f.at(i);
            ++n;
        }
    for (auto& m : mean) m /= static_cast<double>(n);
    for (const auto& w : data)
        for (const auto& f : w.features)
            for (int i = 0; i < d; ++i) var[i] += (f[i] - mean[i]) * (f[i] - mean[i]);
    for (auto& v : var) v = std::max(std::sqrt(v / static_cast<double>(n)), 1e-6);
    model.set_normalisation(mean, var);

    nn::Adam opt(nn::AdamConfig{cfg.learning_rate});
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> history;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<Var> losses;
            for (std::size_t i = start; i < end; ++i) {
                const auto& s = data[order[i]];
                if (s.label < 0 || s.label >= model.config().classes)
                    throw std::out_of_range("training label out of range");
                losses.push_back(nn::softmax_cross_entropy(model.logits(s.features), s.label));
            }
            const Var loss = nn::weighted_sum(losses, std::vector<double>(losses.size(), 1.0 / losses.size()));
            model.params().zero_grad();
            nn::backward(loss);
            opt.step(model.params());
            total += loss.value().item() * static_cast<double>(end - start);
        }
        history.push_back(total / static_cast<double>(data.size()));
    }
    return history;
}

double accuracy(const SurgemePredictor& model, const std::vector<LabeledWindow>& data) {
    if (data.empty()) return 0.0;
    int right = 0;
    for (const auto& s : data) right += model.predict_class(s.features) == s.label;
    return static_cast<double>(right) / static_cast<double>(data.size());
}

std::vector<LabeledWindow> sliding_windows(const std::vector<std::vector<double>>& kin,
                                           const std::vector<int>& labels, int window, int stride) {
    if (kin.size() != labels.size()) throw DimensionError("kinematics and labels differ in frame count");
    if (window < 1 || stride < 1) throw std::invalid_argument("window and stride must be >= 1");
    std::vector<LabeledWindow> out;
    for (std::size_t end = static_cast<std::size_t>(window); end < kin.size(); end += stride) {
        LabeledWindow w;
        w.features.assign(kin.begin() + static_cast<long>(end - window), kin.begin() + static_cast<long>(end));
        w.label = labels[end];
        out.push_back(std::move(w));
    }
    return out;
}

std::vector<std::vector<double>> load_kinematics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read kinematics " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::replace_if(line.begin(), line.end(), [](char c) { return c == ',' || c == ';' || c == '\t'; }, ' ');
        std::stringstream ss(line);
        std::vector<double> row;
        std::string tok;
        while (ss >> tok) {
            try {
                row.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw IoError(path.string() + ":" + std::to_string(lineno) + ": not a number '" + tok + "'");
            }
        }
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                          std::to_string(rows.front().size()) + " columns");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("no kinematic rows in " + path.string());
    return rows;
}

std::vector<int> load_gesture_labels(const std::filesystem::path& path, Task task, std::size_t frame_count) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read gesture labels " + path.string());
    std::vector<int> labels(frame_count, 0);
    long start = 0, end = 0;
    std::string gesture;
    while (in >> start >> end >> gesture) {
        if (start < 1 || end < start) throw IoError("bad gesture range in " + path.string());
        const int label = surgeme_from_gesture(task, gesture).label;
        for (long f = start; f <= end && f <= static_cast<long>(frame_count); ++f) labels[f - 1] = label;
    }
    if (!in.eof()) throw IoError("malformed gesture line in " + path.string());
    return labels;
}

void save_predictor(const SurgemePredictor& model, Task task, const std::filesystem::path& path) {
    nn::Checkpoint ck;
    const auto& c = model.config();
    ck.meta["kind"] = "surgeme_predictor";
    ck.meta["task"] = task_name(task);
    ck.meta["predictor"] = {{"input_dim", c.input_dim}, {"hidden", c.hidden}, {"classes", c.classes},
                            {"window", c.window}};
    ck.meta["feature_mean"] = model.feature_mean();
    ck.meta["feature_std"] = model.feature_std();
    ck.put_params(model.params(), "policy/");
    nn::save_checkpoint(ck, path);
}

std::pair<SurgemePredictor, Task> load_predictor(const std::filesystem::path& path) {
    const auto ck = nn::load_checkpoint(path);
    if (ck.meta.value("kind", "") != "surgeme_predictor") throw IoError(path.string() + " is not a predictor");
    const auto& p = ck.meta.at("predictor");
    PredictorConfig cfg{p.at("input_dim"), p.at("hidden"), p.at("classes"), p.at("window")};
    return {SurgemePredictor(cfg, ck.get_params("policy/"), ck.meta.at("feature_mean").get<std::vector<double>>(),
                             ck.meta.at("feature_std").get<std::vector<double>>()),
            parse_task(ck.meta.at("task"))};
}

}  // namespace zoomsr::policy
