#include "zoomsr/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace zoomsr::config {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

json typed_value(const std::string& raw) {
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') return raw.substr(1, raw.size() - 2);
    if (raw == "true") return true;
    if (raw == "false") return false;
    try {
        std::size_t used = 0;
        const long long i = std::stoll(raw, &used);
        if (used == raw.size()) return i;
    } catch (const std::exception&) {
    }
    try {
        std::size_t used = 0;
        const double d = std::stod(raw, &used);
        if (used == raw.size()) return d;
    } catch (const std::exception&) {
    }
    return raw;
}

}  // namespace

json parse(const std::string& text, const std::string& origin) {
    json root = json::object();
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos) throw std::invalid_argument(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument(where + ": empty key");
        json* node = &root;
        std::size_t start = 0;
        for (;;) {
            const auto dot = key.find('.', start);
            const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
            if (part.empty()) throw std::invalid_argument(where + ": malformed key '" + key + "'");
            if (dot == std::string::npos) {
                if (node->contains(part)) throw std::invalid_argument(where + ": duplicate key '" + key + "'");
                (*node)[part] = typed_value(value);
                break;
            }
            json& child = (*node)[part];
            if (child.is_null()) child = json::object();
            if (!child.is_object()) throw std::invalid_argument(where + ": '" + key + "' nests under a value");
            node = &child;
            start = dot + 1;
        }
    }
    return root;
}

json load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    json cfg = parse(ss.str(), path.string());
    apply_seed_override(cfg);
    return cfg;
}

void apply_seed_override(json& cfg) {
    const char* env = std::getenv(kSeedEnv);
    if (env == nullptr || *env == '\0') return;
    std::uint64_t seed = 0;
    try {
        std::size_t used = 0;
        seed = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string(kSeedEnv) + " must be a non-negative integer");
    }
    for (const char* s : {"train", "distill", "data", "policy", "pipeline"}) cfg[s]["seed"] = seed;
}

const json& section(const json& cfg, const std::string& name) {
    static const json empty = json::object();
    if (!cfg.contains(name)) return empty;
    const json& s = cfg.at(name);
    if (!s.is_object()) throw std::invalid_argument("config key '" + name + "' must be a section");
    return s;
}

train::TrainConfig train_config(const json& cfg) {
    json merged = section(cfg, "train");
    const json& loss = section(cfg, "loss");
    for (const char* k : {"mu", "eta", "lambda", "charbonnier_eps"})
        if (loss.contains(k)) merged[k] = loss.at(k);
    if (const json& taps = section(cfg, "taps"); !taps.empty()) merged["taps"] = taps;
    auto t = merged.get<train::TrainConfig>();
    t.validate();
    return t;
}

net::GeneratorConfig generator_config(const json& cfg, const std::string& name) {
    const json& s = section(cfg, name);
    net::GeneratorConfig g;
    g.levels = s.value("levels", section(cfg, "train").value("levels", g.levels));
    g.residual_blocks = s.value("residual_blocks", g.residual_blocks);
    g.feature_channels = s.value("feature_channels", g.feature_channels);
    g.kernel_size = s.value("kernel_size", g.kernel_size);
    g.input_channels = s.value("input_channels", g.input_channels);
    g.dense_layers = s.value("dense_layers", g.dense_layers);
    g.growth = s.value("growth", g.growth);
    g.leaky_slope = s.value("leaky_slope", g.leaky_slope);
    g.validate();
    return g;
}

net::DiscriminatorConfig discriminator_config(const json& cfg, const train::TrainConfig& t) {
    const json& s = section(cfg, "discriminator");
    net::DiscriminatorConfig d;
    d.input_size = s.value("input_size", t.hr_crop());
    d.base_channels = s.value("base_channels", d.base_channels);
    d.max_channels = s.value("max_channels", d.max_channels);
    d.stages = s.value("stages", d.stages);
    d.head_hidden = s.value("head_hidden", d.head_hidden);
    d.leaky_slope = s.value("leaky_slope", d.leaky_slope);
    d.validate();
    return d;
}

net::ExtractorConfig extractor_config(const json& cfg) {
    const json& s = section(cfg, "extractor");
    net::ExtractorConfig e;
    e.width_scale = s.value("width_scale", e.width_scale);
    e.seed = s.value("seed", e.seed);
    return e;
}

distill::DistillConfig distill_config(const json& cfg) {
    auto d = section(cfg, "distill").get<distill::DistillConfig>();
    d.validate();
    return d;
}

}  // namespace zoomsr::config
