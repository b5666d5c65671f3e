#include "zoomsr/nn/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace zoomsr::nn {

Var& ParamStore::add(const std::string& name, Tensor init) {
    auto [it, inserted] = params_.emplace(name, parameter(std::move(init)));
    if (!inserted) throw std::invalid_argument("duplicate parameter name " + name);
    return it->second;
}

const Var& ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter " + name);
    return it->second;
}

Var& ParamStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::out_of_range("unknown parameter " + name);
    return it->second;
}

std::size_t ParamStore::parameter_count() const {
    std::size_t n = 0;
    for (const auto& [_, v] : params_) n += v.value().size();
    return n;
}

void ParamStore::zero_grad() {
    for (auto& [_, v] : params_) v.zero_grad();
}

bool ParamStore::all_finite() const {
    for (const auto& [_, v] : params_)
        if (!v.value().all_finite()) return false;
    return true;
}

ParamStore ParamStore::clone() const {
    ParamStore out;
    for (const auto& [name, v] : params_) out.add(name, v.value());
    return out;
}

Tensor he_normal(const std::vector<int>& shape, std::mt19937_64& rng, double gain) {
    Tensor t(shape);
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) fan_in *= static_cast<std::size_t>(shape[i]);
    std::normal_distribution<double> dist(0.0, gain * std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (auto& v : t.storage()) v = dist(rng);
    return t;
}

void Adam::step(ParamStore& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& [name, p] : params) {
        const Tensor& g = p.grad();
        auto& m = m_[name];
        auto& v = v_[name];
        if (m.size() != g.size()) {
            m = Tensor::zeros_like(g);
            v = Tensor::zeros_like(g);
        }
        Tensor& w = p.mutable_value();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mh = m[i] / bc1;
            const double vh = v[i] / bc2;
            w[i] -= cfg_.learning_rate * mh / (std::sqrt(vh) + cfg_.epsilon);
        }
    }
}

void Adam::export_state(std::map<std::string, Tensor>& out, const std::string& prefix) const {
    for (const auto& [name, m] : m_) out[prefix + "m/" + name] = m;
    for (const auto& [name, v] : v_) out[prefix + "v/" + name] = v;
}

void Adam::import_state(const std::map<std::string, Tensor>& in, const std::string& prefix, std::int64_t steps) {
    m_.clear();
    v_.clear();
    const std::string pm = prefix + "m/", pv = prefix + "v/";
    for (const auto& [key, t] : in) {
        if (key.rfind(pm, 0) == 0) m_[key.substr(pm.size())] = t;
        if (key.rfind(pv, 0) == 0) v_[key.substr(pv.size())] = t;
    }
    t_ = steps;
}

void Checkpoint::put_params(const ParamStore& params, const std::string& prefix) {
    for (const auto& [name, v] : params) arrays[prefix + name] = v.value();
}

ParamStore Checkpoint::get_params(const std::string& prefix) const {
    ParamStore out;
    for (const auto& [key, t] : arrays)
        if (key.rfind(prefix, 0) == 0) out.add(key.substr(prefix.size()), t);
    return out;
}

bool Checkpoint::has_prefix(const std::string& prefix) const {
    for (const auto& [key, _] : arrays)
        if (key.rfind(prefix, 0) == 0) return true;
    return false;
}

namespace {

constexpr char kMagic[8] = {'Z', 'O', 'O', 'M', 'S', 'R', 'C', 'K'};

template <class T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw IoError("checkpoint truncated");
    return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write checkpoint " + path.string());
        out.write(kMagic, sizeof kMagic);
        write_pod(out, kCheckpointVersion);
        const std::string meta = ckpt.meta.dump();
        write_pod(out, static_cast<std::uint64_t>(meta.size()));
        out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
        write_pod(out, static_cast<std::uint64_t>(ckpt.arrays.size()));
        for (const auto& [name, t] : ckpt.arrays) {
            write_pod(out, static_cast<std::uint32_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            write_pod(out, static_cast<std::uint32_t>(t.rank()));
            for (int d : t.shape()) write_pod(out, static_cast<std::int32_t>(d));
            out.write(reinterpret_cast<const char*>(t.raw()), static_cast<std::streamsize>(t.size() * sizeof(double)));
        }
        if (!out) throw IoError("failed writing checkpoint " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw IoError("not a checkpoint file: " + path.string());
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    Checkpoint ckpt;
    const auto meta_len = read_pod<std::uint64_t>(in);
    std::string meta(meta_len, '\0');
    in.read(meta.data(), static_cast<std::streamsize>(meta_len));
    if (!in) throw IoError("checkpoint truncated");
    ckpt.meta = nlohmann::json::parse(meta);
    const auto count = read_pod<std::uint64_t>(in);
    for (std::uint64_t a = 0; a < count; ++a) {
        const auto name_len = read_pod<std::uint32_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rank = read_pod<std::uint32_t>(in);
        std::vector<int> shape(rank);
        for (auto& d : shape) d = read_pod<std::int32_t>(in);
        Tensor t(shape);
        in.read(reinterpret_cast<char*>(t.raw()), static_cast<std::streamsize>(t.size() * sizeof(double)));
        if (!in) throw IoError("checkpoint truncated in array " + name);
        ckpt.arrays.emplace(std::move(name), std::move(t));
    }
    return ckpt;
}

}  // namespace zoomsr::nn
