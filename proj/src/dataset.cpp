#include "zoomsr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "zoomsr/synthetic.hpp"

namespace zoomsr::data {

namespace fs = std::filesystem;
using nlohmann::json;

void SplitRatios::validate() const {
    if (train < 0 || val < 0 || test < 0 || std::abs(train + val + test - 1.0) > 1e-9)
        throw std::invalid_argument("split ratios must be non-negative and sum to 1");
}

std::size_t SplitManifest::count(const std::string& split) const {
    const auto it = files.find(split);
    return it == files.end() ? 0 : it->second.size();
}

SplitManifest prepare_data(const fs::path& src, const fs::path& out, const SplitRatios& ratios, std::uint64_t seed) {
    ratios.validate();
    std::vector<fs::path> paths = list_frame_files(src);
    if (paths.empty()) throw IoError("no images in " + src.string());
    std::set<std::string> names;
    for (const auto& p : paths)
        if (!names.insert(p.filename().string()).second) throw IoError("duplicate file name " + p.filename().string());

    std::mt19937_64 rng(seed);
    std::shuffle(paths.begin(), paths.end(), rng);
    const std::size_t n = paths.size();
    const auto n_val = static_cast<std::size_t>(std::floor(n * ratios.val + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));
    const std::size_t n_train = n - n_val - n_test;

    SplitManifest m;
    m.seed = seed;
    for (const char* split : {"train", "val", "test"}) {
        fs::remove_all(out / split);
        fs::create_directories(out / split);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const char* split = i < n_train ? "train" : i < n_train + n_val ? "val" : "test";
        fs::copy_file(paths[i], out / split / paths[i].filename(), fs::copy_options::overwrite_existing);
        m.files[split].push_back(paths[i].filename().string());
    }
    for (auto& [split, list] : m.files) std::sort(list.begin(), list.end());

    json j{{"seed", seed}, {"source", src.string()}, {"ratios", {ratios.train, ratios.val, ratios.test}}};
    for (const char* split : {"train", "val", "test"}) {
        j["counts"][split] = m.count(split);
        j["files"][split] = m.files.count(split) ? m.files.at(split) : std::vector<std::string>{};
    }
    std::ofstream(out / "manifest.json") << j.dump(2) << '\n';
    return m;
}

void render_synthetic_images(const fs::path& dir, int count, int size, std::uint64_t seed) {
    if (count < 1 || size < 8) throw std::invalid_argument("need count >= 1 and size >= 8");
    fs::create_directories(dir);
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "scene_%04d.png", i);
        save_image(synthetic::scene(size, size, seed * 100003 + static_cast<std::uint64_t>(i)), dir / name);
    }
}

SplitManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    const json j = json::parse(in);
    SplitManifest m;
    m.seed = j.at("seed");
    for (const auto& [split, list] : j.at("files").items()) m.files[split] = list.get<std::vector<std::string>>();
    return m;
}

std::vector<Image> load_image_dir(const fs::path& dir) {
    std::vector<Image> out;
    for (const auto& p : list_frame_files(dir)) out.push_back(load_image(p));
    if (out.empty()) throw IoError("no images in " + dir.string());
    return out;
}

}  // namespace zoomsr::data
