#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "zoomsr/image.hpp"

namespace zoomsr::data {

struct SplitRatios {
    double train = 0.7, val = 0.15, test = 0.15;
    void validate() const;
};

struct SplitManifest {
    std::uint64_t seed = 0;
    std::map<std::string, std::vector<std::string>> files;  // split name -> file names
    std::size_t count(const std::string& split) const;
};

/// Seeded shuffle of every raster file in `src`, then copies into out/{train,val,test}.
/// Counts are floor(n * ratio) for val and test; train takes the rest. Writes out/manifest.json.
SplitManifest prepare_data(const std::filesystem::path& src, const std::filesystem::path& out,
                           const SplitRatios& ratios, std::uint64_t seed);

/// Renders `count` seeded synthetic scenes as PNG files into `dir`.
void render_synthetic_images(const std::filesystem::path& dir, int count, int size, std::uint64_t seed);

SplitManifest read_manifest(const std::filesystem::path& path);

/// Every raster file of a directory, in name order.
std::vector<Image> load_image_dir(const std::filesystem::path& dir);

}  // namespace zoomsr::data
