#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "zoomsr/geometry.hpp"
#include "zoomsr/image.hpp"

namespace zoomsr::stereo {

struct StereoCalibration {
    double focal_px = 700.0;
    double baseline_cm = 0.5;
    bool rectified = true;

    void validate() const;
};

struct StereoParams {
    int block = 9;
    int d_max = 64;           // disparities 0 .. d_max - 1 are searched
    double p1_per_pixel = 8;  // P1 = p1_per_pixel * block^2
    double p2_per_pixel = 32; // P2 = p2_per_pixel * block^2
    double uniqueness = 1.05;
    double texture_threshold = 1.0;  // min mean |horizontal gradient| (8-bit units) over the block
    bool left_right_check = false;
    int lr_tolerance = 1;

    int p1() const { return static_cast<int>(p1_per_pixel * block * block); }
    int p2() const { return static_cast<int>(p2_per_pixel * block * block); }
};

/// Integer cost volume, index (y * width + x) * disparities + d.
struct CostVolume {
    int height = 0, width = 0, disparities = 0;
    std::vector<std::int32_t> data;

    CostVolume() = default;
    CostVolume(int h, int w, int d, std::int32_t fill = 0)
        : height(h), width(w), disparities(d), data(static_cast<std::size_t>(h) * w * d, fill) {}
    std::int32_t& at(int y, int x, int d) { return data[(static_cast<std::size_t>(y) * width + x) * disparities + d]; }
    std::int32_t at(int y, int x, int d) const {
        return data[(static_cast<std::size_t>(y) * width + x) * disparities + d];
    }
    friend bool operator==(const CostVolume&, const CostVolume&) = default;
};

/// Out-of-range candidates (x - d < 0) carry this cost per block pixel (full 8-bit mismatch).
inline constexpr std::int32_t kMaxPixelCost = 255;

/// SAD between the block x block window at (x, y) in `left` and at (x - d, y) in `right`,
/// on 8-bit grayscale intensities. Window pixels beyond the border are edge-replicated.
CostVolume matching_cost(const Image& left, const Image& right, int block, int d_max);

enum class Direction { LeftToRight, RightToLeft, TopToBottom, BottomToTop };

/// One scanline pass: L(p,d) = C(p,d) + min(L(p-r,d), L(p-r,d+-1) + P1, min_k L(p-r,k) + P2) - min_k L(p-r,k).
CostVolume aggregate_path(const CostVolume& cost, Direction dir, int p1, int p2);
/// Sum of the four scanline passes (OpenMP over independent scanlines).
CostVolume sgm_aggregate(const CostVolume& cost, int p1, int p2);

namespace reference {
CostVolume sgm_aggregate(const CostVolume& cost, int p1, int p2);
}

inline constexpr float kInvalidDisparity = -1.0f;

struct DisparityMap {
    int height = 0, width = 0;
    std::vector<float> values;  // kInvalidDisparity marks failed pixels

    float at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
    bool valid(int y, int x) const { return at(y, x) >= 0.0f; }
    double valid_fraction() const;
};

/// Winner-take-all with a uniqueness test: a pixel is invalid when the best cost among
/// disparities outside best+-1 is <= uniqueness * best (so exact ties are ambiguous).
DisparityMap compute_disparity(const CostVolume& aggregated, double uniqueness = 1.05);

/// Marks pixels invalid whose left-image block has mean |horizontal gradient| below `threshold`.
void reject_low_texture(DisparityMap& disp, const Image& left, int block, double threshold);

/// Full chain: cost, SGM, WTA, low-texture rejection and the optional left-right check.
DisparityMap disparity(const Image& left, const Image& right, const StereoParams& p = {});

struct DepthEstimate {
    std::optional<double> depth_cm;  // empty = no-depth signal
    double valid_fraction = 0.0;
    double median_disparity = 0.0;

    bool has_depth() const noexcept { return depth_cm.has_value(); }
};

/// depth = focal * baseline / median(valid disparities in roi). Reports no depth when fewer than
/// `min_valid` of the ROI pixels are valid or the median disparity is zero.
DepthEstimate roi_depth(const DisparityMap& disp, const BBox& roi, const StereoCalibration& cal,
                        double min_valid = 0.2);

}  // namespace zoomsr::stereo
