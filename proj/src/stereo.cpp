#include "zoomsr/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace zoomsr::stereo {

void StereoCalibration::validate() const {
    if (!(focal_px > 0) || !(baseline_cm > 0)) throw std::invalid_argument("stereo calibration must be positive");
    if (!rectified) throw std::invalid_argument("stereo input must be rectified");
}

namespace {

std::vector<int> to_u8_gray(const Image& img) {
    const Image g = img.channels() == 1 ? img : to_grayscale(img);
    std::vector<int> out(g.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<int>(std::lround(std::clamp(g.data()[i], 0.0, 1.0) * 255.0));
    return out;
}

}  // namespace

CostVolume matching_cost(const Image& left, const Image& right, int block, int d_max) {
    if (!left.same_shape(right)) throw DimensionError("matching_cost: left/right shape mismatch");
    if (block < 1 || block % 2 == 0) throw std::invalid_argument("matching_cost: block must be odd");
    if (d_max < 1 || d_max >= left.width()) throw std::invalid_argument("matching_cost: d_max must be in [1, width)");
    const int h = left.height(), w = left.width(), r = block / 2;
    const auto l = to_u8_gray(left), rt = to_u8_gray(right);
    CostVolume cv(h, w, d_max);
    const int ph = h + 2 * r, pw = w + 2 * r;
#pragma omp parallel for schedule(static)
    for (int d = 0; d < d_max; ++d) {
        // Integral image of |L(y, x) - R(y, x - d)| over the edge-replicated frame.
        std::vector<std::int64_t> integral(static_cast<std::size_t>(ph + 1) * (pw + 1), 0);
        for (int py = 0; py < ph; ++py) {
            const int y = std::clamp(py - r, 0, h - 1);
            std::int64_t row = 0;
            for (int px = 0; px < pw; ++px) {
                const int x = std::clamp(px - r, 0, w - 1);
                const int xr = std::clamp(x - d, 0, w - 1);
                row += std::abs(l[static_cast<std::size_t>(y) * w + x] - rt[static_cast<std::size_t>(y) * w + xr]);
                integral[static_cast<std::size_t>(py + 1) * (pw + 1) + px + 1] =
                    integral[static_cast<std::size_t>(py) * (pw + 1) + px + 1] + row;
            }
        }
        auto I = [&](int yy, int xx) { return integral[static_cast<std::size_t>(yy) * (pw + 1) + xx]; };
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                if (x - d < 0) {
                    cv.at(y, x, d) = kMaxPixelCost * block * block;
                    continue;
                }
                const std::int64_t s = I(y + block, x + block) - I(y, x + block) - I(y + block, x) + I(y, x);
                cv.at(y, x, d) = static_cast<std::int32_t>(s);
            }
    }
    return cv;
}

namespace {

// Runs the recurrence along one scanline given by `n` pixel positions.
template <class PixelAt>
void scan(const CostVolume& cost, CostVolume& out, int n, PixelAt pixel, int p1, int p2, bool accumulate,
          std::vector<std::int32_t>& prev, std::vector<std::int32_t>& cur) {
    const int D = cost.disparities;
    std::int32_t prev_min = 0;
    for (int i = 0; i < n; ++i) {
        const auto [y, x] = pixel(i);
        std::int32_t cur_min = std::numeric_limits<std::int32_t>::max();
        for (int d = 0; d < D; ++d) {
            std::int32_t v = cost.at(y, x, d);
            if (i > 0) {
                std::int32_t best = std::min(prev[d], prev_min + p2);
                if (d > 0) best = std::min(best, prev[d - 1] + p1);
                if (d + 1 < D) best = std::min(best, prev[d + 1] + p1);
                v += best - prev_min;
            }
            cur[d] = v;
            cur_min = std::min(cur_min, v);
        }
        for (int d = 0; d < D; ++d) {
            if (accumulate)
                out.at(y, x, d) += cur[d];
            else
                out.at(y, x, d) = cur[d];
        }
        std::swap(prev, cur);
        prev_min = cur_min;
    }
}

void check_penalties(int p1, int p2) {
    if (p1 < 0 || p2 < p1) throw std::invalid_argument("sgm: penalties must satisfy 0 <= P1 <= P2");
}

void run_direction(const CostVolume& cost, CostVolume& out, Direction dir, int p1, int p2, bool accumulate,
                   bool parallel) {
    const int h = cost.height, w = cost.width, D = cost.disparities;
    const bool horizontal = dir == Direction::LeftToRight || dir == Direction::RightToLeft;
    const int lines = horizontal ? h : w;
#pragma omp parallel for schedule(static) if (parallel)
    for (int line = 0; line < lines; ++line) {
        std::vector<std::int32_t> prev(D), cur(D);
        switch (dir) {
            case Direction::LeftToRight:
                scan(cost, out, w, [&](int i) { return std::pair{line, i}; }, p1, p2, accumulate, prev, cur);
                break;
            case Direction::RightToLeft:
                scan(cost, out, w, [&](int i) { return std::pair{line, w - 1 - i}; }, p1, p2, accumulate, prev, cur);
                break;
            case Direction::TopToBottom:
                scan(cost, out, h, [&](int i) { return std::pair{i, line}; }, p1, p2, accumulate, prev, cur);
                break;
            case Direction::BottomToTop:
                scan(cost, out, h, [&](int i) { return std::pair{h - 1 - i, line}; }, p1, p2, accumulate, prev, cur);
                break;
        }
    }
}

constexpr Direction kDirections[] = {Direction::LeftToRight, Direction::RightToLeft, Direction::TopToBottom,
                                     Direction::BottomToTop};

}  // namespace

CostVolume aggregate_path(const CostVolume& cost, Direction dir, int p1, int p2) {
    check_penalties(p1, p2);
    CostVolume out(cost.height, cost.width, cost.disparities);
    run_direction(cost, out, dir, p1, p2, false, true);
    return out;
}

CostVolume sgm_aggregate(const CostVolume& cost, int p1, int p2) {
    check_penalties(p1, p2);
    CostVolume out(cost.height, cost.width, cost.disparities);
    // Each pass writes disjoint scanlines, so passes run one after another with parallel lines.
    for (Direction dir : kDirections) run_direction(cost, out, dir, p1, p2, true, true);
    return out;
}

CostVolume reference::sgm_aggregate(const CostVolume& cost, int p1, int p2) {
    check_penalties(p1, p2);
    CostVolume out(cost.height, cost.width, cost.disparities);
    for (Direction dir : kDirections) run_direction(cost, out, dir, p1, p2, true, false);
    return out;
}

double DisparityMap::valid_fraction() const {
    if (values.empty()) return 0.0;
    const auto n = std::count_if(values.begin(), values.end(), [](float v) { return v >= 0.0f; });
    return static_cast<double>(n) / static_cast<double>(values.size());
}

DisparityMap compute_disparity(const CostVolume& agg, double uniqueness) {
    DisparityMap m{agg.height, agg.width, std::vector<float>(static_cast<std::size_t>(agg.height) * agg.width)};
    const int D = agg.disparities;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < agg.height; ++y)
        for (int x = 0; x < agg.width; ++x) {
            int best = 0;
            for (int d = 1; d < D; ++d)
                if (agg.at(y, x, d) < agg.at(y, x, best)) best = d;
            std::int64_t second = std::numeric_limits<std::int64_t>::max();
            for (int d = 0; d < D; ++d)
                if (std::abs(d - best) > 1) second = std::min<std::int64_t>(second, agg.at(y, x, d));
            const bool ambiguous =
                second != std::numeric_limits<std::int64_t>::max() && second <= uniqueness * agg.at(y, x, best);
            m.values[static_cast<std::size_t>(y) * agg.width + x] = ambiguous ? kInvalidDisparity : static_cast<float>(best);
        }
    return m;
}

void reject_low_texture(DisparityMap& disp, const Image& left, int block, double threshold) {
    if (threshold <= 0) return;
    const auto g = to_u8_gray(left);
    const int h = disp.height, w = disp.width, r = block / 2;
    if (left.height() != h || left.width() != w) throw DimensionError("reject_low_texture: size mismatch");
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            long sum = 0;
            for (int dy = -r; dy <= r; ++dy) {
                const int yy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = std::clamp(x + dx, 0, w - 1), xn = std::min(xx + 1, w - 1);
                    sum += std::abs(g[static_cast<std::size_t>(yy) * w + xn] - g[static_cast<std::size_t>(yy) * w + xx]);
                }
            }
            if (sum < threshold * block * block) disp.values[static_cast<std::size_t>(y) * w + x] = kInvalidDisparity;
        }
}

DisparityMap disparity(const Image& left, const Image& right, const StereoParams& p) {
    const auto agg = sgm_aggregate(matching_cost(left, right, p.block, p.d_max), p.p1(), p.p2());
    DisparityMap dl = compute_disparity(agg, p.uniqueness);
    reject_low_texture(dl, left, p.block, p.texture_threshold);
    if (!p.left_right_check) return dl;
    // Right-view disparities from the mirrored pair: the mirrored right image plays the left role.
    const auto agg_r =
        sgm_aggregate(matching_cost(flip_horizontal(right), flip_horizontal(left), p.block, p.d_max), p.p1(), p.p2());
    const DisparityMap dr_flipped = compute_disparity(agg_r, p.uniqueness);
    const int w = dl.width;
    for (int y = 0; y < dl.height; ++y)
        for (int x = 0; x < w; ++x) {
            float& d = dl.values[static_cast<std::size_t>(y) * w + x];
            if (d < 0) continue;
            const int xr = x - static_cast<int>(d);
            const float dr = xr >= 0 ? dr_flipped.at(y, w - 1 - xr) : kInvalidDisparity;
            if (dr < 0 || std::abs(dr - d) > p.lr_tolerance) d = kInvalidDisparity;
        }
    return dl;
}

DepthEstimate roi_depth(const DisparityMap& disp, const BBox& roi, const StereoCalibration& cal, double min_valid) {
    cal.validate();
    const int x0 = std::clamp(static_cast<int>(std::floor(roi.x)), 0, disp.width);
    const int y0 = std::clamp(static_cast<int>(std::floor(roi.y)), 0, disp.height);
    const int x1 = std::clamp(static_cast<int>(std::ceil(roi.x + roi.w)), 0, disp.width);
    const int y1 = std::clamp(static_cast<int>(std::ceil(roi.y + roi.h)), 0, disp.height);
    DepthEstimate est;
    const long total = static_cast<long>(x1 - x0) * (y1 - y0);
    if (total <= 0) return est;
    std::vector<double> valid;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x)
            if (disp.valid(y, x)) valid.push_back(disp.at(y, x));
    est.valid_fraction = static_cast<double>(valid.size()) / static_cast<double>(total);
    if (valid.empty() || est.valid_fraction < min_valid) return est;
    std::sort(valid.begin(), valid.end());
    const std::size_t n = valid.size();
    est.median_disparity = n % 2 == 1 ? valid[n / 2] : 0.5 * (valid[n / 2 - 1] + valid[n / 2]);
    if (est.median_disparity <= 0) return est;
    est.depth_cm = cal.focal_px * cal.baseline_cm / est.median_disparity;
    return est;
}

}  // namespace zoomsr::stereo
