#pragma once

#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "zoomsr/image.hpp"
#include "zoomsr/networks.hpp"

namespace zoomsr::metrics {

/// Returned by psnr() for identical images.
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE) over all pixels and channels jointly.
double psnr(const Image& a, const Image& b, double peak = 1.0);

/// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5) over valid window positions,
/// computed per channel and averaged. Throws DimensionError if either side is below 11 px.
double ssim(const Image& a, const Image& b, double peak = 1.0);

/// Share of AC spectral energy within +-1 frequency bin of (pi,pi), (pi,0) and (0,pi),
/// averaged over channels. A constant image scores 0. Requires even height and width.
double checkerboard_score(const Image& img);

struct EvalRow {
    int scale = 0;
    double psnr_mean = 0;          // over finite values; kInfinitePsnr when every pair was identical
    double ssim_mean = 0;
    double checkerboard_mean = 0;
    int count = 0;
    int infinite_psnr = 0;         // pairs excluded from psnr_mean
};

struct EvalReport {
    std::vector<EvalRow> rows;  // one per scale, ascending
    const EvalRow& at_scale(int scale) const;
};

/// Collects per-image metrics and reduces them order-independently (sorted sums), so a report
/// does not depend on the order images were added.
class EvalAccumulator {
public:
    void add(int scale, const Image& reference, const Image& prediction);
    EvalReport report() const;

private:
    struct Samples {
        std::vector<double> psnr, ssim, checker;
        int infinite = 0;
    };
    std::map<int, Samples> per_scale_;
};

/// Synthesises LR inputs from each HR image (train conventions) and scores every pyramid
/// level against its target. Video generators get a zero feedback state.
EvalReport evaluate(const net::Generator& g, std::span<const Image> hr_images);
/// Same protocol with bicubic upsampling of the LR input standing in for the network.
EvalReport evaluate_bicubic(std::span<const Image> hr_images, int levels = 3);

/// Header `scale,psnr,ssim,checkerboard,count`; infinite PSNR written as `inf`.
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);
EvalReport read_report_csv(const std::filesystem::path& path);
std::string format_report_table(const EvalReport& report);

}  // namespace zoomsr::metrics
