#include "zoomsr/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <opencv2/core.hpp>

#include "zoomsr/pairs.hpp"

namespace zoomsr::metrics {

double psnr(const Image& a, const Image& b, double peak) {
    if (!a.same_shape(b)) throw DimensionError("psnr: shape mismatch");
    if (a.empty()) throw DimensionError("psnr: empty image");
    double sse = 0.0;
    const auto x = a.data();
    const auto y = b.data();
    for (std::size_t i = 0; i < x.size(); ++i) sse += (x[i] - y[i]) * (x[i] - y[i]);
    if (sse == 0.0) return kInfinitePsnr;
    const double mse = sse / static_cast<double>(x.size());
    return 10.0 * std::log10(peak * peak / mse);
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;

std::array<double, kSsimWindow> gaussian_taps() {
    std::array<double, kSsimWindow> g{};
    double total = 0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kSsimWindow / 2;
        g[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
        total += g[i];
    }
    for (auto& v : g) v /= total;
    return g;
}

// Separable "valid" Gaussian filter of a single-channel plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int h, int w,
                                 const std::array<double, kSsimWindow>& g) {
    const int ow = w - kSsimWindow + 1, oh = h - kSsimWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int k = 0; k < kSsimWindow; ++k) s += g[k] * plane[static_cast<std::size_t>(y) * w + x + k];
            rows[static_cast<std::size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0;
            for (int k = 0; k < kSsimWindow; ++k) s += g[k] * rows[static_cast<std::size_t>(y + k) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

std::vector<double> channel_plane(const Image& img, int c) {
    std::vector<double> p(static_cast<std::size_t>(img.height()) * img.width());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) p[static_cast<std::size_t>(y) * img.width() + x] = img.at(y, x, c);
    return p;
}

}  // namespace

double ssim(const Image& a, const Image& b, double peak) {
    if (!a.same_shape(b)) throw DimensionError("ssim: shape mismatch");
    if (a.height() < kSsimWindow || a.width() < kSsimWindow)
        throw DimensionError("ssim: image smaller than the 11x11 window");
    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const auto g = gaussian_taps();
    const int h = a.height(), w = a.width();
    double total = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        const auto pa = channel_plane(a, c);
        const auto pb = channel_plane(b, c);
        std::vector<double> aa(pa.size()), bb(pa.size()), ab(pa.size());
        for (std::size_t i = 0; i < pa.size(); ++i) {
            aa[i] = pa[i] * pa[i];
            bb[i] = pb[i] * pb[i];
            ab[i] = pa[i] * pb[i];
        }
        const auto mu_a = filter_valid(pa, h, w, g), mu_b = filter_valid(pb, h, w, g);
        const auto e_aa = filter_valid(aa, h, w, g), e_bb = filter_valid(bb, h, w, g), e_ab = filter_valid(ab, h, w, g);
        double sum = 0.0;
        for (std::size_t i = 0; i < mu_a.size(); ++i) {
            const double va = e_aa[i] - mu_a[i] * mu_a[i];
            const double vb = e_bb[i] - mu_b[i] * mu_b[i];
            const double cov = e_ab[i] - mu_a[i] * mu_b[i];
            sum += ((2 * mu_a[i] * mu_b[i] + c1) * (2 * cov + c2)) /
                   ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
        }
        total += sum / static_cast<double>(mu_a.size());
    }
    return total / a.channels();
}

double checkerboard_score(const Image& img) {
    const int h = img.height(), w = img.width();
    if (h % 2 != 0 || w % 2 != 0) throw DimensionError("checkerboard_score: dimensions must be even");
    auto near = [](int i, int centre, int n) {
        const int d = std::abs(i - centre) % n;
        return std::min(d, n - d) <= 1;
    };
    double score = 0.0;
    for (int c = 0; c < img.channels(); ++c) {
        cv::Mat plane(h, w, CV_64F);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) plane.at<double>(y, x) = img.at(y, x, c);
        cv::Mat spec;
        cv::dft(plane, spec, cv::DFT_COMPLEX_OUTPUT);
        double total = 0, dc = 0, nyquist = 0;
        for (int u = 0; u < h; ++u)
            for (int v = 0; v < w; ++v) {
                const auto z = spec.at<cv::Vec2d>(u, v);
                const double e = z[0] * z[0] + z[1] * z[1];
                total += e;
                if (u == 0 && v == 0) {
                    dc = e;
                    continue;
                }
                const bool nu = near(u, h / 2, h), nv = near(v, w / 2, w);
                const bool zu = near(u, 0, h), zv = near(v, 0, w);
                if ((nu && nv) || (nu && zv) || (zu && nv)) nyquist += e;
            }
        const double ac = total - dc;
        // Rounding residue of a flat plane is ~1e-32 of its energy; treat it as no AC content.
        if (ac > 1e-20 * total) score += nyquist / ac;
    }
    return score / img.channels();
}

const EvalRow& EvalReport::at_scale(int scale) const {
    for (const auto& r : rows)
        if (r.scale == scale) return r;
    throw std::out_of_range("report has no row for scale " + std::to_string(scale));
}

void EvalAccumulator::add(int scale, const Image& reference, const Image& prediction) {
    auto& s = per_scale_[scale];
    const double p = psnr(reference, prediction);
    if (std::isinf(p))
        ++s.infinite;
    else
        s.psnr.push_back(p);
    s.ssim.push_back(ssim(reference, prediction));
    s.checker.push_back(checkerboard_score(prediction));
}

namespace {

double sorted_mean(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

EvalReport EvalAccumulator::report() const {
    if (per_scale_.empty()) throw std::invalid_argument("evaluate: empty dataset");
    EvalReport r;
    for (const auto& [scale, s] : per_scale_) {
        EvalRow row;
        row.scale = scale;
        row.count = static_cast<int>(s.ssim.size());
        row.infinite_psnr = s.infinite;
        row.psnr_mean = s.psnr.empty() ? kInfinitePsnr : sorted_mean(s.psnr);
        row.ssim_mean = sorted_mean(s.ssim);
        row.checkerboard_mean = sorted_mean(s.checker);
        r.rows.push_back(row);
    }
    return r;
}

EvalReport evaluate(const net::Generator& g, std::span<const Image> hr_images) {
    if (hr_images.empty()) throw std::invalid_argument("evaluate: empty dataset");
    const int levels = g.config().levels;
    const int extra = g.config().input_channels - 3;
    EvalAccumulator acc;
    for (const auto& hr : hr_images) {
        const auto pair = synthesize_pairs(hr, levels);
        const Image input =
            extra > 0 ? concat_channels({Image(pair.lr.height(), pair.lr.width(), extra), pair.lr}) : pair.lr;
        const auto out = g.infer(input);
        for (int s = 1; s <= levels; ++s) acc.add(1 << s, pair.targets.at(1 << s), out[s - 1]);
    }
    return acc.report();
}

EvalReport evaluate_bicubic(std::span<const Image> hr_images, int levels) {
    if (hr_images.empty()) throw std::invalid_argument("evaluate: empty dataset");
    EvalAccumulator acc;
    for (const auto& hr : hr_images) {
        const auto pair = synthesize_pairs(hr, levels);
        for (int s = 1; s <= levels; ++s) {
            Image up = bicubic_upsample(pair.lr, 1 << s);
            acc.add(1 << s, pair.targets.at(1 << s), up.clamp01());
        }
    }
    return acc.report();
}

namespace {

std::string fmt(double v) {
    if (std::isinf(v)) return "inf";
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

void write_report_csv(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report " + path.string());
    out << "scale,psnr,ssim,checkerboard,count\n";
    for (const auto& r : report.rows)
        out << r.scale << ',' << fmt(r.psnr_mean) << ',' << fmt(r.ssim_mean) << ',' << fmt(r.checkerboard_mean) << ','
            << r.count << '\n';
    if (!out) throw IoError("failed writing report " + path.string());
}

EvalReport read_report_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read report " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "scale,psnr,ssim,checkerboard,count") throw IoError("unexpected report header: " + line);
    EvalReport report;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string f[5];
        for (auto& s : f)
            if (!std::getline(ss, s, ',')) throw IoError("short report row: " + line);
        EvalRow r;
        r.scale = std::stoi(f[0]);
        r.psnr_mean = f[1] == "inf" ? kInfinitePsnr : std::stod(f[1]);
        r.ssim_mean = std::stod(f[2]);
        r.checkerboard_mean = std::stod(f[3]);
        r.count = std::stoi(f[4]);
        report.rows.push_back(r);
    }
    return report;
}

std::string format_report_table(const EvalReport& report) {
    std::ostringstream os;
    os << std::left << std::setw(7) << "scale" << std::setw(11) << "PSNR(dB)" << std::setw(9) << "SSIM" << std::setw(14)
       << "checkerboard" << "count\n";
    int excluded = 0;
    for (const auto& r : report.rows) {
        std::ostringstream p;
        if (std::isinf(r.psnr_mean))
            p << "inf";
        else
            p << std::fixed << std::setprecision(2) << r.psnr_mean;
        os << std::left << std::setw(7) << ("x" + std::to_string(r.scale)) << std::setw(11) << p.str() << std::fixed
           << std::setprecision(4) << std::setw(9) << r.ssim_mean << std::setprecision(5) << std::setw(14)
           << r.checkerboard_mean << r.count << (r.infinite_psnr > 0 ? " *" : "") << '\n';
        excluded += r.infinite_psnr;
    }
    if (excluded > 0) os << "* " << excluded << " identical pair(s) excluded from the PSNR mean\n";
    return os.str();
}

}  // namespace zoomsr::metrics
