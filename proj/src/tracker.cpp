#include "zoomsr/tracker.hpp"

#include <cmath>
#include <cstring>

namespace zoomsr::tracker {

void KcfParams::validate() const {
    if (!(padding >= 0) || !(label_sigma_factor > 0) || !(kernel_sigma > 0) || !(lambda > 0))
        throw std::invalid_argument("kcf: padding, sigmas and lambda must be positive");
    if (!(interp >= 0 && interp <= 1)) throw std::invalid_argument("kcf: interpolation factor must be in [0,1]");
}

KcfModel KcfModel::clone() const {
    KcfModel c = *this;
    c.cosine_window = cosine_window.clone();
    c.yf = yf.clone();
    c.xf = xf.clone();
    c.alphaf = alphaf.clone();
    return c;
}

namespace {

bool same_mat(const cv::Mat& a, const cv::Mat& b) {
    if (a.size() != b.size() || a.type() != b.type()) return false;
    if (a.empty()) return true;
    const cv::Mat ac = a.isContinuous() ? a : a.clone(), bc = b.isContinuous() ? b : b.clone();
    return std::memcmp(ac.data, bc.data, ac.total() * ac.elemSize()) == 0;
}

cv::Mat fft(const cv::Mat& real) {
    cv::Mat out;
    cv::dft(real, out, cv::DFT_COMPLEX_OUTPUT);
    return out;
}

cv::Mat ifft_real(const cv::Mat& spec) {
    cv::Mat out;
    cv::dft(spec, out, cv::DFT_INVERSE | cv::DFT_SCALE | cv::DFT_REAL_OUTPUT);
    return out;
}

cv::Mat complex_divide(const cv::Mat& num, const cv::Mat& den_real_plus) {
    cv::Mat out(num.size(), CV_64FC2);
    for (int y = 0; y < num.rows; ++y)
        for (int x = 0; x < num.cols; ++x) {
            const auto n = num.at<cv::Vec2d>(y, x);
            const auto d = den_real_plus.at<cv::Vec2d>(y, x);
            const double mag = d[0] * d[0] + d[1] * d[1];
            out.at<cv::Vec2d>(y, x) = {(n[0] * d[0] + n[1] * d[1]) / mag, (n[1] * d[0] - n[0] * d[1]) / mag};
        }
    return out;
}

int even_size(double v) {
    int n = static_cast<int>(std::floor(v));
    if (n % 2 == 1) ++n;
    return std::max(n, 4);
}

// Sub-pixel offset of a peak from three samples (parabola vertex), clamped to half a pixel.
double parabolic(double left, double centre, double right) {
    const double denom = left - 2 * centre + right;
    if (std::abs(denom) < 1e-12) return 0.0;
    return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

void train(KcfModel& m, const cv::Mat& xf, double rate) {
    const cv::Mat kf = fft(gaussian_correlation(xf, xf, m.params.kernel_sigma));
    cv::Mat den = kf.clone();
    den.forEach<cv::Vec2d>([&](cv::Vec2d& v, const int*) { v[0] += m.params.lambda; });
    const cv::Mat alphaf = complex_divide(m.yf, den);
    if (rate >= 1.0) {
        m.xf = xf;
        m.alphaf = alphaf;
    } else {
        m.xf = (1.0 - rate) * m.xf + rate * xf;
        m.alphaf = (1.0 - rate) * m.alphaf + rate * alphaf;
    }
}

}  // namespace

bool same_model(const KcfModel& a, const KcfModel& b) {
    return a.window_w == b.window_w && a.window_h == b.window_h && same_mat(a.cosine_window, b.cosine_window) && same_mat(a.yf, b.yf) && same_mat(a.xf, b.xf) &&
           same_mat(a.alphaf, b.alphaf);
}

cv::Mat extract_patch(const Image& frame, double cx, double cy, const KcfModel& m) {
    const Image grey = frame.channels() == 1 ? frame : to_grayscale(frame);
    cv::Mat patch(m.window_h, m.window_w, CV_64F);
    const int x0 = static_cast<int>(std::lround(cx - m.window_w / 2.0));
    const int y0 = static_cast<int>(std::lround(cy - m.window_h / 2.0));
    double mean = 0;
    for (int y = 0; y < m.window_h; ++y)
        for (int x = 0; x < m.window_w; ++x) {
            const int sy = std::clamp(y0 + y, 0, grey.height() - 1);
            const int sx = std::clamp(x0 + x, 0, grey.width() - 1);
            patch.at<double>(y, x) = grey.at(sy, sx, 0);
            mean += patch.at<double>(y, x);
        }
    mean /= static_cast<double>(patch.total());
    patch -= mean;
    return patch.mul(m.cosine_window);
}

cv::Mat gaussian_correlation(const cv::Mat& xf, const cv::Mat& zf, double sigma) {
    const double n = static_cast<double>(xf.total());
    // Parseval: ||x||^2 = sum |X|^2 / N.
    auto energy = [n](const cv::Mat& f) {
        double e = 0;
        for (int y = 0; y < f.rows; ++y)
            for (int x = 0; x < f.cols; ++x) {
                const auto v = f.at<cv::Vec2d>(y, x);
                e += v[0] * v[0] + v[1] * v[1];
            }
        return e / n;
    };
    const double xx = energy(xf), zz = energy(zf);
    cv::Mat xzf;
    cv::mulSpectrums(zf, xf, xzf, 0, true);  // conj(X) .* Z
    const cv::Mat xz = ifft_real(xzf);
    cv::Mat k(xz.size(), CV_64F);
    for (int y = 0; y < xz.rows; ++y)
        for (int x = 0; x < xz.cols; ++x) {
            const double d = std::max(0.0, xx + zz - 2 * xz.at<double>(y, x)) / n;
            k.at<double>(y, x) = std::exp(-d / (sigma * sigma));
        }
    return k;
}

cv::Mat response(const KcfModel& m, const cv::Mat& zf) {
    const cv::Mat kzf = fft(gaussian_correlation(m.xf, zf, m.params.kernel_sigma));
    cv::Mat rf;
    cv::mulSpectrums(m.alphaf, kzf, rf, 0, false);
    return ifft_real(rf);
}

KcfModel init_tracker(const Image& frame, const BBox& roi, const KcfParams& params) {
    params.validate();
    if (!roi.valid() || roi.w < 2 || roi.h < 2) throw std::invalid_argument("kcf: degenerate roi");
    if (!roi.intersects(frame.width(), frame.height())) throw std::invalid_argument("kcf: roi outside the frame");
    KcfModel m;
    m.params = params;
    m.box = roi;
    m.window_w = even_size(roi.w * (1 + params.padding));
    m.window_h = even_size(roi.h * (1 + params.padding));
    cv::Mat hx(1, m.window_w, CV_64F), hy(m.window_h, 1, CV_64F);
    for (int i = 0; i < m.window_w; ++i) hx.at<double>(0, i) = 0.5 * (1 - std::cos(2 * CV_PI * i / (m.window_w - 1)));
    for (int i = 0; i < m.window_h; ++i) hy.at<double>(i, 0) = 0.5 * (1 - std::cos(2 * CV_PI * i / (m.window_h - 1)));
    m.cosine_window = hy * hx;

    // Gaussian regression target with its peak at zero (circular) shift.
    const double sigma = std::sqrt(roi.w * roi.h) * params.label_sigma_factor;
    cv::Mat y(m.window_h, m.window_w, CV_64F);
    for (int r = 0; r < m.window_h; ++r)
        for (int c = 0; c < m.window_w; ++c) {
            const int dy = r <= m.window_h / 2 ? r : r - m.window_h;
            const int dx = c <= m.window_w / 2 ? c : c - m.window_w;
            y.at<double>(r, c) = std::exp(-0.5 * (dx * dx + dy * dy) / (sigma * sigma));
        }
    m.yf = fft(y);
    train(m, fft(extract_patch(frame, roi.cx(), roi.cy(), m)), 1.0);
    m.last_peak = 1.0;
    return m;
}

std::pair<Detection, KcfModel> detect_and_update(const KcfModel& model, const Image& frame) {
    KcfModel m = model.clone();
    Detection det;
    det.box = m.box;
    if (!m.box.intersects(frame.width(), frame.height())) {
        det.lost = true;
        return {det, m};
    }
    const cv::Mat resp = response(m, fft(extract_patch(frame, m.box.cx(), m.box.cy(), m)));
    cv::Point peak;
    double peak_value = 0;
    cv::minMaxLoc(resp, nullptr, &peak_value, nullptr, &peak);
    det.peak = peak_value;
    const int W = m.window_w, H = m.window_h;
    auto at = [&](int r, int c) { return resp.at<double>((r + H) % H, (c + W) % W); };
    double dx = peak.x > W / 2 ? peak.x - W : peak.x;
    double dy = peak.y > H / 2 ? peak.y - H : peak.y;
    dx += parabolic(at(peak.y, peak.x - 1), peak_value, at(peak.y, peak.x + 1));
    dy += parabolic(at(peak.y - 1, peak.x), peak_value, at(peak.y + 1, peak.x));

    BBox moved = m.box;
    moved.x += dx;
    moved.y += dy;
    if (!moved.intersects(frame.width(), frame.height())) {
        det.lost = true;
        return {det, model.clone()};
    }
    m.box = moved;
    det.box = moved;
    m.last_peak = peak_value;
    if (m.params.interp > 0) train(m, fft(extract_patch(frame, moved.cx(), moved.cy(), m)), m.params.interp);
    return {det, m};
}

}  // namespace zoomsr::tracker
