#include "zoomsr/synthetic.hpp"

#include <cmath>
#include <random>

#include <opencv2/imgproc.hpp>

namespace zoomsr::synthetic {

namespace {

Image from_mat(const cv::Mat& m) {
    Image img(m.rows, m.cols, 3);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x)
            for (int c = 0; c < 3; ++c) img.at(y, x, c) = std::clamp(static_cast<double>(m.at<cv::Vec3f>(y, x)[c]), 0.0, 1.0);
    return img;
}

}  // namespace

Image scene(int height, int width, std::uint64_t seed) {
    if (height < 1 || width < 1) throw DimensionError("synthetic scene must be non-empty");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double size = std::max(height, width);

    cv::Mat m(height, width, CV_32FC3);
    const double gx = u(rng) - 0.5, gy = u(rng) - 0.5;
    const double fx = (2 + 6 * u(rng)) / size, fy = (2 + 6 * u(rng)) / size, ph = 6.28 * u(rng);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double shade = 0.55 + 0.2 * (gx * x + gy * y) / size + 0.08 * std::sin(fx * 6.28 * x + ph) *
                                                                                   std::cos(fy * 6.28 * y);
            m.at<cv::Vec3f>(y, x) = cv::Vec3f(static_cast<float>(shade * 0.55), static_cast<float>(shade * 0.35),
                                              static_cast<float>(shade * 0.95));
        }

    // Vessel-like polylines.
    const int vessels = 3 + static_cast<int>(u(rng) * 4);
    for (int v = 0; v < vessels; ++v) {
        std::vector<cv::Point> pts;
        double x = u(rng) * width, y = u(rng) * height, a = u(rng) * 6.28;
        for (int k = 0; k < 8; ++k) {
            pts.emplace_back(static_cast<int>(x), static_cast<int>(y));
            a += (u(rng) - 0.5) * 1.2;
            x += std::cos(a) * size / 8;
            y += std::sin(a) * size / 8;
        }
        const float shade = static_cast<float>(0.2 + 0.3 * u(rng));
        const int thick = 1 + static_cast<int>(u(rng) * size / 40);
        cv::polylines(m, pts, false, cv::Scalar(shade * 0.4f, shade * 0.2f, shade), thick, cv::LINE_AA);
    }

    // Bright specular blobs and dark instrument bars.
    for (int b = 0; b < 4; ++b) {
        const cv::Point c(static_cast<int>(u(rng) * width), static_cast<int>(u(rng) * height));
        const cv::Size axes(1 + static_cast<int>(u(rng) * size / 10), 1 + static_cast<int>(u(rng) * size / 14));
        cv::ellipse(m, c, axes, u(rng) * 180, 0, 360, cv::Scalar(0.85, 0.85, 0.95), -1, cv::LINE_AA);
    }
    for (int b = 0; b < 2; ++b) {
        const cv::Point p0(static_cast<int>(u(rng) * width), static_cast<int>(u(rng) * height));
        const cv::Point p1(static_cast<int>(u(rng) * width), static_cast<int>(u(rng) * height));
        const float g = static_cast<float>(0.3 + 0.4 * u(rng));
        cv::line(m, p0, p1, cv::Scalar(g, g, g), 2 + static_cast<int>(u(rng) * size / 20), cv::LINE_AA);
    }

    cv::Mat noise(height, width, CV_32FC3);
    std::normal_distribution<float> grain(0.0f, 0.03f);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) noise.at<cv::Vec3f>(y, x) = cv::Vec3f(grain(rng), grain(rng), grain(rng));
    cv::GaussianBlur(noise, noise, cv::Size(3, 3), 0.7);
    m += noise;
    return from_mat(m);
}

VideoSequence panning_sequence(int height, int width, int frames, double dx, double dy, std::uint64_t seed) {
    if (frames < 1) throw std::invalid_argument("panning sequence needs at least one frame");
    const int mx = static_cast<int>(std::ceil(std::abs(dx) * (frames - 1))) + 2;
    const int my = static_cast<int>(std::ceil(std::abs(dy) * (frames - 1))) + 2;
    const Image big = scene(height + 2 * my, width + 2 * mx, seed);
    VideoSequence seq;
    for (int t = 0; t < frames; ++t) {
        // Shift the viewport so content moves by (dx, dy) per frame.
        const double ox = mx - dx * t, oy = my - dy * t;
        Image f(height, width, 3);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double sx = x + ox, sy = y + oy;
                const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
                const double ax = sx - x0, ay = sy - y0;
                const int x1 = std::min(x0 + 1, big.width() - 1), y1 = std::min(y0 + 1, big.height() - 1);
                for (int c = 0; c < 3; ++c)
                    f.at(y, x, c) = (1 - ay) * ((1 - ax) * big.at(y0, x0, c) + ax * big.at(y0, x1, c)) +
                                    ay * ((1 - ax) * big.at(y1, x0, c) + ax * big.at(y1, x1, c));
            }
        seq.frames.push_back(std::move(f));
    }
    return seq;
}

}  // namespace zoomsr::synthetic
