#include "zoomsr/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace zoomsr {

namespace fs = std::filesystem;

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
    if (height <= 0 || width <= 0 || channels <= 0)
        throw DimensionError("Image dimensions must be positive");
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Image::Image(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    if (height <= 0 || width <= 0 || channels <= 0)
        throw DimensionError("Image dimensions must be positive");
    if (data_.size() != static_cast<std::size_t>(height) * width * channels)
        throw DimensionError("Image data length does not match height*width*channels");
}

bool Image::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Image& Image::clamp01() {
    for (auto& v : data_) v = std::clamp(v, 0.0, 1.0);
    return *this;
}

ScaleFactor::ScaleFactor(int value) : value_(value) {
    if (value != 2 && value != 4 && value != 8)
        throw std::invalid_argument("scale factor must be one of 2, 4, 8 (got " + std::to_string(value) + ")");
}

int ScaleFactor::level() const noexcept { return value_ == 2 ? 1 : value_ == 4 ? 2 : 3; }

void VideoSequence::validate() const {
    if (frames.empty()) throw DimensionError("video sequence has no frames");
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (!frames[i].same_shape(frames[0]))
            throw DimensionError("frame " + std::to_string(i) + " differs in size from frame 0");
    }
}

namespace {

struct Tap {
    int lo, hi;
    double w_hi;
};

// Linear interpolation taps along one axis for the centre-aligned convention.
std::vector<Tap> linear_taps(int in_size, int out_size) {
    std::vector<Tap> taps(out_size);
    const double scale = static_cast<double>(in_size) / out_size;
    for (int i = 0; i < out_size; ++i) {
        double src = (i + 0.5) * scale - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in_size - 1));
        int lo = static_cast<int>(std::floor(src));
        int hi = std::min(lo + 1, in_size - 1);
        taps[i] = {lo, hi, src - lo};
    }
    return taps;
}

}  // namespace

Image bilinear_resize(const Image& img, int out_height, int out_width) {
    if (img.empty()) throw DimensionError("bilinear_resize: empty image");
    const int c = img.channels();
    const auto ty = linear_taps(img.height(), out_height);
    const auto tx = linear_taps(img.width(), out_width);
    Image out(out_height, out_width, c);
    for (int y = 0; y < out_height; ++y) {
        const auto [y0, y1, wy] = ty[y];
        for (int x = 0; x < out_width; ++x) {
            const auto [x0, x1, wx] = tx[x];
            for (int k = 0; k < c; ++k) {
                const double top = (1.0 - wx) * img.at(y0, x0, k) + wx * img.at(y0, x1, k);
                const double bot = (1.0 - wx) * img.at(y1, x0, k) + wx * img.at(y1, x1, k);
                out.at(y, x, k) = (1.0 - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

Image bilinear_downsample(const Image& img, int r) {
    if (r < 1) throw DimensionError("bilinear_downsample: factor must be >= 1");
    if (img.height() % r != 0 || img.width() % r != 0)
        throw DimensionError("bilinear_downsample: " + std::to_string(img.height()) + "x" +
                             std::to_string(img.width()) + " not divisible by " + std::to_string(r));
    return bilinear_resize(img, img.height() / r, img.width() / r);
}

Image bilinear_upsample(const Image& img, int r) {
    if (r < 1) throw DimensionError("bilinear_upsample: factor must be >= 1");
    return bilinear_resize(img, img.height() * r, img.width() * r);
}

namespace {

double cubic_weight(double t) {
    constexpr double a = -0.75;
    t = std::abs(t);
    if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
    return 0.0;
}

}  // namespace

Image bicubic_upsample(const Image& img, int r) {
    const int h = img.height(), w = img.width(), c = img.channels();
    const int oh = h * r, ow = w * r;
    auto taps = [r](int i, int n) {
        const double src = (i + 0.5) / r - 0.5;
        const int base = static_cast<int>(std::floor(src));
        const double t = src - base;
        std::array<std::pair<int, double>, 4> out{};
        for (int k = -1; k <= 2; ++k)
            out[k + 1] = {std::clamp(base + k, 0, n - 1), cubic_weight(k - t)};
        return out;
    };
    Image out(oh, ow, c);
    for (int y = 0; y < oh; ++y) {
        const auto wy = taps(y, h);
        for (int x = 0; x < ow; ++x) {
            const auto wx = taps(x, w);
            for (int k = 0; k < c; ++k) {
                double acc = 0.0;
                for (const auto& [yy, fy] : wy)
                    for (const auto& [xx, fx] : wx) acc += fy * fx * img.at(yy, xx, k);
                out.at(y, x, k) = acc;
            }
        }
    }
    return out.clamp01();
}

Image space_to_depth(const Image& img, int r) {
    if (r < 1 || img.height() % r != 0 || img.width() % r != 0)
        throw DimensionError("space_to_depth: dimensions not divisible by " + std::to_string(r));
    const int oh = img.height() / r, ow = img.width() / r, c = img.channels();
    Image out(oh, ow, c * r * r);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x)
            for (int dy = 0; dy < r; ++dy)
                for (int dx = 0; dx < r; ++dx)
                    for (int k = 0; k < c; ++k)
                        out.at(y, x, (dy * r + dx) * c + k) = img.at(y * r + dy, x * r + dx, k);
    return out;
}

Image depth_to_space(const Image& img, int r) {
    if (r < 1 || img.channels() % (r * r) != 0)
        throw DimensionError("depth_to_space: channels " + std::to_string(img.channels()) +
                             " not divisible by " + std::to_string(r * r));
    const int c = img.channels() / (r * r);
    Image out(img.height() * r, img.width() * r, c);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int dy = 0; dy < r; ++dy)
                for (int dx = 0; dx < r; ++dx)
                    for (int k = 0; k < c; ++k)
                        out.at(y * r + dy, x * r + dx, k) = img.at(y, x, (dy * r + dx) * c + k);
    return out;
}

Image concat_channels(std::span<const Image> images) {
    if (images.empty()) throw DimensionError("concat_channels: no inputs");
    const int h = images[0].height(), w = images[0].width();
    int total = 0;
    for (const auto& im : images) {
        if (im.height() != h || im.width() != w)
            throw DimensionError("concat_channels: mismatched spatial dimensions");
        total += im.channels();
    }
    Image out(h, w, total);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int off = 0;
            for (const auto& im : images) {
                for (int k = 0; k < im.channels(); ++k) out.at(y, x, off + k) = im.at(y, x, k);
                off += im.channels();
            }
        }
    return out;
}

Image concat_channels(std::initializer_list<Image> images) {
    return concat_channels(std::span<const Image>(images.begin(), images.size()));
}

Image slice_channels(const Image& img, int first, int count) {
    if (first < 0 || count <= 0 || first + count > img.channels())
        throw DimensionError("slice_channels: range out of bounds");
    Image out(img.height(), img.width(), count);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int k = 0; k < count; ++k) out.at(y, x, k) = img.at(y, x, first + k);
    return out;
}

Image to_grayscale(const Image& img) {
    if (img.channels() == 1) return img;
    if (img.channels() < 3) throw DimensionError("to_grayscale: expected 1 or 3 channels");
    Image out(img.height(), img.width(), 1);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            out.at(y, x, 0) = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
    return out;
}

Image crop(const Image& img, int y, int x, int height, int width) {
    if (y < 0 || x < 0 || height <= 0 || width <= 0 || y + height > img.height() || x + width > img.width())
        throw DimensionError("crop: window outside image");
    Image out(height, width, img.channels());
    for (int yy = 0; yy < height; ++yy)
        for (int xx = 0; xx < width; ++xx)
            for (int k = 0; k < img.channels(); ++k) out.at(yy, xx, k) = img.at(y + yy, x + xx, k);
    return out;
}

Image flip_horizontal(const Image& img) {
    Image out(img.height(), img.width(), img.channels());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            for (int k = 0; k < img.channels(); ++k) out.at(y, x, k) = img.at(y, img.width() - 1 - x, k);
    return out;
}

Image load_image(const fs::path& path) {
    cv::Mat m = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (m.empty()) throw IoError("cannot read image " + path.string());
    if (m.channels() == 4) cv::cvtColor(m, m, cv::COLOR_BGRA2BGR);
    if (m.channels() == 3) cv::cvtColor(m, m, cv::COLOR_BGR2RGB);
    const double scale = m.depth() == CV_16U ? 1.0 / 65535.0 : 1.0 / 255.0;
    cv::Mat f;
    m.convertTo(f, CV_64F, scale);
    const int c = f.channels();
    std::vector<double> data(reinterpret_cast<const double*>(f.datastart),
                             reinterpret_cast<const double*>(f.dataend));
    return Image(f.rows, f.cols, c, std::move(data));
}

void save_image(const Image& img, const fs::path& path) {
    if (img.channels() != 1 && img.channels() != 3)
        throw DimensionError("save_image: only 1- or 3-channel images can be written");
    cv::Mat f(img.height(), img.width(), img.channels() == 1 ? CV_64FC1 : CV_64FC3,
              const_cast<double*>(img.data().data()));
    cv::Mat out;
    f.convertTo(out, CV_8U, 255.0);  // saturating round-to-nearest
    if (out.channels() == 3) cv::cvtColor(out, out, cv::COLOR_RGB2BGR);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    if (!cv::imwrite(path.string(), out)) throw IoError("cannot write image " + path.string());
}

std::vector<fs::path> list_frame_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (ext == ".png" || ext == ".bmp" || ext == ".ppm" || ext == ".pgm" || ext == ".tif" || ext == ".tiff")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

VideoSequence load_frames(const fs::path& dir) {
    const auto files = list_frame_files(dir);
    if (files.empty()) throw IoError("no frames found in " + dir.string());
    VideoSequence seq;
    const auto manifest = dir / "manifest.txt";
    if (fs::exists(manifest)) {
        std::ifstream in(manifest);
        std::string line;
        while (std::getline(in, line)) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                s.erase(0, s.find_first_not_of(" \t"));
                s.erase(s.find_last_not_of(" \t\r") + 1);
                return s;
            };
            if (trim(line.substr(0, eq)) == "frame_rate") seq.frame_rate = std::stod(trim(line.substr(eq + 1)));
        }
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
        Image im;
        try {
            im = load_image(files[i]);
        } catch (const IoError&) {
            throw IoError("cannot read frame " + std::to_string(i) + ": " + files[i].string());
        }
        if (im.channels() == 1) im = concat_channels({im, im, im});
        if (!seq.frames.empty() && !im.same_shape(seq.frames.front()))
            throw DimensionError("frame " + std::to_string(i) + " (" + files[i].filename().string() +
                                 ") differs in size from frame 0");
        seq.frames.push_back(std::move(im));
    }
    return seq;
}

void save_frames(const VideoSequence& seq, const fs::path& dir) {
    seq.validate();
    fs::create_directories(dir);
    for (std::size_t i = 0; i < seq.frames.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%06zu.png", i + 1);
        save_image(seq.frames[i], dir / name);
    }
    std::ofstream out(dir / "manifest.txt");
    if (!out) throw IoError("cannot write manifest in " + dir.string());
    out << "frame_rate = " << seq.frame_rate << "\n" << "frame_count = " << seq.frames.size() << "\n";
}

}  // namespace zoomsr
