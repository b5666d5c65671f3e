#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "zoomsr/errors.hpp"

namespace zoomsr {

/// Dense H x W x C raster, row-major with channels fastest: index (y*W + x)*C + c.
/// Image-valued content is normalised to [0,1]; flow/feature content may be unbounded.
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels, double fill = 0.0);
    Image(int height, int width, int channels, std::vector<double> data);

    int height() const noexcept { return height_; }
    int width() const noexcept { return width_; }
    int channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& at(int y, int x, int c) { return data_[index(y, x, c)]; }
    double at(int y, int x, int c) const { return data_[index(y, x, c)]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<double>& storage() noexcept { return data_; }

    bool same_shape(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }
    bool all_finite() const noexcept;

    /// Clamp every value into [0,1] in place.
    Image& clamp01();

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t index(int y, int x, int c) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Integer upscaling factor restricted to {2, 4, 8}.
class ScaleFactor {
public:
    explicit ScaleFactor(int value);
    int value() const noexcept { return value_; }
    /// log2 of the factor, i.e. the pyramid level that emits it.
    int level() const noexcept;
    friend bool operator==(ScaleFactor, ScaleFactor) = default;

private:
    int value_;
};

struct VideoSequence {
    std::vector<Image> frames;
    double frame_rate = 25.0;

    /// Throws DimensionError unless non-empty with uniform frame dimensions.
    void validate() const;
};

// Resampling uses the centre-aligned (half-pixel) convention throughout: output pixel i
// samples source coordinate (i + 0.5) / scale - 0.5, clamped to the edge. Downsampling is
// point-sampled bilinear interpolation (no prefilter), so r = 2 averages each 2x2 block.

/// Bilinear downsample by an integer factor (any r >= 1 here; pipeline uses ScaleFactor).
Image bilinear_downsample(const Image& img, int r);
inline Image bilinear_downsample(const Image& img, ScaleFactor r) { return bilinear_downsample(img, r.value()); }

Image bilinear_upsample(const Image& img, int r);
inline Image bilinear_upsample(const Image& img, ScaleFactor r) { return bilinear_upsample(img, r.value()); }

/// Bilinear resize to an arbitrary size under the same convention.
Image bilinear_resize(const Image& img, int out_height, int out_width);

/// Bicubic (a = -0.75) upsampling used as the interpolation baseline in evaluation.
Image bicubic_upsample(const Image& img, int r);

/// Folds each r x r block into channels. Output channel index for source offset (dy, dx)
/// and channel c is (dy * r + dx) * C + c  (block-row-major, channel fastest).
Image space_to_depth(const Image& img, int r);
/// Exact inverse of space_to_depth.
Image depth_to_space(const Image& img, int r);

Image concat_channels(std::span<const Image> images);
Image concat_channels(std::initializer_list<Image> images);

/// Channel slice [first, first + count).
Image slice_channels(const Image& img, int first, int count);

/// ITU-R BT.601 luma of an RGB image (single-channel images pass through).
Image to_grayscale(const Image& img);

Image crop(const Image& img, int y, int x, int height, int width);
Image flip_horizontal(const Image& img);

// Frame-directory I/O. Frames are 8-bit RGB PNG files named 000001.png, 000002.png, ...
// with a `manifest.txt` holding `frame_rate = ...` and `frame_count = ...`.

Image load_image(const std::filesystem::path& path);
void save_image(const Image& img, const std::filesystem::path& path);

/// Lists the lexicographically ordered raster files of a directory.
std::vector<std::filesystem::path> list_frame_files(const std::filesystem::path& dir);

VideoSequence load_frames(const std::filesystem::path& dir);
void save_frames(const VideoSequence& seq, const std::filesystem::path& dir);

}  // namespace zoomsr
