#pragma once

#include <string>

namespace zoomsr {

/// Axis-aligned box in pixel units; (x, y) is the top-left corner.
struct BBox {
    double x = 0, y = 0, w = 0, h = 0;

    double cx() const noexcept { return x + w / 2; }
    double cy() const noexcept { return y + h / 2; }
    bool valid() const noexcept { return w > 0 && h > 0; }
    /// True if any part of the box overlaps a width x height frame.
    bool intersects(int width, int height) const noexcept {
        return x < width && y < height && x + w > 0 && y + h > 0;
    }
    friend bool operator==(const BBox&, const BBox&) = default;
};

/// Parses "x,y,w,h".
BBox parse_bbox(const std::string& text);
std::string format_bbox(const BBox& b);

}  // namespace zoomsr
