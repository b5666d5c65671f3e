#include "zoomsr/geometry.hpp"

#include <sstream>
#include <stdexcept>

namespace zoomsr {

BBox parse_bbox(const std::string& text) {
    std::stringstream ss(text);
    double v[4];
    for (int i = 0; i < 4; ++i) {
        std::string field;
        if (!std::getline(ss, field, ',')) throw std::invalid_argument("bbox needs x,y,w,h: " + text);
        std::size_t used = 0;
        v[i] = std::stod(field, &used);
        if (used != field.size()) throw std::invalid_argument("bad bbox field '" + field + "'");
    }
    std::string rest;
    if (std::getline(ss, rest)) throw std::invalid_argument("bbox has extra fields: " + text);
    BBox b{v[0], v[1], v[2], v[3]};
    if (!b.valid()) throw std::invalid_argument("bbox width and height must be positive: " + text);
    return b;
}

std::string format_bbox(const BBox& b) {
    std::ostringstream os;
    os.precision(10);
    os << b.x << ',' << b.y << ',' << b.w << ',' << b.h;
    return os.str();
}

}  // namespace zoomsr
