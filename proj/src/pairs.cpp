#include "zoomsr/pairs.hpp"

#include <string>

namespace zoomsr {

TrainingPair synthesize_pairs(const Image& hr, int levels) {
    if (levels < 1) throw std::invalid_argument("synthesize_pairs: levels must be >= 1");
    const int top = 1 << levels;
    if (hr.height() < top || hr.width() < top || hr.height() % top != 0 || hr.width() % top != 0)
        throw DimensionError("synthesize_pairs: crop " + std::to_string(hr.height()) + "x" + std::to_string(hr.width()) +
                             " is not a positive multiple of " + std::to_string(top));
    TrainingPair p;
    p.lr = bilinear_downsample(hr, top);
    for (int s = 1; s <= levels; ++s) {
        const int factor = 1 << s;
        p.targets[factor] = s == levels ? hr : bilinear_downsample(hr, 1 << (levels - s));
    }
    return p;
}

}  // namespace zoomsr
