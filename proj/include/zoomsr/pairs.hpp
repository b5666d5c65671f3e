#pragma once

#include <map>

#include "zoomsr/image.hpp"

namespace zoomsr {

/// LR input plus per-factor HR targets synthesised from one HR crop.
struct TrainingPair {
    Image lr;
    std::map<int, Image> targets;  // factor (2, 4, 8, ...) -> target at factor x LR size
};

/// LR = bilinear_downsample(hr, 2^levels); target at factor 2^s = downsample(hr, 2^(levels - s)),
/// so the deepest target is hr itself. Throws DimensionError when hr is not divisible by 2^levels.
TrainingPair synthesize_pairs(const Image& hr, int levels = 3);

}  // namespace zoomsr
