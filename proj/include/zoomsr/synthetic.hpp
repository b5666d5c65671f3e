#pragma once

#include <cstdint>

#include "zoomsr/image.hpp"

namespace zoomsr::synthetic {

/// Procedural tissue-like RGB scene: smooth shaded background, vessel-like curves, a few
/// instrument-like bars and fine texture. Deterministic in `seed`.
Image scene(int height, int width, std::uint64_t seed);

/// `frames` views of one larger scene panned by (dx, dy) pixels per frame.
VideoSequence panning_sequence(int height, int width, int frames, double dx, double dy, std::uint64_t seed);

}  // namespace zoomsr::synthetic
