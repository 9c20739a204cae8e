#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "drsam/anomaly.hpp"
#include "drsam/raster.hpp"

namespace drsam {

// Synthetic angiograms with known ground truth, for tests, demos and the benchmark harness.

struct PhantomOptions {
    int width = 386;
    int height = 448;
    bool noise = true;
    bool distractors = true;       // small dark blobs that are not vessel
    bool occlusion = true;         // allow a gap that splits one branch
    bool anomalies = true;         // allow a stenosis / aneurysm on a branch
    bool whiteBackground = false;  // flat 255 background instead of a textured one
};

struct AngiogramPhantom {
    GrayscaleImage image;
    BinaryMask vessel;
    std::vector<BoundingBox> boxes;
    std::vector<LabeledAnomaly> anomalies;
};

/// Y-shaped vessel tree: a trunk that bifurcates into two branches.
AngiogramPhantom make_angiogram_phantom(std::uint64_t seed, const PhantomOptions& options = {});

/// Horizontal vessel spanning columns [x0, x1); column x covers rows
/// [cy - halfWidth(x), cy + halfWidth(x)), so both central rows sit at radius halfWidth(x).
BinaryMask make_bar_mask(int width, int height, int x0, int x1, int cy,
                         const std::function<int(int)>& halfWidth);

/// Half width that is `base` far from `center`, `extreme` within `inner` pixels of it, and
/// linearly interpolated between `inner` and `outer`.
int tapered_half_width(int x, int center, int base, int extreme, int inner, int outer);

/// Renders a mask as a dark-on-bright angiogram-like image.
GrayscaleImage render_mask(const BinaryMask& mask, std::uint8_t vessel = 60,
                           std::uint8_t background = 220);

}  // namespace drsam
