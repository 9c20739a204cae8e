#pragma once

#include <vector>

#include "drsam/raster.hpp"
#include "drsam/skeleton.hpp"

namespace drsam {

/// Euclidean distance from each pixel to the nearest background pixel of the same raster
/// (0 on background). Pixels outside the raster do not count as background; a mask with
/// no background at all yields +infinity everywhere.
using DistanceField = Raster<double>;

struct ThicknessProfile {
    int segmentId = 0;
    std::vector<double> values;  // radius in pixels, one per segment point
};

/// Exact transform: separable lower envelope of parabolas over squared distances.
DistanceField distance_transform(const BinaryMask& mask);

ThicknessProfile thickness_profile(const VesselSegment& segment, const DistanceField& field);

}  // namespace drsam
