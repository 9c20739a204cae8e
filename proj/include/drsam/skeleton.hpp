#pragma once

#include <vector>

#include <json.hpp>

#include "drsam/raster.hpp"

namespace drsam {

/// One-pixel-wide centerline raster.
class Skeleton {
public:
    Skeleton() = default;
    explicit Skeleton(BinaryMask pixels) : pixels_(std::move(pixels)) {}

    int width() const noexcept { return pixels_.width(); }
    int height() const noexcept { return pixels_.height(); }
    const BinaryMask& mask() const noexcept { return pixels_; }
    std::vector<Pixel> pixels() const { return pixels_.pixels(); }
    std::size_t size() const noexcept { return pixels_.count(); }

    friend bool operator==(const Skeleton&, const Skeleton&) = default;

private:
    BinaryMask pixels_;
};

enum class NodeKind { Endpoint, Branchpoint };

struct SkeletonNode {
    Pixel coordinate;           // representative pixel
    NodeKind kind = NodeKind::Endpoint;
    std::vector<Pixel> pixels;  // a branchpoint may span several adjacent junction pixels
};

struct VesselSegment {
    int id = 0;
    std::vector<Pixel> points;  // consecutive points are 8-adjacent
    int startNode = -1;         // -1 for a closed loop
    int endNode = -1;

    std::size_t length() const noexcept { return points.size(); }
};

struct SkeletonGraph {
    int width = 0;
    int height = 0;
    std::vector<SkeletonNode> nodes;
    std::vector<VesselSegment> segments;

    bool is_terminal(const VesselSegment& seg) const;
};

/// Number of set 8-neighbors.
int neighbor_count(const BinaryMask& mask, int x, int y);

/// Whether deleting the pixel keeps both foreground (8-connected) and background
/// (4-connected) topology unchanged.
bool is_simple_point(const BinaryMask& mask, int x, int y);

/// Directional boundary peeling with sequential simple-point deletion. Endpoints are kept.
Skeleton skeletonize(const BinaryMask& mask);

/// Endpoints have at most one neighbor, branchpoints three or more; adjacent branch pixels
/// merge into one node. Segments are the node-free paths between nodes, plus closed loops
/// broken at their row-major-first pixel.
SkeletonGraph decompose(const Skeleton& sk);

/// Removes terminal segments shorter than `minBranchLength` until none remain.
Skeleton prune(const SkeletonGraph& graph, int minBranchLength);

/// Rasterizes every node and segment pixel of a graph.
Skeleton graph_pixels(const SkeletonGraph& graph);

nlohmann::json to_json(const SkeletonGraph& graph);

}  // namespace drsam
