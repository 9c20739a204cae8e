#include "drsam/skeleton.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdlib>
#include <numeric>
#include <optional>

namespace drsam {
namespace {

// Clockwise ring starting north; bit k of a neighborhood code is ring[k].
constexpr std::array<Pixel, 8> kRing = {{
    {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1},
}};

int find_root(std::array<int, 8>& parent, int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
}

int count_components(unsigned members, bool eight, unsigned must_touch) {
    std::array<int, 8> parent{};
    std::iota(parent.begin(), parent.end(), 0);
    for (int a = 0; a < 8; ++a) {
        if (!(members >> a & 1u)) continue;
        for (int b = a + 1; b < 8; ++b) {
            if (!(members >> b & 1u)) continue;
            const int dx = std::abs(kRing[a].x - kRing[b].x);
            const int dy = std::abs(kRing[a].y - kRing[b].y);
            const bool adjacent = eight ? std::max(dx, dy) == 1 : dx + dy == 1;
            if (adjacent) parent[find_root(parent, a)] = find_root(parent, b);
        }
    }
    unsigned seen_roots = 0;
    int count = 0;
    for (int a = 0; a < 8; ++a) {
        if (!(members >> a & 1u)) continue;
        const int r = find_root(parent, a);
        if (seen_roots >> r & 1u) continue;
        // A component only counts if one of its members satisfies `must_touch`.
        bool touches = false;
        for (int b = 0; b < 8; ++b) {
            if ((members >> b & 1u) && find_root(parent, b) == r && (must_touch >> b & 1u)) {
                touches = true;
                break;
            }
        }
        if (!touches) continue;
        seen_roots |= 1u << r;
        ++count;
    }
    return count;
}

std::array<bool, 256> build_simple_table() {
    std::array<bool, 256> table{};
    constexpr unsigned kAll = 0xFFu;
    constexpr unsigned kFourNeighbors = 0b01010101u;  // N, E, S, W
    for (unsigned code = 0; code < 256; ++code) {
        const int fg = count_components(code, true, kAll);
        const int bg = count_components(~code & kAll, false, kFourNeighbors);
        table[code] = fg == 1 && bg == 1;
    }
    return table;
}

const std::array<bool, 256>& simple_table() {
    static const std::array<bool, 256> table = build_simple_table();
    return table;
}

unsigned neighborhood_code(const BinaryMask& mask, int x, int y) {
    unsigned code = 0;
    for (int k = 0; k < 8; ++k) {
        if (mask.test_or_false(x + kRing[k].x, y + kRing[k].y)) code |= 1u << k;
    }
    return code;
}

std::vector<Pixel> skeleton_neighbors(const BinaryMask& mask, const Pixel& p) {
    std::vector<Pixel> out;
    for (const auto& d : kRing) {
        if (mask.test_or_false(p.x + d.x, p.y + d.y)) out.push_back({p.x + d.x, p.y + d.y});
    }
    return out;
}

// Removes the remaining fully-set 2x2 blocks where a block pixel can go without
// changing topology.
bool break_square_blocks(BinaryMask& s) {
    bool changed = false;
    for (int y = 0; y + 1 < s.height(); ++y) {
        for (int x = 0; x + 1 < s.width(); ++x) {
            if (!(s.test(x, y) && s.test(x + 1, y) && s.test(x, y + 1) && s.test(x + 1, y + 1))) {
                continue;
            }
            const std::array<Pixel, 4> block = {{{x, y}, {x + 1, y}, {x, y + 1}, {x + 1, y + 1}}};
            for (const auto& p : block) {
                if (is_simple_point(s, p.x, p.y)) {
                    s.set(p, false);
                    changed = true;
                    break;
                }
            }
        }
    }
    return changed;
}

}  // namespace

bool SkeletonGraph::is_terminal(const VesselSegment& seg) const {
    auto is_end = [&](int node) {
        return node >= 0 && nodes[static_cast<std::size_t>(node)].kind == NodeKind::Endpoint;
    };
    return is_end(seg.startNode) || is_end(seg.endNode);
}

int neighbor_count(const BinaryMask& mask, int x, int y) {
    return std::popcount(neighborhood_code(mask, x, y));
}

bool is_simple_point(const BinaryMask& mask, int x, int y) {
    return simple_table()[neighborhood_code(mask, x, y)];
}

Skeleton skeletonize(const BinaryMask& mask) {
    BinaryMask s = mask;
    std::vector<Pixel> foreground = s.pixels();
    constexpr std::array<Pixel, 4> kDirections = {{{0, -1}, {0, 1}, {1, 0}, {-1, 0}}};

    auto deletable = [&](const Pixel& p) {
        const unsigned code = neighborhood_code(s, p.x, p.y);
        return std::popcount(code) >= 2 && simple_table()[code];
    };

    for (;;) {
        bool changed = false;
        for (const auto& dir : kDirections) {
            std::vector<Pixel> border;
            for (const auto& p : foreground) {
                if (!s.test_or_false(p.x + dir.x, p.y + dir.y) && deletable(p)) border.push_back(p);
            }
            for (const auto& p : border) {
                if (deletable(p)) {
                    s.set(p, false);
                    changed = true;
                }
            }
            if (!border.empty()) {
                std::erase_if(foreground, [&](const Pixel& p) { return !s.test(p); });
            }
        }
        if (!changed) break;
    }
    while (break_square_blocks(s)) {
    }
    return Skeleton(std::move(s));
}

SkeletonGraph decompose(const Skeleton& sk) {
    const BinaryMask& s = sk.mask();
    SkeletonGraph g;
    g.width = s.width();
    g.height = s.height();
    if (s.width() == 0) return g;

    Raster<int> node_of(s.width(), s.height(), -1);
    Raster<int> degree(s.width(), s.height(), 0);
    for (int y = 0; y < s.height(); ++y) {
        for (int x = 0; x < s.width(); ++x) {
            if (s.test(x, y)) degree.at(x, y) = neighbor_count(s, x, y);
        }
    }

    // Nodes in row-major order of their first pixel.
    for (int y = 0; y < s.height(); ++y) {
        for (int x = 0; x < s.width(); ++x) {
            if (!s.test(x, y) || degree.at(x, y) == 2 || node_of.at(x, y) >= 0) continue;
            const int id = static_cast<int>(g.nodes.size());
            SkeletonNode node;
            if (degree.at(x, y) <= 1) {
                node.kind = NodeKind::Endpoint;
                node.pixels = {{x, y}};
                node_of.at(x, y) = id;
            } else {
                node.kind = NodeKind::Branchpoint;
                std::vector<Pixel> stack = {{x, y}};
                node_of.at(x, y) = id;
                while (!stack.empty()) {
                    const Pixel p = stack.back();
                    stack.pop_back();
                    node.pixels.push_back(p);
                    for (const auto& q : skeleton_neighbors(s, p)) {
                        if (degree.at(q) >= 3 && node_of.at(q) < 0) {
                            node_of.at(q) = id;
                            stack.push_back(q);
                        }
                    }
                }
                std::sort(node.pixels.begin(), node.pixels.end(), row_major_less);
            }
            node.coordinate = *std::max_element(
                node.pixels.begin(), node.pixels.end(), [&](const Pixel& a, const Pixel& b) {
                    if (degree.at(a) != degree.at(b)) return degree.at(a) < degree.at(b);
                    return row_major_less(b, a);
                });
            g.nodes.push_back(std::move(node));
        }
    }

    BinaryMask visited(s.width(), s.height());
    auto next_of = [&](const Pixel& cur, const Pixel& prev) -> std::optional<Pixel> {
        for (const auto& q : skeleton_neighbors(s, cur)) {
            if (!(q == prev)) return q;
        }
        return std::nullopt;
    };

    for (std::size_t n = 0; n < g.nodes.size(); ++n) {
        for (const auto& np : g.nodes[n].pixels) {
            for (const auto& q : skeleton_neighbors(s, np)) {
                if (node_of.at(q) >= 0 || visited.test(q)) continue;
                VesselSegment seg;
                seg.id = static_cast<int>(g.segments.size());
                seg.startNode = static_cast<int>(n);
                Pixel prev = np;
                Pixel cur = q;
                for (;;) {
                    seg.points.push_back(cur);
                    visited.set(cur);
                    const auto next = next_of(cur, prev);
                    if (!next) break;
                    if (node_of.at(*next) >= 0) {
                        seg.endNode = node_of.at(*next);
                        break;
                    }
                    if (visited.test(*next)) break;
                    prev = cur;
                    cur = *next;
                }
                g.segments.push_back(std::move(seg));
            }
        }
    }

    // Whatever is left consists of closed loops without nodes.
    for (int y = 0; y < s.height(); ++y) {
        for (int x = 0; x < s.width(); ++x) {
            if (!s.test(x, y) || node_of.at(x, y) >= 0 || visited.test(x, y)) continue;
            VesselSegment seg;
            seg.id = static_cast<int>(g.segments.size());
            const Pixel start{x, y};
            auto ring = skeleton_neighbors(s, start);
            std::sort(ring.begin(), ring.end(), row_major_less);
            Pixel prev = ring.back();
            Pixel cur = start;
            for (;;) {
                seg.points.push_back(cur);
                visited.set(cur);
                const auto next = next_of(cur, prev);
                if (!next || visited.test(*next)) break;
                prev = cur;
                cur = *next;
            }
            g.segments.push_back(std::move(seg));
        }
    }
    return g;
}

Skeleton graph_pixels(const SkeletonGraph& graph) {
    BinaryMask out(graph.width, graph.height);
    for (const auto& n : graph.nodes) {
        for (const auto& p : n.pixels) out.set(p);
    }
    for (const auto& seg : graph.segments) {
        for (const auto& p : seg.points) out.set(p);
    }
    return Skeleton(std::move(out));
}

Skeleton prune(const SkeletonGraph& graph, int minBranchLength) {
    SkeletonGraph g = graph;
    BinaryMask current = graph_pixels(graph).mask();
    const auto min_length = static_cast<std::size_t>(std::max(minBranchLength, 0));

    for (;;) {
        std::vector<const VesselSegment*> removable;
        for (const auto& seg : g.segments) {
            if (g.is_terminal(seg) && seg.length() < min_length) removable.push_back(&seg);
        }
        if (!g.segments.empty() && removable.size() == g.segments.size()) {
            // Never erase the whole centerline: the longest segment survives.
            const auto longest = std::max_element(
                removable.begin(), removable.end(), [](const VesselSegment* a, const VesselSegment* b) {
                    return a->length() != b->length() ? a->length() < b->length() : a->id > b->id;
                });
            removable.erase(longest);
        }

        // Single endpoint pixels sitting directly on a junction form zero-length spurs.
        std::vector<Pixel> stubs;
        for (const auto& node : g.nodes) {
            if (node.kind != NodeKind::Endpoint) continue;
            const Pixel p = node.pixels.front();
            const auto ring = skeleton_neighbors(current, p);
            if (ring.size() == 1 && neighbor_count(current, ring[0].x, ring[0].y) >= 3) {
                stubs.push_back(p);
            }
        }

        if (removable.empty() && stubs.empty()) break;

        for (const auto* seg : removable) {
            for (const auto& p : seg->points) current.set(p, false);
            for (const int node : {seg->startNode, seg->endNode}) {
                if (node >= 0 && g.nodes[static_cast<std::size_t>(node)].kind == NodeKind::Endpoint) {
                    current.set(g.nodes[static_cast<std::size_t>(node)].coordinate, false);
                }
            }
        }
        for (const auto& p : stubs) current.set(p, false);

        Skeleton thinned = skeletonize(current);
        current = thinned.mask();
        g = decompose(thinned);
    }
    return Skeleton(std::move(current));
}

nlohmann::json to_json(const SkeletonGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : graph.nodes) {
        nodes.push_back({{"x", n.coordinate.x},
                         {"y", n.coordinate.y},
                         {"kind", n.kind == NodeKind::Endpoint ? "end" : "branch"}});
    }
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& seg : graph.segments) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : seg.points) pts.push_back({p.x, p.y});
        segments.push_back({{"id", seg.id}, {"points", std::move(pts)}});
    }
    return {{"nodes", std::move(nodes)}, {"segments", std::move(segments)}};
}

}  // namespace drsam
