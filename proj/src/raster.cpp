#include "drsam/raster.hpp"

#include <algorithm>
#include <queue>

namespace drsam {

std::size_t BinaryMask::count() const noexcept {
    const auto d = data();
    return static_cast<std::size_t>(std::count_if(d.begin(), d.end(), [](auto v) { return v != 0; }));
}

std::vector<Pixel> BinaryMask::pixels() const {
    std::vector<Pixel> out;
    for (int y = 0; y < height(); ++y) {
        for (int x = 0; x < width(); ++x) {
            if (test(x, y)) out.push_back({x, y});
        }
    }
    return out;
}

BinaryMask BinaryMask::complement() const {
    BinaryMask out(width(), height());
    auto src = data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 0 : 1;
    return out;
}

void validate_box(const BoundingBox& box, int width, int height) {
    if (!box.valid_for(width, height)) {
        throw ValidationError("bounding box (" + std::to_string(box.x0) + "," +
                              std::to_string(box.y0) + ")-(" + std::to_string(box.x1) + "," +
                              std::to_string(box.y1) + ") is invalid for a " +
                              std::to_string(width) + "x" + std::to_string(height) + " image");
    }
}

ProbabilityMap to_probability_map(const GrayscaleImage& img) {
    ProbabilityMap out(img.width(), img.height());
    auto src = img.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i] = 1.0 - static_cast<double>(src[i]) / 255.0;
    }
    return out;
}

BinaryMask union_masks(std::span<const BinaryMask> masks) {
    if (masks.empty()) throw ValidationError("union_masks: empty mask list");
    BinaryMask out(masks.front().width(), masks.front().height());
    auto dst = out.data();
    for (const auto& m : masks) {
        if (!m.same_shape(out)) throw ValidationError("union_masks: dimension mismatch");
        auto src = m.data();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = (dst[i] || src[i]) ? 1 : 0;
    }
    return out;
}

BinaryMask clamp_to_box(const BinaryMask& mask, const BoundingBox& box) {
    BinaryMask out(mask.width(), mask.height());
    const int x0 = std::max(box.x0, 0);
    const int y0 = std::max(box.y0, 0);
    const int x1 = std::min(box.x1, mask.width());
    const int y1 = std::min(box.y1, mask.height());
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            if (mask.test(x, y)) out.set(x, y);
        }
    }
    return out;
}

ComponentLabels connected_components(const BinaryMask& mask, Connectivity connectivity) {
    ComponentLabels result{Raster<int>(mask.width(), mask.height(), 0), 0};
    auto& labels = result.labels;
    const bool eight = connectivity == Connectivity::Eight;

    std::queue<Pixel> frontier;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.test(x, y) || labels.at(x, y) != 0) continue;
            const int label = ++result.count;
            labels.at(x, y) = label;
            frontier.push({x, y});
            while (!frontier.empty()) {
                const Pixel p = frontier.front();
                frontier.pop();
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        if (!eight && dx != 0 && dy != 0) continue;
                        const int nx = p.x + dx;
                        const int ny = p.y + dy;
                        if (!mask.test_or_false(nx, ny) || labels.at(nx, ny) != 0) continue;
                        labels.at(nx, ny) = label;
                        frontier.push({nx, ny});
                    }
                }
            }
        }
    }
    return result;
}

}  // namespace drsam
