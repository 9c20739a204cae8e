#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "drsam/error.hpp"

namespace drsam {

/// Pixel coordinate, x to the right and y down, origin top-left.
struct Pixel {
    int x = 0;
    int y = 0;

    friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Row-major ordering (y first, then x). Used for every deterministic tie-break.
inline bool row_major_less(const Pixel& a, const Pixel& b) {
    return a.y != b.y ? a.y < b.y : a.x < b.x;
}

inline long long squared_distance(const Pixel& a, const Pixel& b) {
    const long long dx = a.x - b.x;
    const long long dy = a.y - b.y;
    return dx * dx + dy * dy;
}

/// Dense row-major raster with validated dimensions.
template <typename T>
class Raster {
public:
    Raster() = default;

    Raster(int width, int height, T fill = T{}) : width_(width), height_(height) {
        if (width < 1 || height < 1) {
            throw ValidationError("raster dimensions must be positive");
        }
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    Raster(int width, int height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (width < 1 || height < 1) {
            throw ValidationError("raster dimensions must be positive");
        }
        if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
            throw ValidationError("raster data length does not match width x height");
        }
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }

    bool contains(int x, int y) const noexcept {
        return x >= 0 && y >= 0 && x < width_ && y < height_;
    }
    bool contains(const Pixel& p) const noexcept { return contains(p.x, p.y); }

    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    const T& at(int x, int y) const noexcept { return data_[index(x, y)]; }
    T& at(int x, int y) noexcept { return data_[index(x, y)]; }
    const T& at(const Pixel& p) const noexcept { return at(p.x, p.y); }
    T& at(const Pixel& p) noexcept { return at(p.x, p.y); }

    std::span<const T> data() const noexcept { return data_; }
    std::span<T> data() noexcept { return data_; }

    bool same_shape(const Raster& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

/// 8-bit intensity image.
using GrayscaleImage = Raster<std::uint8_t>;

/// Per-pixel vessel probability in [0, 1].
using ProbabilityMap = Raster<double>;

/// Boolean raster stored as bytes (0 = background, 1 = foreground).
class BinaryMask : public Raster<std::uint8_t> {
public:
    using Raster::Raster;

    bool test(int x, int y) const noexcept { return at(x, y) != 0; }
    bool test(const Pixel& p) const noexcept { return at(p) != 0; }
    void set(int x, int y, bool v = true) noexcept { at(x, y) = v ? 1 : 0; }
    void set(const Pixel& p, bool v = true) noexcept { at(p) = v ? 1 : 0; }

    /// Out-of-bounds reads return false.
    bool test_or_false(int x, int y) const noexcept { return contains(x, y) && test(x, y); }

    std::size_t count() const noexcept;
    bool empty() const noexcept { return count() == 0; }
    std::vector<Pixel> pixels() const;
    BinaryMask complement() const;
};

/// Axis-aligned box, [x0, x1) x [y0, y1).
struct BoundingBox {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;

    bool contains(const Pixel& p) const noexcept {
        return p.x >= x0 && p.x < x1 && p.y >= y0 && p.y < y1;
    }
    int width() const noexcept { return x1 - x0; }
    int height() const noexcept { return y1 - y0; }

    bool valid_for(int width, int height) const noexcept {
        return 0 <= x0 && x0 < x1 && x1 <= width && 0 <= y0 && y0 < y1 && y1 <= height;
    }

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

/// Throws ValidationError when the box does not fit a width x height raster.
void validate_box(const BoundingBox& box, int width, int height);

/// p -> 1 - p/255.
ProbabilityMap to_probability_map(const GrayscaleImage& img);

BinaryMask union_masks(std::span<const BinaryMask> masks);

/// Zeroes every foreground pixel outside the box.
BinaryMask clamp_to_box(const BinaryMask& mask, const BoundingBox& box);

enum class Connectivity { Four = 4, Eight = 8 };

struct ComponentLabels {
    Raster<int> labels;  // 0 = background, components numbered 1..count
    int count = 0;
};

/// Labels are assigned in row-major order of each component's first pixel.
ComponentLabels connected_components(const BinaryMask& mask, Connectivity connectivity);

}  // namespace drsam
