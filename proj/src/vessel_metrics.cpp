#include "drsam/vessel_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace drsam {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of a sampled function (Felzenszwalb & Huttenlocher).
// `f` holds squared distances or +inf; the result is written to `d`.
void lower_envelope(const std::vector<double>& f, std::vector<double>& d,
                    std::vector<int>& site, std::vector<double>& boundary) {
    const int n = static_cast<int>(f.size());
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] == kInf) continue;
        if (k < 0) {
            k = 0;
            site[0] = q;
            boundary[0] = -kInf;
            boundary[1] = kInf;
            continue;
        }
        auto intersect = [&](int v) {
            return ((f[q] + double(q) * q) - (f[v] + double(v) * v)) / (2.0 * (q - v));
        };
        double s = intersect(site[k]);
        while (s <= boundary[k]) s = intersect(site[--k]);
        ++k;
        site[k] = q;
        boundary[k] = s;
        boundary[k + 1] = kInf;
    }
    if (k < 0) {
        std::fill(d.begin(), d.end(), kInf);
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (boundary[j + 1] < q) ++j;
        const double dq = q - site[j];
        d[q] = dq * dq + f[site[j]];
    }
}

}  // namespace

DistanceField distance_transform(const BinaryMask& mask) {
    const int w = mask.width();
    const int h = mask.height();
    DistanceField field(w, h, 0.0);

    const int n = std::max(w, h);
    std::vector<double> f(n), d(n), boundary(n + 1);
    std::vector<int> site(n);

    // Columns: squared distance to the nearest background pixel in the same column.
    for (int x = 0; x < w; ++x) {
        f.resize(h);
        d.resize(h);
        for (int y = 0; y < h; ++y) f[y] = mask.test(x, y) ? kInf : 0.0;
        lower_envelope(f, d, site, boundary);
        for (int y = 0; y < h; ++y) field.at(x, y) = d[y];
    }
    // Rows.
    f.resize(w);
    d.resize(w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = field.at(x, y);
        lower_envelope(f, d, site, boundary);
        for (int x = 0; x < w; ++x) field.at(x, y) = std::sqrt(d[x]);
    }
    return field;
}

ThicknessProfile thickness_profile(const VesselSegment& segment, const DistanceField& field) {
    ThicknessProfile out;
    out.segmentId = segment.id;
    out.values.reserve(segment.points.size());
    for (const auto& p : segment.points) {
        if (!field.contains(p)) {
            throw SegmentOutsideFieldError("segment " + std::to_string(segment.id) +
                                           " has a point outside the distance field");
        }
        out.values.push_back(field.at(p));
    }
    return out;
}

}  // namespace drsam
