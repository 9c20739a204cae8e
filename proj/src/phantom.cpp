#include "drsam/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "drsam/vessel_metrics.hpp"

namespace drsam {
namespace {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

Vec2 bezier(const Vec2& a, const Vec2& c, const Vec2& b, double t) {
    const double u = 1.0 - t;
    return {u * u * a.x + 2 * t * u * c.x + t * t * b.x, u * u * a.y + 2 * t * u * c.y + t * t * b.y};
}

double curve_length(const Vec2& a, const Vec2& c, const Vec2& b) {
    double len = 0.0;
    Vec2 prev = a;
    for (int i = 1; i <= 200; ++i) {
        const Vec2 p = bezier(a, c, b, i / 200.0);
        len += std::hypot(p.x - prev.x, p.y - prev.y);
        prev = p;
    }
    return len;
}

void stamp_disc(BinaryMask& mask, const Vec2& c, double r) {
    const int x0 = static_cast<int>(std::floor(c.x - r));
    const int x1 = static_cast<int>(std::ceil(c.x + r));
    const int y0 = static_cast<int>(std::floor(c.y - r));
    const int y1 = static_cast<int>(std::ceil(c.y + r));
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            if (!mask.contains(x, y)) continue;
            const double dx = x - c.x;
            const double dy = y - c.y;
            if (dx * dx + dy * dy <= r * r) mask.set(x, y);
        }
    }
}

struct Tube {
    Vec2 a, c, b;
    double radius = 5.0;
    double anomalyT = -1.0;   // center of a radius change, or < 0
    double anomalyScale = 1.0;
    double gapT = -1.0;       // center of an occlusion, or < 0
};

void draw_tube(BinaryMask& mask, const Tube& tube) {
    const double len = curve_length(tube.a, tube.c, tube.b);
    const int samples = static_cast<int>(std::ceil(len * 3.0));
    const double window = 18.0 / len;                     // half width of the anomaly, in t
    const double gap = (tube.radius * 1.6 + 6.0) / len;   // half width of the occlusion, in t
    for (int i = 0; i <= samples; ++i) {
        const double t = static_cast<double>(i) / samples;
        if (tube.gapT >= 0.0 && std::abs(t - tube.gapT) < gap) continue;
        double r = tube.radius;
        if (tube.anomalyT >= 0.0 && std::abs(t - tube.anomalyT) < window) {
            const double w = 0.5 * (1.0 + std::cos(M_PI * (t - tube.anomalyT) / window));
            r *= 1.0 + (tube.anomalyScale - 1.0) * w;
        }
        stamp_disc(mask, bezier(tube.a, tube.c, tube.b, t), r);
    }
}

Pixel rounded(const Vec2& v) {
    return {static_cast<int>(std::lround(v.x)), static_cast<int>(std::lround(v.y))};
}

}  // namespace

BinaryMask make_bar_mask(int width, int height, int x0, int x1, int cy,
                         const std::function<int(int)>& halfWidth) {
    BinaryMask mask(width, height);
    for (int x = std::max(0, x0); x < std::min(width, x1); ++x) {
        const int h = halfWidth(x);
        for (int y = std::max(0, cy - h); y < std::min(height, cy + h); ++y) mask.set(x, y);
    }
    return mask;
}

int tapered_half_width(int x, int center, int base, int extreme, int inner, int outer) {
    const int d = std::abs(x - center);
    if (d <= inner) return extreme;
    if (d >= outer) return base;
    const double f = static_cast<double>(d - inner) / static_cast<double>(outer - inner);
    return static_cast<int>(std::lround(extreme + (base - extreme) * f));
}

GrayscaleImage render_mask(const BinaryMask& mask, std::uint8_t vessel, std::uint8_t background) {
    GrayscaleImage img(mask.width(), mask.height());
    auto src = mask.data();
    auto dst = img.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? vessel : background;
    return img;
}

AngiogramPhantom make_angiogram_phantom(std::uint64_t seed, const PhantomOptions& options) {
    std::mt19937_64 rng(seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    auto chance = [&](double p) { return uniform(0.0, 1.0) < p; };
    const double W = options.width;
    const double H = options.height;

    const Vec2 top{uniform(0.35 * W, 0.65 * W), -6.0};
    const Vec2 fork{uniform(0.4 * W, 0.6 * W), uniform(0.38 * H, 0.5 * H)};
    const Vec2 left_end{uniform(0.08 * W, 0.3 * W), H + 6.0};
    const Vec2 right_end{uniform(0.7 * W, 0.92 * W), H + 6.0};

    Tube trunk{top, {(top.x + fork.x) / 2 + uniform(-30, 30), (top.y + fork.y) / 2}, fork,
               uniform(7.0, 9.0)};
    Tube left{fork, {(fork.x + left_end.x) / 2 + uniform(-40, 10), (fork.y + left_end.y) / 2},
              left_end, uniform(4.5, 6.5)};
    Tube right{fork, {(fork.x + right_end.x) / 2 + uniform(-10, 40), (fork.y + right_end.y) / 2},
               right_end, uniform(4.5, 6.5)};

    AngiogramPhantom out;
    std::vector<Tube*> branches = {&left, &right};
    if (chance(0.5)) std::swap(branches[0], branches[1]);
    if (options.anomalies && chance(0.7)) {
        Tube& t = *branches[0];
        t.anomalyT = uniform(0.4, 0.65);
        const bool stenosis = chance(0.5);
        t.anomalyScale = stenosis ? 0.4 : 1.8;
        out.anomalies.push_back({rounded(bezier(t.a, t.c, t.b, t.anomalyT)),
                                 stenosis ? AnomalyKind::Stenosis : AnomalyKind::Aneurysm});
    }
    if (options.occlusion && chance(0.5)) branches[1]->gapT = uniform(0.35, 0.6);

    out.vessel = BinaryMask(options.width, options.height);
    for (const Tube* t : {&trunk, &left, &right}) draw_tube(out.vessel, *t);

    std::normal_distribution<double> background_noise(0.0, options.noise ? 6.0 : 0.0);
    std::normal_distribution<double> vessel_noise(0.0, options.noise ? 4.0 : 0.0);
    out.image = GrayscaleImage(options.width, options.height);
    for (int y = 0; y < options.height; ++y) {
        for (int x = 0; x < options.width; ++x) {
            double v;
            if (out.vessel.test(x, y)) {
                v = std::clamp(55.0 + 25.0 * y / H + vessel_noise(rng), 20.0, 95.0);
            } else if (options.whiteBackground) {
                v = 255.0;
            } else {
                v = std::clamp(185.0 + 40.0 * x / W - 15.0 * y / H + background_noise(rng), 130.0, 255.0);
            }
            out.image.at(x, y) = static_cast<std::uint8_t>(std::lround(v));
        }
    }

    int bx0 = options.width, by0 = options.height, bx1 = 0, by1 = 0;
    for (const auto& p : out.vessel.pixels()) {
        bx0 = std::min(bx0, p.x);
        by0 = std::min(by0, p.y);
        bx1 = std::max(bx1, p.x + 1);
        by1 = std::max(by1, p.y + 1);
    }

    if (options.distractors) {
        // Distance to the nearest vessel pixel keeps blobs clear of the tree.
        const DistanceField clearance = distance_transform(out.vessel.complement());
        int placed = 0;
        for (int attempt = 0; attempt < 500 && placed < 3; ++attempt) {
            const Vec2 c{uniform(bx0 + 6.0, bx1 - 6.0), uniform(by0 + 6.0, by1 - 6.0)};
            const Pixel pc = rounded(c);
            if (!clearance.contains(pc) || clearance.at(pc) < 16.0) continue;
            BinaryMask blob(options.width, options.height);
            stamp_disc(blob, c, uniform(2.0, 3.2));
            const double shade = uniform(85.0, 95.0);
            for (const auto& p : blob.pixels()) {
                out.image.at(p) = static_cast<std::uint8_t>(std::lround(shade));
            }
            ++placed;
        }
    }

    const int pad = 8;
    out.boxes.push_back({std::max(0, bx0 - pad), std::max(0, by0 - pad),
                         std::min(options.width, bx1 + pad), std::min(options.height, by1 + pad)});
    return out;
}

}  // namespace drsam
