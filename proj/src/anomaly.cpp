#include "drsam/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace drsam {

const char* to_string(AnomalyKind kind) {
    return kind == AnomalyKind::Stenosis ? "stenosis" : "aneurysm";
}

AnomalyKind anomaly_kind_from_string(const std::string& s) {
    if (s == "stenosis") return AnomalyKind::Stenosis;
    if (s == "aneurysm") return AnomalyKind::Aneurysm;
    throw ValidationError("unknown anomaly kind: " + s);
}

nlohmann::json to_json(const AnomalyFinding& f) {
    return {{"segment", f.segmentId},
            {"x", f.pixel.x},
            {"y", f.pixel.y},
            {"index", f.index},
            {"kind", to_string(f.kind)},
            {"change_p", f.changeP},
            {"reference_radius_px", f.referenceThickness}};
}

std::vector<int> dbscan_1d(const std::vector<int>& positions, double eps, int minSamples) {
    constexpr int kUnvisited = -2;
    constexpr int kNoise = -1;
    const std::size_t n = positions.size();

    // Work in sorted order so a neighborhood is a contiguous window.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });
    std::vector<double> sorted(n);
    for (std::size_t i = 0; i < n; ++i) sorted[i] = positions[order[i]];

    auto neighborhood = [&](std::size_t i) {
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), sorted[i] - eps);
        const auto hi = std::upper_bound(sorted.begin(), sorted.end(), sorted[i] + eps);
        return std::pair<std::size_t, std::size_t>(lo - sorted.begin(), hi - sorted.begin());
    };

    std::vector<int> label(n, kUnvisited);
    int cluster = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (label[i] != kUnvisited) continue;
        auto [lo, hi] = neighborhood(i);
        if (static_cast<int>(hi - lo) < minSamples) {
            label[i] = kNoise;
            continue;
        }
        label[i] = cluster;
        std::vector<std::size_t> seeds;
        for (std::size_t j = lo; j < hi; ++j) seeds.push_back(j);
        while (!seeds.empty()) {
            const std::size_t j = seeds.back();
            seeds.pop_back();
            if (label[j] == kNoise) label[j] = cluster;  // border point
            if (label[j] != kUnvisited) continue;
            label[j] = cluster;
            auto [jlo, jhi] = neighborhood(j);
            if (static_cast<int>(jhi - jlo) >= minSamples) {
                for (std::size_t k = jlo; k < jhi; ++k) {
                    if (label[k] == kUnvisited || label[k] == kNoise) seeds.push_back(k);
                }
            }
        }
        ++cluster;
    }

    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) out[order[i]] = label[i];
    return out;
}

std::vector<ExtremumPoint> raw_extremums(const std::vector<double>& values) {
    struct Run {
        std::size_t begin;
        std::size_t end;  // inclusive
        double value;
    };
    std::vector<Run> runs;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!runs.empty() && runs.back().value == values[i]) {
            runs.back().end = i;
        } else {
            runs.push_back({i, i, values[i]});
        }
    }
    std::vector<ExtremumPoint> out;
    for (std::size_t k = 1; k + 1 < runs.size(); ++k) {
        const double prev = runs[k - 1].value;
        const double cur = runs[k].value;
        const double next = runs[k + 1].value;
        const int middle = static_cast<int>((runs[k].begin + runs[k].end) / 2);
        if (cur < prev && cur < next) out.push_back({middle, cur, ExtremumKind::Min});
        if (cur > prev && cur > next) out.push_back({middle, cur, ExtremumKind::Max});
    }
    return out;
}

std::vector<ExtremumPoint> extract_extremums(const ThicknessProfile& profile,
                                             const PipelineConfig& cfg) {
    const auto& values = profile.values;
    if (values.size() < static_cast<std::size_t>(cfg.minSegmentLength)) {
        throw SegmentTooShortError("segment " + std::to_string(profile.segmentId) + " has " +
                                   std::to_string(values.size()) + " points, need " +
                                   std::to_string(cfg.minSegmentLength));
    }
    const auto raw = raw_extremums(values);
    if (raw.empty()) return {};

    const double eps = std::max(1.0, static_cast<double>(values.size()) / cfg.epsDivisor);
    std::vector<int> indices;
    indices.reserve(raw.size());
    for (const auto& e : raw) indices.push_back(e.index);
    const auto labels = dbscan_1d(indices, eps, 1);

    std::map<int, std::vector<int>> clusters;
    for (std::size_t i = 0; i < raw.size(); ++i) clusters[labels[i]].push_back(indices[i]);

    std::vector<ExtremumPoint> centers;
    for (const auto& [label, members] : clusters) {
        const double mean = std::accumulate(members.begin(), members.end(), 0.0) /
                            static_cast<double>(members.size());
        const int center = static_cast<int>(mean);
        centers.push_back({center, values[static_cast<std::size_t>(center)], ExtremumKind::Min});
    }
    std::sort(centers.begin(), centers.end(),
              [](const ExtremumPoint& a, const ExtremumPoint& b) { return a.index < b.index; });

    std::vector<ExtremumPoint> filtered;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const double prev = i > 0 ? centers[i - 1].value : values.front();
        const double next = i + 1 < centers.size() ? centers[i + 1].value : values.back();
        const double cur = centers[i].value;
        if (cur < prev && cur < next) filtered.push_back({centers[i].index, cur, ExtremumKind::Min});
        if (cur > prev && cur > next) filtered.push_back({centers[i].index, cur, ExtremumKind::Max});
    }
    return filtered;
}

GradingResult flag_and_grade(const VesselSegment& segment, const ThicknessProfile& profile,
                             const DistanceField& field,
                             const std::vector<ExtremumPoint>& extremums,
                             const PipelineConfig& cfg) {
    if (profile.values.size() != segment.points.size()) {
        throw ValidationError("profile length differs from segment length");
    }
    GradingResult out;
    const int len = static_cast<int>(segment.points.size());
    const int step = len / cfg.stepDivisor;
    const auto& v = profile.values;

    for (const auto& e : extremums) {
        if (e.index < 0 || e.index >= len) {
            throw ValidationError("extremum index outside segment");
        }
        const int lo = std::max(0, e.index - step);
        const int hi = std::min(len - 1, e.index + step);
        const double mean = (v[static_cast<std::size_t>(lo)] + v[static_cast<std::size_t>(hi)]) / 2.0;
        if (mean == 0.0 || !std::isfinite(mean)) {
            out.warnings.push_back("segment " + std::to_string(segment.id) + " index " +
                                   std::to_string(e.index) + ": degenerate flank radius");
            continue;
        }
        const double ratio = std::abs(v[static_cast<std::size_t>(e.index)] - mean) / mean;
        if (!(ratio > cfg.minChangeThreshold)) continue;

        const auto at = [&](int i) { return field.at(segment.points[static_cast<std::size_t>(i)]); };
        const double dt_p = at(e.index);
        const double reference = (at(lo) + at(hi)) / 2.0;
        AnomalyFinding f;
        f.segmentId = segment.id;
        f.pixel = segment.points[static_cast<std::size_t>(e.index)];
        f.index = e.index;
        f.changeP = (dt_p - reference) / reference;
        f.kind = f.changeP < 0.0 ? AnomalyKind::Stenosis : AnomalyKind::Aneurysm;
        f.referenceThickness = reference;
        out.findings.push_back(f);
    }
    return out;
}

DetectionResult detect_detailed(const BinaryMask& mask, const PipelineConfig& cfg) {
    cfg.validate();
    DetectionResult out;
    const Skeleton raw = skeletonize(mask);
    out.skeleton = prune(decompose(raw), cfg.minBranchLength);
    out.graph = decompose(out.skeleton);
    out.field = distance_transform(mask);

    for (const auto& seg : out.graph.segments) {
        if (seg.length() < static_cast<std::size_t>(cfg.minSegmentLength)) continue;
        auto profile = thickness_profile(seg, out.field);
        const auto extremums = extract_extremums(profile, cfg);
        auto graded = flag_and_grade(seg, profile, out.field, extremums, cfg);
        out.findings.insert(out.findings.end(), graded.findings.begin(), graded.findings.end());
        out.warnings.insert(out.warnings.end(), graded.warnings.begin(), graded.warnings.end());
        out.profiles.push_back(std::move(profile));
    }
    return out;
}

std::vector<AnomalyFinding> detect(const BinaryMask& mask, const PipelineConfig& cfg) {
    return detect_detailed(mask, cfg).findings;
}

}  // namespace drsam
