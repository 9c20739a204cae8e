#include "drsam/point_selection.hpp"

#include <algorithm>
#include <iterator>

namespace drsam {

nlohmann::json to_json(const PromptPoint& p) {
    return {{"x", p.x}, {"y", p.y}, {"label", p.label == PointLabel::Positive ? 1 : 0}};
}

PromptPoint prompt_point_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("x") || !j.contains("y") || !j["x"].is_number_integer() ||
        !j["y"].is_number_integer()) {
        throw ValidationError("prompt point must be {\"x\":int,\"y\":int,\"label\":1|0}");
    }
    PromptPoint p{j["x"].get<int>(), j["y"].get<int>(), PointLabel::Positive};
    if (j.contains("label")) {
        const auto& label = j["label"];
        if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1)) {
            throw ValidationError("prompt point label must be 1 or 0");
        }
        p.label = label.get<int>() == 1 ? PointLabel::Positive : PointLabel::Negative;
    }
    return p;
}

CandidateSet build_candidates(const ProbabilityMap& pm, const BoundingBox& box, double threshold,
                              const BinaryMask* excluded,
                              std::span<const ExclusionDisk> excludedDisks) {
    validate_box(box, pm.width(), pm.height());
    if (excluded != nullptr && (excluded->width() != pm.width() || excluded->height() != pm.height())) {
        throw ValidationError("exclusion mask dimensions differ from the probability map");
    }

    CandidateSet out;
    out.sourceBox = box;
    for (int y = box.y0; y < box.y1; ++y) {
        for (int x = box.x0; x < box.x1; ++x) {
            const double p = pm.at(x, y);
            if (p < threshold) continue;
            if (excluded != nullptr && excluded->test(x, y)) continue;
            const Pixel px{x, y};
            const bool inside_disk = std::any_of(
                excludedDisks.begin(), excludedDisks.end(), [&](const ExclusionDisk& d) {
                    return static_cast<double>(squared_distance(px, d.center)) <= d.radius * d.radius;
                });
            if (inside_disk) continue;
            out.points.push_back({px, p});
        }
    }
    return out;
}

std::vector<Candidate> sample_candidates(const CandidateSet& cands, int sampleSize, Rng& rng) {
    if (sampleSize <= 0) throw ValidationError("sampleSize must be positive");
    if (cands.size() <= static_cast<std::size_t>(sampleSize)) return cands.points;
    std::vector<Candidate> sample;
    sample.reserve(static_cast<std::size_t>(sampleSize));
    std::sample(cands.points.begin(), cands.points.end(), std::back_inserter(sample),
                sampleSize, rng);
    return sample;
}

std::vector<int> neighbor_counts(std::span<const Candidate> sample, double radius) {
    const double r2 = radius * radius;
    std::vector<int> counts(sample.size(), 0);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        for (std::size_t j = i + 1; j < sample.size(); ++j) {
            if (static_cast<double>(squared_distance(sample[i].pixel, sample[j].pixel)) <= r2) {
                ++counts[i];
                ++counts[j];
            }
        }
    }
    return counts;
}

Pixel select_densest(std::span<const Candidate> sample, double radius) {
    if (sample.empty()) throw NoCandidatesError("no vessel-probable pixel in the region");
    const auto counts = neighbor_counts(sample, radius);
    std::size_t best = 0;
    for (std::size_t i = 1; i < sample.size(); ++i) {
        if (counts[i] != counts[best]) {
            if (counts[i] > counts[best]) best = i;
            continue;
        }
        if (sample[i].probability != sample[best].probability) {
            if (sample[i].probability > sample[best].probability) best = i;
            continue;
        }
        if (row_major_less(sample[i].pixel, sample[best].pixel)) best = i;
    }
    return sample[best].pixel;
}

Pixel pick_point(const CandidateSet& cands, double densityRadius, int sampleSize, Rng& rng) {
    if (cands.empty()) throw NoCandidatesError("no vessel-probable pixel in the region");
    const auto sample = sample_candidates(cands, sampleSize, rng);
    return select_densest(sample, densityRadius);
}

}  // namespace drsam
