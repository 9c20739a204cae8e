#pragma once

#include <optional>
#include <random>
#include <span>
#include <vector>

#include <json.hpp>

#include "drsam/raster.hpp"

namespace drsam {

/// Generator type threaded through every randomized step.
using Rng = std::mt19937_64;

struct Candidate {
    Pixel pixel;
    double probability = 0.0;
};

/// Vessel-probable pixels of one box, in row-major order.
struct CandidateSet {
    std::vector<Candidate> points;
    BoundingBox sourceBox;

    bool empty() const noexcept { return points.empty(); }
    std::size_t size() const noexcept { return points.size(); }
};

struct ExclusionDisk {
    Pixel center;
    double radius = 0.0;  // pixels at distance <= radius are excluded
};

enum class PointLabel { Negative = 0, Positive = 1 };

struct PromptPoint {
    int x = 0;
    int y = 0;
    PointLabel label = PointLabel::Positive;

    Pixel pixel() const noexcept { return {x, y}; }
    friend bool operator==(const PromptPoint&, const PromptPoint&) = default;
};

nlohmann::json to_json(const PromptPoint& p);
PromptPoint prompt_point_from_json(const nlohmann::json& j);

CandidateSet build_candidates(const ProbabilityMap& pm, const BoundingBox& box, double threshold,
                              const BinaryMask* excluded,
                              std::span<const ExclusionDisk> excludedDisks);

/// Draws min(sampleSize, |cands|) candidates without replacement.
std::vector<Candidate> sample_candidates(const CandidateSet& cands, int sampleSize, Rng& rng);

/// Number of other sample members within `radius` of each member.
std::vector<int> neighbor_counts(std::span<const Candidate> sample, double radius);

/// Densest member of the sample. Ties go to the higher probability, then row-major order.
Pixel select_densest(std::span<const Candidate> sample, double radius);

/// Sample then select. Throws NoCandidatesError on an empty set.
Pixel pick_point(const CandidateSet& cands, double densityRadius, int sampleSize, Rng& rng);

}  // namespace drsam
