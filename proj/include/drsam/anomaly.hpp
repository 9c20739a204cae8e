#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "drsam/config.hpp"
#include "drsam/raster.hpp"
#include "drsam/skeleton.hpp"
#include "drsam/vessel_metrics.hpp"

namespace drsam {

enum class ExtremumKind { Min, Max };

struct ExtremumPoint {
    int index = 0;
    double value = 0.0;
    ExtremumKind kind = ExtremumKind::Min;
};

enum class AnomalyKind { Stenosis, Aneurysm };

struct AnomalyFinding {
    int segmentId = 0;
    Pixel pixel;
    int index = 0;
    AnomalyKind kind = AnomalyKind::Stenosis;
    double changeP = 0.0;             // signed: negative for narrowing
    double referenceThickness = 0.0;  // mean of the two flanking radii
};

/// Expert annotation of an anomaly location.
struct LabeledAnomaly {
    Pixel pixel;
    AnomalyKind kind = AnomalyKind::Stenosis;
};

const char* to_string(AnomalyKind kind);
AnomalyKind anomaly_kind_from_string(const std::string& s);
nlohmann::json to_json(const AnomalyFinding& f);

/// Plain density clustering over scalar positions. Labels are cluster ids numbered in
/// ascending order of each cluster's smallest position; -1 marks noise.
std::vector<int> dbscan_1d(const std::vector<int>& positions, double eps, int minSamples);

/// Strict local extremums of the sequence. A run of equal values counts once, at the
/// run's middle index, when both nearest unequal neighbors lie on the same side of it.
std::vector<ExtremumPoint> raw_extremums(const std::vector<double>& values);

/// Raw extremums, clustered by index and collapsed to the mean index of each cluster,
/// keeping only centers that are strictly above or below both neighboring centers.
/// The first and last centers are compared against the profile's end values.
std::vector<ExtremumPoint> extract_extremums(const ThicknessProfile& profile,
                                             const PipelineConfig& cfg);

struct GradingResult {
    std::vector<AnomalyFinding> findings;
    std::vector<std::string> warnings;
};

GradingResult flag_and_grade(const VesselSegment& segment, const ThicknessProfile& profile,
                             const DistanceField& field,
                             const std::vector<ExtremumPoint>& extremums,
                             const PipelineConfig& cfg);

/// Intermediate products of a full detection run, kept for reporting.
struct DetectionResult {
    Skeleton skeleton;  // pruned centerline
    SkeletonGraph graph;
    DistanceField field;
    std::vector<ThicknessProfile> profiles;  // only segments that were analyzed
    std::vector<AnomalyFinding> findings;
    std::vector<std::string> warnings;
};

DetectionResult detect_detailed(const BinaryMask& mask, const PipelineConfig& cfg);

/// skeletonize -> decompose -> prune -> profile -> extremums -> grade, ordered by segment id.
std::vector<AnomalyFinding> detect(const BinaryMask& mask, const PipelineConfig& cfg);

}  // namespace drsam
