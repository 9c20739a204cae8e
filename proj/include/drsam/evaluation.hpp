#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "drsam/anomaly.hpp"
#include "drsam/config.hpp"
#include "drsam/raster.hpp"
#include "drsam/segmentation.hpp"

namespace drsam {

double iou(const BinaryMask& a, const BinaryMask& b);

struct MatchCounts {
    int tp = 0;
    int fp = 0;
    int fn = 0;

    friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

/// Greedy one-to-one matching, closest pairs first. A pair qualifies when the kinds agree
/// and the distance is at most `tolRadius`.
MatchCounts match_anomalies(const std::vector<AnomalyFinding>& predicted,
                            const std::vector<LabeledAnomaly>& labeled, double tolRadius);

/// One dataset entry. Layout on disk:
///   images/<id>.png, masks/<id>.png, boxes.json {id: [box, ...]},
///   anomalies.json {id: [{"x":..,"y":..,"kind":"stenosis"|"aneurysm"}, ...]}
struct DatasetRecord {
    std::string imageId;
    std::filesystem::path imagePath;
    std::filesystem::path maskPath;
    std::vector<BoundingBox> boxes;
    std::vector<LabeledAnomaly> labeledAnomalies;
};

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& root);

/// Writes records in the layout read by `load_dataset`.
void write_dataset(const std::filesystem::path& root, const std::string& imageId,
                   const GrayscaleImage& image, const BinaryMask& mask,
                   const std::vector<BoundingBox>& boxes,
                   const std::vector<LabeledAnomaly>& anomalies);

nlohmann::json to_json(const BoundingBox& box);
BoundingBox box_from_json(const nlohmann::json& j);

struct BenchmarkOptions {
    Strategy strategy = Strategy::DrSam;
    double tolRadius = 20.0;
    int workers = 1;
};

struct EvalReport {
    std::string strategy;
    std::string backend;
    std::map<std::string, double> perImageIoU;  // union of box masks vs full ground truth
    double meanIoU = 0.0;                       // mean of perImageIoU
    std::map<std::string, std::vector<double>> perBoxIoU;  // box mask vs ground truth in the box
    double meanBoxIoU = 0.0;                               // mean over every box of every image
    MatchCounts anomalies;
    std::map<std::string, std::string> failures;
    PipelineConfig config;
};

/// Deterministic given the seed and backend: each record uses its own generator seeded
/// from the config seed and the image id.
EvalReport run_benchmark(const std::vector<DatasetRecord>& dataset, SegmentationBackend& backend,
                         const BenchmarkOptions& options, const PipelineConfig& cfg);

nlohmann::json to_json(const EvalReport& report);

/// Plain-text table, one row per report.
std::string format_table(const std::vector<EvalReport>& reports);

/// Per-record generator seed derived from the run seed and an identifier.
std::uint64_t derive_seed(std::uint64_t seed, const std::string& key);

}  // namespace drsam
