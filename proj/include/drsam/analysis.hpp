#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "drsam/anomaly.hpp"
#include "drsam/config.hpp"
#include "drsam/image_io.hpp"
#include "drsam/segmentation.hpp"

namespace drsam {

struct BoxAnalysis {
    BoundingBox box;
    RefinementResult refinement;
    bool noCandidates = false;
};

/// Everything one end-to-end run produces for one image.
struct AnalysisResult {
    std::string imageId;  // content digest
    int width = 0;
    int height = 0;
    PipelineConfig config;
    std::vector<BoxAnalysis> boxes;
    BinaryMask mask;  // union of the box masks
    DetectionResult detection;
};

/// Segments every box with point refinement, unites the masks and runs anomaly detection.
/// Boxes are validated up front; a box without vessel-probable pixels yields an empty mask.
AnalysisResult analyze_image(SegmentationBackend& backend, const GrayscaleImage& image,
                             const std::vector<BoundingBox>& boxes, const PipelineConfig& cfg);

/// Relative path of a box mask inside an analysis output directory.
std::string box_mask_path(std::size_t boxIndex);

/// Canonical analysis document shared by the CLI and the HTTP service.
nlohmann::json analysis_to_json(const AnalysisResult& result);

/// `analysis_to_json(result).dump(2)` plus a trailing newline.
std::string analysis_document(const AnalysisResult& result);

/// Mask tint, prompt points, centerline, radius circles and anomaly markers.
RgbImage render_overlay(const GrayscaleImage& image, const AnalysisResult& result);

/// Writes analysis.json, masks/box_<i>.png, mask.png and overlay.png under `dir`.
void write_analysis_artifacts(const std::filesystem::path& dir, const GrayscaleImage& image,
                              const AnalysisResult& result);

std::vector<BoundingBox> boxes_from_json(const nlohmann::json& j);

}  // namespace drsam
