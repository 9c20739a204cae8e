#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "drsam/config.hpp"
#include "drsam/point_selection.hpp"
#include "drsam/raster.hpp"

namespace drsam {

struct SegmentationRequest {
    const GrayscaleImage* image = nullptr;
    std::string imageId;
    BoundingBox box;
    std::vector<PromptPoint> positivePoints;
    std::string requestId;
};

struct BackendInfo {
    std::string name;
    bool usesPoints = true;
    bool singleFlight = false;  // requests must not overlap
};

/// A promptable segmenter: box plus positive points in, one mask at image resolution out.
class SegmentationBackend {
public:
    virtual ~SegmentationBackend() = default;

    virtual BackendInfo info() const = 0;

    /// Forwards to `segment_impl`, serializing calls when the backend is single-flight.
    BinaryMask segment(const SegmentationRequest& request);

protected:
    virtual BinaryMask segment_impl(const SegmentationRequest& request) = 0;

private:
    std::mutex flight_;
};

/// Returns stored masks keyed by image id; ignores prompts.
class PrecomputedMaskBackend final : public SegmentationBackend {
public:
    PrecomputedMaskBackend() = default;
    explicit PrecomputedMaskBackend(std::map<std::string, BinaryMask> masks)
        : masks_(std::move(masks)) {}

    void add(std::string imageId, BinaryMask mask) { masks_[std::move(imageId)] = std::move(mask); }
    /// Mask served for ids that have no entry of their own.
    void set_default(BinaryMask mask) { default_ = std::move(mask); }

    BackendInfo info() const override { return {"precomputed", false, false}; }

protected:
    BinaryMask segment_impl(const SegmentationRequest& request) override;

private:
    std::map<std::string, BinaryMask> masks_;
    std::optional<BinaryMask> default_;
};

/// Thresholded probability map restricted to the prompted connected components.
class ThresholdBackend final : public SegmentationBackend {
public:
    explicit ThresholdBackend(double threshold = 0.6) : threshold_(threshold) {}
    BackendInfo info() const override { return {"threshold", true, false}; }

protected:
    BinaryMask segment_impl(const SegmentationRequest& request) override;

private:
    double threshold_;
};

/// In-box pixels with probability >= threshold, keeping the 8-connected components that
/// contain a prompt point, or only the largest component when no points are given.
BinaryMask fallback_threshold_segment(const GrayscaleImage& img, const BoundingBox& box,
                                      double threshold,
                                      std::span<const PromptPoint> points = {});

struct RefinementResult {
    BinaryMask mask;
    std::vector<PromptPoint> points;
    std::vector<BinaryMask> perIterationMasks;  // one per backend call, final mask last
    bool truncated = false;                     // stopped before collecting every point
    std::vector<std::string> warnings;
};

/// Two seed points, then `refinementIterations` rounds of segment / pick a point off the
/// current mask, then a final segmentation with every collected point.
RefinementResult run_point_refinement(SegmentationBackend& backend, const GrayscaleImage& img,
                                      const std::string& imageId, const BoundingBox& box,
                                      const PipelineConfig& cfg, Rng& rng);

enum class Strategy { BoxOnly, Naive, DrSam };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

/// In-box pixel with the lowest intensity, first in row-major order on ties.
Pixel darkest_pixel(const GrayscaleImage& img, const BoundingBox& box);

/// Runs one strategy for one box; the result is clamped to the box.
RefinementResult segment_box(SegmentationBackend& backend, Strategy strategy,
                             const GrayscaleImage& img, const std::string& imageId,
                             const BoundingBox& box, const PipelineConfig& cfg, Rng& rng);

}  // namespace drsam
