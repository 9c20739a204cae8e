#include "drsam/segmentation.hpp"

#include <algorithm>
#include <set>

namespace drsam {

BinaryMask SegmentationBackend::segment(const SegmentationRequest& request) {
    if (info().singleFlight) {
        std::lock_guard lock(flight_);
        return segment_impl(request);
    }
    return segment_impl(request);
}

BinaryMask PrecomputedMaskBackend::segment_impl(const SegmentationRequest& request) {
    const auto it = masks_.find(request.imageId);
    if (it != masks_.end()) return it->second;
    if (default_) return *default_;
    throw BackendError(request.requestId, "no precomputed mask for image '" + request.imageId + "'");
}

BinaryMask ThresholdBackend::segment_impl(const SegmentationRequest& request) {
    return fallback_threshold_segment(*request.image, request.box, threshold_,
                                      request.positivePoints);
}

BinaryMask fallback_threshold_segment(const GrayscaleImage& img, const BoundingBox& box,
                                      double threshold, std::span<const PromptPoint> points) {
    validate_box(box, img.width(), img.height());
    BinaryMask candidate(img.width(), img.height());
    for (int y = box.y0; y < box.y1; ++y) {
        for (int x = box.x0; x < box.x1; ++x) {
            if (1.0 - img.at(x, y) / 255.0 >= threshold) candidate.set(x, y);
        }
    }
    const auto cc = connected_components(candidate, Connectivity::Eight);
    if (cc.count == 0) return candidate;

    std::vector<bool> keep(static_cast<std::size_t>(cc.count) + 1, false);
    if (!points.empty()) {
        for (const auto& p : points) {
            if (cc.labels.contains(p.x, p.y)) keep[static_cast<std::size_t>(cc.labels.at(p.x, p.y))] = true;
        }
        keep[0] = false;
    } else {
        std::vector<std::size_t> sizes(static_cast<std::size_t>(cc.count) + 1, 0);
        for (const int l : cc.labels.data()) ++sizes[static_cast<std::size_t>(l)];
        const auto largest = std::max_element(sizes.begin() + 1, sizes.end()) - sizes.begin();
        keep[static_cast<std::size_t>(largest)] = true;
    }

    BinaryMask out(img.width(), img.height());
    auto labels = cc.labels.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        dst[i] = keep[static_cast<std::size_t>(labels[i])] ? 1 : 0;
    }
    return out;
}

namespace {

std::string box_tag(const std::string& imageId, const BoundingBox& box) {
    return imageId + "/" + std::to_string(box.x0) + "," + std::to_string(box.y0) + "," +
           std::to_string(box.x1) + "," + std::to_string(box.y1);
}

BinaryMask call_backend(SegmentationBackend& backend, const GrayscaleImage& img,
                        const std::string& imageId, const BoundingBox& box,
                        const std::vector<PromptPoint>& points, int call) {
    SegmentationRequest request{&img, imageId, box, points,
                                box_tag(imageId, box) + "#" + std::to_string(call)};
    BinaryMask mask;
    try {
        mask = backend.segment(request);
    } catch (const BackendError&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendError(request.requestId, e.what());
    }
    if (mask.width() != img.width() || mask.height() != img.height()) {
        throw BackendError(request.requestId, "backend returned a mask of the wrong size");
    }
    return clamp_to_box(mask, box);
}

PromptPoint positive(const Pixel& p) { return {p.x, p.y, PointLabel::Positive}; }

}  // namespace

RefinementResult run_point_refinement(SegmentationBackend& backend, const GrayscaleImage& img,
                                      const std::string& imageId, const BoundingBox& box,
                                      const PipelineConfig& cfg, Rng& rng) {
    cfg.validate();
    validate_box(box, img.width(), img.height());
    const ProbabilityMap pm = to_probability_map(img);
    RefinementResult result;
    int calls = 0;

    const auto first = build_candidates(pm, box, cfg.probabilityThreshold, nullptr, {});
    if (first.empty()) {
        throw NoCandidatesError("no pixel in box " + box_tag(imageId, box) +
                                " reaches the vessel probability threshold");
    }
    const Pixel p1 = pick_point(first, cfg.selectionRadius, cfg.sampleSize, rng);
    result.points.push_back(positive(p1));

    const ExclusionDisk around_first{p1, cfg.excludeRadius};
    const auto second =
        build_candidates(pm, box, cfg.probabilityThreshold, nullptr, std::span(&around_first, 1));
    if (second.empty()) {
        result.truncated = true;
        result.warnings.push_back("no candidate beyond the exclusion radius of the first point");
    } else {
        result.points.push_back(
            positive(pick_point(second, cfg.secondPointSelectionRadius, cfg.sampleSize, rng)));

        for (int round = 0; round < cfg.refinementIterations; ++round) {
            BinaryMask current = call_backend(backend, img, imageId, box, result.points, calls++);
            result.perIterationMasks.push_back(current);

            std::vector<ExclusionDisk> taken;
            for (const auto& p : result.points) taken.push_back({p.pixel(), 0.0});
            const auto off_mask =
                build_candidates(pm, box, cfg.probabilityThreshold, &current, taken);
            if (off_mask.empty()) {
                result.truncated = true;
                result.warnings.push_back("refinement stopped after " + std::to_string(round) +
                                          " rounds: no candidate off the predicted mask");
                break;
            }
            result.points.push_back(
                positive(pick_point(off_mask, cfg.selectionRadius, cfg.sampleSize, rng)));
        }
    }

    result.mask = call_backend(backend, img, imageId, box, result.points, calls++);
    result.perIterationMasks.push_back(result.mask);
    return result;
}

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::BoxOnly: return "box-only";
        case Strategy::Naive: return "naive";
        case Strategy::DrSam: return "dr-sam";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "box-only") return Strategy::BoxOnly;
    if (s == "naive") return Strategy::Naive;
    if (s == "dr-sam") return Strategy::DrSam;
    throw ValidationError("unknown strategy '" + s + "' (expected box-only, naive or dr-sam)");
}

Pixel darkest_pixel(const GrayscaleImage& img, const BoundingBox& box) {
    validate_box(box, img.width(), img.height());
    Pixel best{box.x0, box.y0};
    for (int y = box.y0; y < box.y1; ++y) {
        for (int x = box.x0; x < box.x1; ++x) {
            if (img.at(x, y) < img.at(best)) best = {x, y};
        }
    }
    return best;
}

RefinementResult segment_box(SegmentationBackend& backend, Strategy strategy,
                             const GrayscaleImage& img, const std::string& imageId,
                             const BoundingBox& box, const PipelineConfig& cfg, Rng& rng) {
    if (strategy == Strategy::DrSam) {
        return run_point_refinement(backend, img, imageId, box, cfg, rng);
    }
    validate_box(box, img.width(), img.height());
    RefinementResult result;
    if (strategy == Strategy::Naive) result.points.push_back(positive(darkest_pixel(img, box)));
    result.mask = call_backend(backend, img, imageId, box, result.points, 0);
    result.perIterationMasks.push_back(result.mask);
    return result;
}

}  // namespace drsam
