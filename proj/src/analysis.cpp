#include "drsam/analysis.hpp"

#include <cmath>

#include "drsam/evaluation.hpp"

namespace drsam {

std::vector<BoundingBox> boxes_from_json(const nlohmann::json& j) {
    const nlohmann::json& list = j.is_object() && j.contains("boxes") ? j["boxes"] : j;
    if (!list.is_array()) throw ValidationError("boxes must be a JSON array of {x0,y0,x1,y1}");
    std::vector<BoundingBox> boxes;
    for (const auto& b : list) boxes.push_back(box_from_json(b));
    if (boxes.empty()) throw ValidationError("at least one bounding box is required");
    return boxes;
}

AnalysisResult analyze_image(SegmentationBackend& backend, const GrayscaleImage& image,
                             const std::vector<BoundingBox>& boxes, const PipelineConfig& cfg) {
    cfg.validate();
    for (const auto& box : boxes) validate_box(box, image.width(), image.height());

    AnalysisResult result;
    result.imageId = image_digest(image);
    result.width = image.width();
    result.height = image.height();
    result.config = cfg;

    Rng rng(cfg.rngSeed);
    std::vector<BinaryMask> masks;
    for (const auto& box : boxes) {
        BoxAnalysis entry;
        entry.box = box;
        try {
            entry.refinement = run_point_refinement(backend, image, result.imageId, box, cfg, rng);
        } catch (const NoCandidatesError& e) {
            entry.noCandidates = true;
            entry.refinement.mask = BinaryMask(image.width(), image.height());
            entry.refinement.warnings.push_back(e.what());
        }
        masks.push_back(entry.refinement.mask);
        result.boxes.push_back(std::move(entry));
    }
    result.mask = union_masks(masks);
    result.detection = detect_detailed(result.mask, cfg);
    return result;
}

std::string box_mask_path(std::size_t boxIndex) {
    return "masks/box_" + std::to_string(boxIndex) + ".png";
}

nlohmann::json analysis_to_json(const AnalysisResult& result) {
    nlohmann::json per_box = nlohmann::json::array();
    for (std::size_t i = 0; i < result.boxes.size(); ++i) {
        const auto& b = result.boxes[i];
        nlohmann::json points = nlohmann::json::array();
        for (const auto& p : b.refinement.points) points.push_back(to_json(p));
        per_box.push_back({{"box", to_json(b.box)},
                           {"status", b.noCandidates ? "no_candidates" : "ok"},
                           {"points", std::move(points)},
                           {"truncated", b.refinement.truncated},
                           {"mask_path", box_mask_path(i)},
                           {"mask_pixels", b.refinement.mask.count()},
                           {"warnings", b.refinement.warnings}});
    }
    nlohmann::json profiles = nlohmann::json::array();
    for (const auto& p : result.detection.profiles) {
        profiles.push_back({{"segment", p.segmentId}, {"radius_px", p.values}});
    }
    nlohmann::json findings = nlohmann::json::array();
    for (const auto& f : result.detection.findings) findings.push_back(to_json(f));

    return {{"image", {{"id", result.imageId}, {"width", result.width}, {"height", result.height}}},
            {"config", to_json(result.config)},
            {"per_box", std::move(per_box)},
            {"skeleton", to_json(result.detection.graph)},
            {"thickness_profiles", std::move(profiles)},
            {"findings", std::move(findings)},
            {"warnings", result.detection.warnings}};
}

std::string analysis_document(const AnalysisResult& result) {
    return analysis_to_json(result).dump(2) + "\n";
}

namespace {

struct Rgb {
    std::uint8_t r, g, b;
};

class Canvas {
public:
    explicit Canvas(const GrayscaleImage& base) {
        img_.width = base.width();
        img_.height = base.height();
        img_.rgb.resize(static_cast<std::size_t>(img_.width) * img_.height * 3);
        auto src = base.data();
        for (std::size_t i = 0; i < src.size(); ++i) {
            img_.rgb[3 * i] = img_.rgb[3 * i + 1] = img_.rgb[3 * i + 2] = src[i];
        }
    }

    void put(int x, int y, Rgb c, double alpha = 1.0) {
        if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
        const std::size_t i = (static_cast<std::size_t>(y) * img_.width + x) * 3;
        const std::uint8_t rgb[3] = {c.r, c.g, c.b};
        for (int k = 0; k < 3; ++k) {
            img_.rgb[i + k] = static_cast<std::uint8_t>(
                std::lround((1.0 - alpha) * img_.rgb[i + k] + alpha * rgb[k]));
        }
    }

    void circle(double cx, double cy, double r, Rgb c) {
        const int steps = std::max(16, static_cast<int>(r * 8));
        for (int i = 0; i < steps; ++i) {
            const double a = 2.0 * M_PI * i / steps;
            put(static_cast<int>(std::lround(cx + r * std::cos(a))),
                static_cast<int>(std::lround(cy + r * std::sin(a))), c);
        }
    }

    void cross(int x, int y, int arm, Rgb c) {
        for (int d = -arm; d <= arm; ++d) {
            put(x + d, y, c);
            put(x, y + d, c);
        }
    }

    RgbImage take() { return std::move(img_); }

private:
    RgbImage img_;
};

}  // namespace

RgbImage render_overlay(const GrayscaleImage& image, const AnalysisResult& result) {
    Canvas canvas(image);
    for (const auto& p : result.mask.pixels()) canvas.put(p.x, p.y, {220, 40, 40}, 0.35);
    for (const auto& p : result.detection.skeleton.pixels()) canvas.put(p.x, p.y, {255, 220, 0});
    for (const auto& b : result.boxes) {
        for (int x = b.box.x0; x < b.box.x1; ++x) {
            canvas.put(x, b.box.y0, {0, 160, 255});
            canvas.put(x, b.box.y1 - 1, {0, 160, 255});
        }
        for (int y = b.box.y0; y < b.box.y1; ++y) {
            canvas.put(b.box.x0, y, {0, 160, 255});
            canvas.put(b.box.x1 - 1, y, {0, 160, 255});
        }
        for (const auto& p : b.refinement.points) canvas.cross(p.x, p.y, 3, {0, 230, 80});
    }
    for (const auto& f : result.detection.findings) {
        const Rgb color = f.kind == AnomalyKind::Stenosis ? Rgb{255, 0, 255} : Rgb{0, 255, 255};
        canvas.circle(f.pixel.x, f.pixel.y, std::max(2.0, f.referenceThickness), color);
        canvas.cross(f.pixel.x, f.pixel.y, 2, color);
    }
    return canvas.take();
}

void write_analysis_artifacts(const std::filesystem::path& dir, const GrayscaleImage& image,
                              const AnalysisResult& result) {
    std::filesystem::create_directories(dir / "masks");
    const std::string doc = analysis_document(result);
    write_file_bytes(dir / "analysis.json",
                     std::span(reinterpret_cast<const std::uint8_t*>(doc.data()), doc.size()));
    for (std::size_t i = 0; i < result.boxes.size(); ++i) {
        write_mask(dir / box_mask_path(i), result.boxes[i].refinement.mask);
    }
    write_mask(dir / "mask.png", result.mask);
    write_rgb(dir / "overlay.png", render_overlay(image, result));
}

}  // namespace drsam
