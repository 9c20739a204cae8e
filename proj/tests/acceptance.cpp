// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <httplib.h>

#include "drsam/analysis.hpp"
#include "drsam/cli.hpp"
#include "drsam/evaluation.hpp"
#include "drsam/image_io.hpp"
#include "drsam/phantom.hpp"
#include "drsam/service.hpp"
#include "drsam/vessel_metrics.hpp"
#include "oracles.hpp"

using namespace drsam;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

void run(const std::string& name, const std::function<std::pair<bool, std::string>()>& check) {
    try {
        const auto [ok, detail] = check();
        report(name, ok, detail);
    } catch (const std::exception& e) {
        report(name, false, std::string("exception: ") + e.what());
    }
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("drsam_accept_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

BinaryMask bar(int halfWidthAtCenter, int inner, int outer) {
    return make_bar_mask(480, 120, 40, 440, 60, [=](int x) {
        return tapered_half_width(x, 240, 10, halfWidthAtCenter, inner, outer);
    });
}

// Serves the phantom's ground-truth vessel for every request.
class GroundTruthBackend final : public SegmentationBackend {
public:
    explicit GroundTruthBackend(BinaryMask truth) : truth_(std::move(truth)) {}
    BackendInfo info() const override { return {"ground-truth", false, false}; }

protected:
    BinaryMask segment_impl(const SegmentationRequest&) override { return truth_; }

private:
    BinaryMask truth_;
};

}  // namespace

int main() {
    run("distance-transform", [] {
        std::mt19937_64 rng(20240601);
        double worst = 0.0, elapsed = 0.0;
        for (int i = 0; i < 50; ++i) {
            const auto mask = oracle::random_mask(rng, 64, 64, 0.2 + 0.7 * (i / 49.0));
            const auto t0 = Clock::now();
            const auto field = distance_transform(mask);
            elapsed += seconds_since(t0);
            const auto expected = oracle::brute_distance_transform(mask);
            for (std::size_t k = 0; k < expected.size(); ++k) {
                const double a = field.data()[k], b = expected[k];
                worst = std::max(worst, std::isinf(b) ? (std::isinf(a) ? 0.0 : 1e300) : std::abs(a - b));
            }
        }
        return std::pair{worst <= 1e-9 && elapsed < 1.0,
                         fmt("50 masks 64x64, max |err| %.3g, %.4f s", worst, elapsed)};
    });

    run("skeleton-topology", [] {
        std::mt19937_64 rng(777);
        int bad = 0;
        for (int i = 0; i < 30; ++i) {
            const auto m = oracle::random_blobs(rng, 96, 96);
            const auto sk = skeletonize(m).mask();
            if (oracle::has_full_2x2_block(sk) || !oracle::is_subset(sk, m) ||
                oracle::component_count(sk) != oracle::component_count(m)) {
                ++bad;
            }
        }
        return std::pair{bad == 0, fmt("30 blob masks, %d violations (2x2 block, subset, 8-components)", bad)};
    });

    run("prune", [] {
        std::mt19937_64 rng(4242);
        int short_left = 0, not_idempotent = 0;
        for (int i = 0; i < 20; ++i) {
            const auto sk = skeletonize(oracle::random_vessel_tree(rng, 160, 160));
            const auto once = prune(decompose(sk), 40);
            const auto g = decompose(once);
            if (g.segments.size() > 1) {
                for (const auto& s : g.segments) short_left += g.is_terminal(s) && s.length() < 40;
            }
            not_idempotent += prune(g, 40) != once;
        }
        return std::pair{short_left == 0 && not_idempotent == 0,
                         fmt("20 skeletons, %d short terminal segments, %d non-idempotent", short_left,
                             not_idempotent)};
    });

    run("clustering-oracle", [] {
        std::mt19937_64 rng(99);
        int mismatches = 0;
        for (int i = 0; i < 100; ++i) {
            const int len = std::uniform_int_distribution<int>(10, 500)(rng);
            std::vector<int> idx(std::uniform_int_distribution<std::size_t>(1, 40)(rng));
            for (auto& v : idx) v = std::uniform_int_distribution<int>(0, len - 1)(rng);
            const double eps = std::max(1.0, len / 10.0);
            mismatches += oracle::canonical(dbscan_1d(idx, eps, 1)) != oracle::single_linkage(idx, eps);
        }
        return std::pair{mismatches == 0, fmt("100 index sets, %d partitions differ from union-find", mismatches)};
    });

    run("phantom-constant-bar", [] {
        const auto f = detect(bar(10, 20, 40), PipelineConfig{});
        return std::pair{f.empty(), fmt("%zu findings", f.size())};
    });

    run("phantom-stenosis", [] {
        const auto f = detect(bar(4, 20, 40), PipelineConfig{});
        const bool ok = f.size() == 1 && f[0].kind == AnomalyKind::Stenosis && std::abs(f[0].changeP + 0.6) <= 0.1;
        return std::pair{ok, f.size() == 1 ? fmt("1 %s, changeP %+.3f", to_string(f[0].kind), f[0].changeP)
                                           : fmt("%zu findings", f.size())};
    });

    run("phantom-aneurysm", [] {
        const auto f = detect(bar(18, 24, 40), PipelineConfig{});
        const bool ok = f.size() == 1 && f[0].kind == AnomalyKind::Aneurysm && std::abs(f[0].changeP - 0.8) <= 0.15;
        return std::pair{ok, f.size() == 1 ? fmt("1 %s, changeP %+.3f", to_string(f[0].kind), f[0].changeP)
                                           : fmt("%zu findings", f.size())};
    });

    run("refinement-ground-truth", [] {
        const auto ph = make_angiogram_phantom(11);
        const BoundingBox box = ph.boxes.at(0);
        GroundTruthBackend backend(ph.vessel);
        const PipelineConfig cfg;
        Rng rng(cfg.rngSeed);
        const auto r = run_point_refinement(backend, ph.image, "gt", box, cfg, rng);
        Rng again(cfg.rngSeed);
        const auto r2 = run_point_refinement(backend, ph.image, "gt", box, cfg, again);

        const auto pm = to_probability_map(ph.image);
        const double overlap = iou(r.mask, clamp_to_box(ph.vessel, box));
        bool in_box = true, off_mask = true;
        for (const auto& p : r.points) in_box &= box.contains(p.pixel()) && pm.at(p.pixel()) >= cfg.probabilityThreshold;
        for (std::size_t k = 2; k < r.points.size() && k < 5; ++k) {
            off_mask &= !r.perIterationMasks[k - 2].test(r.points[k].pixel());
        }
        const double d12 = r.points.size() >= 2
                               ? std::sqrt(double(squared_distance(r.points[0].pixel(), r.points[1].pixel())))
                               : 0.0;
        const bool reproducible = r.points == r2.points && r.mask == r2.mask;
        const bool ok = overlap == 1.0 && r.points.size() == 5 && in_box && d12 > cfg.excludeRadius && off_mask &&
                        reproducible;
        return std::pair{ok, fmt("IoU %.4f, %zu points, in-box %s, |p1p2| %.1f, off-mask %s, reproducible %s",
                                 overlap, r.points.size(), in_box ? "yes" : "no", d12, off_mask ? "yes" : "no",
                                 reproducible ? "yes" : "no")};
    });

    run("benchmark-phantoms", [] {
        const auto dir = scratch_dir("bench");
        for (int i = 0; i < 20; ++i) {
            const std::string id = fmt("phantom_%03d", i);
            const auto ph = make_angiogram_phantom(derive_seed(0, id));
            write_dataset(dir, id, ph.image, ph.vessel, ph.boxes, ph.anomalies);
        }
        const auto data = load_dataset(dir);
        ThresholdBackend backend;
        const auto naive = run_benchmark(data, backend, {Strategy::Naive, 20.0, 4}, PipelineConfig{});
        const auto drsam = run_benchmark(data, backend, {Strategy::DrSam, 20.0, 4}, PipelineConfig{});
        const bool ok = data.size() == 20 && drsam.failures.empty() && drsam.meanIoU >= 0.9 &&
                        drsam.meanIoU >= naive.meanIoU;
        return std::pair{ok, fmt("dr-sam mIoU %.4f, naive mIoU %.4f, %zu failures", drsam.meanIoU, naive.meanIoU,
                                 drsam.failures.size())};
    });

    run("iou-oracle", [] {
        std::mt19937_64 rng(5150);
        int mismatches = 0;
        for (int i = 0; i < 200; ++i) {
            const auto a = oracle::random_mask(rng, 48, 40, 0.01 * (i % 100));
            const auto b = oracle::random_mask(rng, 48, 40, 0.01 * ((i * 37) % 100));
            mismatches += iou(a, b) != oracle::pixel_count_iou(a, b);
        }
        return std::pair{mismatches == 0, fmt("200 random pairs, %d mismatches", mismatches)};
    });

    run("performance", [] {
        const auto ph = make_angiogram_phantom(0);
        const auto t0 = Clock::now();
        const auto det = detect_detailed(ph.vessel, PipelineConfig{});
        const double elapsed = seconds_since(t0);
        return std::pair{elapsed <= 2.0, fmt("%dx%d mask, skeleton+anomaly %.3f s, %zu segments",
                                             ph.vessel.width(), ph.vessel.height(), elapsed,
                                             det.graph.segments.size())};
    });

    run("cli-service-parity", [] {
        const auto dir = scratch_dir("parity");
        const auto ph = make_angiogram_phantom(0);
        write_gray(dir / "image.png", ph.image);
        nlohmann::json boxes = nlohmann::json::array();
        for (const auto& b : ph.boxes) boxes.push_back(to_json(b));
        std::ofstream(dir / "boxes.json") << boxes.dump();

        std::ostringstream out, err;
        const int code = cmd_analyze({dir / "image.png", dir / "boxes.json", "threshold", std::nullopt,
                                      dir / "out", std::uint64_t{0}},
                                     out, err);
        if (code != kExitOk) return std::pair{false, "cmd_analyze exit " + std::to_string(code) + ": " + err.str()};
        const auto cli_doc = slurp(dir / "out" / "analysis.json");

        AnalysisService service(std::make_shared<ThresholdBackend>(), ServiceOptions{});
        const int port = service.start("127.0.0.1", 0);
        httplib::Client c("127.0.0.1", port);
        const auto up = c.Post("/api/images", slurp(dir / "image.png"), "image/png");
        if (!up || up->status != 201) return std::pair{false, std::string("upload failed")};
        const auto id = nlohmann::json::parse(up->body)["imageId"].get<std::string>();
        const nlohmann::json body = {{"boxes", boxes}, {"config", {{"rngSeed", 0}}}};
        const auto an = c.Post("/api/images/" + id + "/analyze", body.dump(), "application/json");
        if (!an || an->status != 200) return std::pair{false, std::string("analyze failed")};
        const auto sid = nlohmann::json::parse(an->body)["sessionId"].get<std::string>();
        std::string status = "pending";
        for (int i = 0; i < 500 && status == "pending"; ++i) {
            status = nlohmann::json::parse(c.Get("/api/sessions/" + sid)->body)["status"];
        }
        const auto doc = c.Get("/api/sessions/" + sid + "/analysis");
        const bool ok = status == "done" && doc && doc->body == cli_doc;
        service.stop();
        return std::pair{ok, fmt("%zu-byte analysis JSON, byte-identical %s", cli_doc.size(), ok ? "yes" : "no")};
    });

    std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILED", failures);
    return failures == 0 ? 0 : 1;
}
