#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "drsam/analysis.hpp"
#include "drsam/cli.hpp"
#include "drsam/evaluation.hpp"
#include "drsam/image_io.hpp"
#include "drsam/phantom.hpp"
#include "drsam/remote_backend.hpp"
#include "drsam/service.hpp"

using namespace drsam;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("drsam_app_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Fixture {
    std::filesystem::path dir;
    std::filesystem::path image;
    std::filesystem::path boxes;
    AngiogramPhantom phantom;
};

// The golden fixture: phantom seed 0 with default options.
Fixture write_fixture(const std::string& name) {
    Fixture f{scratch_dir(name), {}, {}, make_angiogram_phantom(0)};
    f.image = f.dir / "image.png";
    f.boxes = f.dir / "boxes.json";
    write_gray(f.image, f.phantom.image);
    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& b : f.phantom.boxes) boxes.push_back(to_json(b));
    std::ofstream(f.boxes) << boxes.dump();
    return f;
}

int analyze(const Fixture& f, const std::filesystem::path& out, const std::string& backend = "threshold") {
    std::ostringstream o, e;
    AnalyzeArgs args{f.image, f.boxes, backend, std::nullopt, out, 0};
    return cmd_analyze(args, o, e);
}

class ServiceHarness {
public:
    explicit ServiceHarness(std::shared_ptr<SegmentationBackend> backend, ServiceOptions options = {})
        : service(std::move(backend), options) {
        port = service.start("127.0.0.1", 0);
    }

    httplib::Client client() const { return httplib::Client("127.0.0.1", port); }

    AnalysisService service;
    int port = 0;
};

class AlwaysFails final : public SegmentationBackend {
public:
    BackendInfo info() const override { return {"down", true, false}; }

protected:
    BinaryMask segment_impl(const SegmentationRequest& r) override { throw BackendError(r.requestId, "offline"); }
};

}  // namespace

TEST(Analyze, MatchesTheGoldenDocument) {
    const auto f = write_fixture("golden");
    ASSERT_EQ(analyze(f, f.dir / "out"), kExitOk);
    const auto doc = slurp(f.dir / "out" / "analysis.json");
    const auto golden = slurp(std::filesystem::path(DRSAM_GOLDEN_DIR) / "phantom_seed0_analysis.json");
    ASSERT_FALSE(golden.empty());
    EXPECT_EQ(doc, golden);

    const auto j = nlohmann::json::parse(doc);
    ASSERT_EQ(j["per_box"].size(), 1u);
    EXPECT_EQ(j["per_box"][0]["points"].size(), 5u);
    EXPECT_EQ(j["per_box"][0]["mask_path"], "masks/box_0.png");
    for (const char* name : {"masks/box_0.png", "mask.png", "overlay.png"}) {
        EXPECT_TRUE(std::filesystem::exists(f.dir / "out" / name)) << name;
    }
    EXPECT_EQ(read_mask(f.dir / "out" / "masks/box_0.png").count(), j["per_box"][0]["mask_pixels"].get<std::size_t>());
}

TEST(Analyze, ExitCodes) {
    const auto f = write_fixture("exit");
    std::ofstream(f.dir / "bad.json") << "[{\"x0\": 1,";
    AnalyzeArgs args{f.image, f.dir / "bad.json", "threshold", std::nullopt, f.dir / "o1", std::nullopt};
    std::ostringstream o, e;
    EXPECT_EQ(cmd_analyze(args, o, e), kExitValidation);
    EXPECT_FALSE(e.str().empty());

    std::ofstream(f.dir / "outside.json") << R"([{"x0":0,"y0":0,"x1":5000,"y1":10}])";
    args.boxesPath = f.dir / "outside.json";
    EXPECT_EQ(cmd_analyze(args, o, e), kExitValidation);

    std::ofstream(f.dir / "none.json") << "[]";
    args.boxesPath = f.dir / "none.json";
    EXPECT_EQ(cmd_analyze(args, o, e), kExitValidation);

    EXPECT_EQ(analyze(f, f.dir / "o2", "http://127.0.0.1:1"), kExitBackend);
    EXPECT_EQ(analyze(f, f.dir / "o3", "carrier-pigeon"), kExitValidation);
}

TEST(Analyze, ConfigResolutionOrder) {
    const auto path = std::filesystem::temp_directory_path() / "drsam_resolve.conf";
    std::ofstream(path) << "rngSeed = 4\nsampleSize = 20\n";
    ::setenv("DRSAM_SEED", "8", 1);
    EXPECT_EQ(resolve_config(path, std::nullopt).rngSeed, 8u);
    EXPECT_EQ(resolve_config(path, 15).rngSeed, 15u);
    EXPECT_EQ(resolve_config(path, 15).sampleSize, 20);
    ::unsetenv("DRSAM_SEED");
    EXPECT_EQ(resolve_config(path, std::nullopt).rngSeed, 4u);
}

TEST(Analyze, BoxWithoutVesselIsReportedNotFatal) {
    const auto ph = make_angiogram_phantom(0, {.noise = false, .distractors = false, .whiteBackground = true});
    ThresholdBackend backend;
    const BoundingBox corner{0, 0, 5, 5};
    const auto r = analyze_image(backend, ph.image, {ph.boxes[0], corner}, PipelineConfig{});
    ASSERT_EQ(r.boxes.size(), 2u);
    EXPECT_TRUE(r.boxes[1].noCandidates);
    EXPECT_EQ(analysis_to_json(r)["per_box"][1]["status"], "no_candidates");
    EXPECT_EQ(r.mask, r.boxes[0].refinement.mask);
}

TEST(RemoteBackend, WireRoundTrip) {
    ThresholdBackend local;
    std::atomic<bool> ready{true};
    httplib::Server server;
    install_segment_endpoint(server, local, ready);
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    const auto ph = make_angiogram_phantom(2);
    RemoteBackend remote("http://127.0.0.1:" + std::to_string(port));
    PipelineConfig cfg;
    Rng a(1), b(1);
    const auto via_wire = run_point_refinement(remote, ph.image, "x", ph.boxes[0], cfg, a);
    const auto direct = run_point_refinement(local, ph.image, "x", ph.boxes[0], cfg, b);
    EXPECT_EQ(via_wire.mask, direct.mask);
    EXPECT_EQ(via_wire.points, direct.points);

    httplib::Client c("127.0.0.1", port);
    SegmentationRequest req{&ph.image, "x", ph.boxes[0], {{0, 0}}, "r"};
    req.box = {10, 10, 20, 20};
    auto res = c.Post("/segment", encode_segment_request(req).dump(), "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 422);  // point outside the box
    res = c.Post("/segment", "{not json", "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 422);

    ready = false;
    res = c.Get("/healthz");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 503);
    Rng r(0);
    EXPECT_THROW(run_point_refinement(remote, ph.image, "x", ph.boxes[0], cfg, r), BackendError);

    server.stop();
    t.join();
    EXPECT_THROW(run_point_refinement(remote, ph.image, "x", ph.boxes[0], cfg, r), BackendError);
}

TEST(MakeBackend, Specs) {
    const PipelineConfig cfg;
    EXPECT_EQ(make_backend("threshold", cfg)->info().name, "threshold");
    EXPECT_EQ(make_backend("http://localhost:9", cfg)->info().name, "remote");
    ::setenv("DRSAM_BACKEND_URL", "http://localhost:9", 1);
    EXPECT_EQ(make_backend("", cfg)->info().name, "remote");
    ::unsetenv("DRSAM_BACKEND_URL");
    EXPECT_EQ(make_backend("", cfg)->info().name, "threshold");
    EXPECT_THROW(make_backend("https://x", cfg), ValidationError);
    EXPECT_THROW(make_backend("precomputed:/nonexistent.png", cfg), ValidationError);
}

TEST(Service, UploadAnalyzePollMatchesCli) {
    const auto f = write_fixture("parity");
    ASSERT_EQ(analyze(f, f.dir / "out"), kExitOk);
    const auto cli_doc = slurp(f.dir / "out" / "analysis.json");

    ServiceHarness h(std::make_shared<ThresholdBackend>());
    auto c = h.client();
    auto up = c.Post("/api/images", slurp(f.image), "image/png");
    ASSERT_TRUE(up);
    ASSERT_EQ(up->status, 201);
    const auto image_id = nlohmann::json::parse(up->body)["imageId"].get<std::string>();
    EXPECT_EQ(image_id, image_digest(f.phantom.image));

    const nlohmann::json body = {{"boxes", nlohmann::json::parse(slurp(f.boxes))}};
    auto an = c.Post("/api/images/" + image_id + "/analyze", body.dump(), "application/json");
    ASSERT_TRUE(an);
    ASSERT_EQ(an->status, 200) << an->body;
    const auto sid = nlohmann::json::parse(an->body)["sessionId"].get<std::string>();

    auto doc = c.Get("/api/sessions/" + sid + "/analysis");
    ASSERT_TRUE(doc);
    ASSERT_EQ(doc->status, 200);
    EXPECT_EQ(doc->body, cli_doc);

    auto session = c.Get("/api/sessions/" + sid);
    ASSERT_TRUE(session);
    const auto s = nlohmann::json::parse(session->body);
    EXPECT_EQ(s["status"], "done");
    EXPECT_EQ(s["analysis"], nlohmann::json::parse(cli_doc));
    const auto mask = gray_to_mask(decode_png_gray(base64_decode(s["mask_b64"].get<std::string>())));
    EXPECT_EQ(mask, read_mask(f.dir / "out" / "mask.png"));
    EXPECT_EQ(s["box_masks_b64"].size(), 1u);
    EXPECT_FALSE(s["overlay_b64"].get<std::string>().empty());

    // Re-analysis creates a new session.
    auto again = c.Post("/api/images/" + image_id + "/analyze", body.dump(), "application/json");
    ASSERT_TRUE(again);
    EXPECT_NE(nlohmann::json::parse(again->body)["sessionId"], sid);
}

TEST(Service, JsonUploadAndConfigOverrides) {
    const auto ph = make_angiogram_phantom(4);
    ServiceHarness h(std::make_shared<ThresholdBackend>());
    auto c = h.client();
    const nlohmann::json upload = {{"image_b64", base64_encode(encode_png_gray(ph.image))}};
    auto up = c.Post("/api/images", upload.dump(), "application/json");
    ASSERT_TRUE(up);
    const auto id = nlohmann::json::parse(up->body)["imageId"].get<std::string>();
    const nlohmann::json body = {{"boxes", {to_json(ph.boxes[0])}}, {"config", {{"rngSeed", 12}}}};
    auto an = c.Post("/api/images/" + id + "/analyze", body.dump(), "application/json");
    ASSERT_TRUE(an);
    ASSERT_EQ(an->status, 200);
    const auto sid = nlohmann::json::parse(an->body)["sessionId"].get<std::string>();
    const auto s = nlohmann::json::parse(c.Get("/api/sessions/" + sid)->body);
    EXPECT_EQ(s["config"]["rngSeed"], 12);
    EXPECT_EQ(s["analysis"]["config"]["rngSeed"], 12);
}

TEST(Service, ErrorContract) {
    const auto ph = make_angiogram_phantom(4);
    ServiceHarness h(std::make_shared<ThresholdBackend>());
    auto c = h.client();
    auto check = [](const httplib::Result& r, int status) {
        ASSERT_TRUE(r);
        EXPECT_EQ(r->status, status) << r->body;
        const auto j = nlohmann::json::parse(r->body);
        EXPECT_TRUE(j.contains("error"));
        EXPECT_TRUE(j.contains("detail"));
    };
    check(c.Get("/api/sessions/s999999"), 404);
    check(c.Post("/api/images/abcdef/analyze", "{}", "application/json"), 404);
    check(c.Post("/api/images", "not a png", "image/png"), 422);

    const auto png = encode_png_gray(ph.image);
    const auto id = nlohmann::json::parse(
        c.Post("/api/images", std::string(png.begin(), png.end()), "image/png")->body)["imageId"].get<std::string>();
    const std::string analyze = "/api/images/" + id + "/analyze";
    check(c.Post(analyze, R"({"boxes":[{"x0":0,"y0":0,"x1":9999,"y1":10}]})", "application/json"), 422);
    check(c.Post(analyze, R"({"boxes":[]})", "application/json"), 422);
    check(c.Post(analyze, R"({"boxes":[{"x0":0,"y0":0,"x1":10,"y1":10}],"config":{"bogus":1}})",
                 "application/json"),
          422);
    check(c.Post(analyze, "{{", "application/json"), 422);
    auto health = c.Get("/healthz");
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
}

TEST(Service, BackendDownIs503) {
    const auto ph = make_angiogram_phantom(4);
    ServiceHarness h(std::make_shared<AlwaysFails>());
    auto c = h.client();
    const auto png = encode_png_gray(ph.image);
    const auto id = nlohmann::json::parse(
        c.Post("/api/images", std::string(png.begin(), png.end()), "image/png")->body)["imageId"].get<std::string>();
    const nlohmann::json body = {{"boxes", {to_json(ph.boxes[0])}}};
    auto r = c.Post("/api/images/" + id + "/analyze", body.dump(), "application/json");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 503);
    const auto j = nlohmann::json::parse(r->body);
    EXPECT_EQ(j["error"], "backend_unavailable");
    const auto s = nlohmann::json::parse(c.Get("/api/sessions/" + j["sessionId"].get<std::string>())->body);
    EXPECT_EQ(s["status"], "failed");
}

TEST(Service, SlowAnalysisAnswers202ThenCompletes) {
    class Slow final : public SegmentationBackend {
    public:
        BackendInfo info() const override { return {"slow", true, false}; }

    protected:
        BinaryMask segment_impl(const SegmentationRequest& r) override {
            std::this_thread::sleep_for(std::chrono::milliseconds(60));
            return inner_.segment(r);
        }

    private:
        ThresholdBackend inner_;
    };
    const auto ph = make_angiogram_phantom(4);
    ServiceOptions options;
    options.analyzeBudget = std::chrono::milliseconds(10);
    ServiceHarness h(std::make_shared<Slow>(), options);
    auto c = h.client();
    const auto png = encode_png_gray(ph.image);
    const auto id = nlohmann::json::parse(
        c.Post("/api/images", std::string(png.begin(), png.end()), "image/png")->body)["imageId"].get<std::string>();
    const nlohmann::json body = {{"boxes", {to_json(ph.boxes[0])}}};
    auto r = c.Post("/api/images/" + id + "/analyze", body.dump(), "application/json");
    ASSERT_TRUE(r);
    ASSERT_EQ(r->status, 202);
    const auto sid = nlohmann::json::parse(r->body)["sessionId"].get<std::string>();
    EXPECT_EQ(c.Get("/api/sessions/" + sid + "/analysis")->status, 409);
    std::string status = "pending";
    for (int i = 0; i < 200 && status == "pending"; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        status = nlohmann::json::parse(c.Get("/api/sessions/" + sid)->body)["status"];
    }
    EXPECT_EQ(status, "done");
}

TEST(Service, ConcurrentSessions) {
    const auto ph = make_angiogram_phantom(6);
    ServiceOptions options;
    options.workers = 3;
    ServiceHarness h(std::make_shared<ThresholdBackend>(), options);
    const auto png = encode_png_gray(ph.image);
    const auto id = nlohmann::json::parse(
        h.client().Post("/api/images", std::string(png.begin(), png.end()), "image/png")->body)["imageId"]
                        .get<std::string>();
    const nlohmann::json body = {{"boxes", {to_json(ph.boxes[0])}}};
    std::vector<std::string> docs(6);
    std::vector<std::thread> threads;
    for (int i = 0; i < 6; ++i) {
        threads.emplace_back([&, i] {
            auto c = h.client();
            auto r = c.Post("/api/images/" + id + "/analyze", body.dump(), "application/json");
            if (!r || r->status != 200) return;
            const auto sid = nlohmann::json::parse(r->body)["sessionId"].get<std::string>();
            docs[static_cast<std::size_t>(i)] = c.Get("/api/sessions/" + sid + "/analysis")->body;
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& d : docs) {
        EXPECT_FALSE(d.empty());
        EXPECT_EQ(d, docs[0]);
    }
}
