#include "drsam/cli.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <httplib.h>

#include "drsam/analysis.hpp"
#include "drsam/evaluation.hpp"
#include "drsam/image_io.hpp"
#include "drsam/phantom.hpp"
#include "drsam/remote_backend.hpp"
#include "drsam/service.hpp"

namespace drsam {

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

nlohmann::json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

// Runs `body` and maps the error taxonomy onto exit codes.
template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const BackendError& e) {
        err << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const ValidationError& e) {
        err << "invalid input: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

void serve_until_interrupted(const std::function<void()>& stop) {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    stop();
}

}  // namespace

PipelineConfig resolve_config(const std::optional<std::filesystem::path>& configPath,
                              const std::optional<std::uint64_t>& seed) {
    PipelineConfig cfg = configPath ? load_config_file(*configPath) : PipelineConfig{};
    cfg = apply_environment(cfg);
    if (seed) cfg.rngSeed = *seed;
    cfg.validate();
    return cfg;
}

int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const PipelineConfig cfg = resolve_config(args.configPath, args.seed);
        const GrayscaleImage image = read_gray(args.imagePath);
        const auto boxes = boxes_from_json(read_json_file(args.boxesPath));
        auto backend = make_backend(args.backendSpec, cfg);
        const AnalysisResult result = analyze_image(*backend, image, boxes, cfg);
        write_analysis_artifacts(args.outDir, image, result);
        out << "wrote " << (args.outDir / "analysis.json").string() << ": " << result.boxes.size()
            << " box(es), " << result.detection.findings.size() << " finding(s)\n";
        return kExitOk;
    });
}

int run_cli(int argc, char** argv) {
    CLI::App app{"Vessel segmentation and anomaly detection for angiograms"};
    app.require_subcommand(1);

    AnalyzeArgs analyze;
    std::string config_path;
    std::uint64_t seed = 0;
    auto* a = app.add_subcommand("analyze", "Segment the boxes of one image and grade anomalies");
    a->add_option("--image", analyze.imagePath, "Input PNG")->required()->check(CLI::ExistingFile);
    a->add_option("--boxes", analyze.boxesPath, "JSON list of {x0,y0,x1,y1}")->required();
    a->add_option("--backend", analyze.backendSpec, "threshold | precomputed:<mask.png> | http://host:port");
    a->add_option("--config", config_path, "key = value config file");
    a->add_option("--out", analyze.outDir, "Output directory")->required();
    auto* a_seed = a->add_option("--seed", seed, "RNG seed");

    std::string serve_host = "127.0.0.1";
    int serve_port = 8080;
    int serve_workers = 2;
    int serve_budget_ms = 60000;
    std::string serve_backend;
    auto* s = app.add_subcommand("serve", "Run the HTTP API");
    s->add_option("--host", serve_host);
    s->add_option("--port", serve_port)->check(CLI::Range(0, 65535));
    s->add_option("--backend", serve_backend);
    s->add_option("--config", config_path);
    s->add_option("--workers", serve_workers)->check(CLI::Range(1, 64));
    s->add_option("--budget-ms", serve_budget_ms, "Wait this long before answering 202")
        ->check(CLI::Range(0, 3600000));
    auto* s_seed = s->add_option("--seed", seed);

    std::filesystem::path dataset_dir;
    std::string strategy = "dr-sam";
    std::string bench_backend;
    double tol_radius = 20.0;
    int bench_workers = 1;
    std::filesystem::path json_out;
    auto* b = app.add_subcommand("benchmark", "Score segmentation strategies on a labelled dataset");
    b->add_option("--dataset-dir", dataset_dir)->required()->check(CLI::ExistingDirectory);
    b->add_option("--strategy", strategy, "box-only | naive | dr-sam | all");
    b->add_option("--backend", bench_backend, "As for analyze, plus 'groundtruth' (serves the dataset masks)");
    b->add_option("--tol-radius", tol_radius)->check(CLI::PositiveNumber);
    b->add_option("--config", config_path);
    b->add_option("--workers", bench_workers)->check(CLI::Range(1, 64));
    b->add_option("--json-out", json_out);
    auto* b_seed = b->add_option("--seed", seed);

    std::filesystem::path phantom_out;
    int phantom_count = 20;
    std::uint64_t phantom_seed = 0;
    bool no_distractors = false;
    auto* p = app.add_subcommand("phantom", "Write a synthetic labelled dataset");
    p->add_option("--out", phantom_out)->required();
    p->add_option("--count", phantom_count)->check(CLI::Range(1, 100000));
    p->add_option("--seed", phantom_seed);
    p->add_flag("--no-distractors", no_distractors);

    std::string sb_host = "127.0.0.1";
    int sb_port = 8500;
    std::string sb_backend = "threshold";
    auto* sb = app.add_subcommand("serve-backend", "Serve POST /segment from an in-process backend");
    sb->add_option("--host", sb_host);
    sb->add_option("--port", sb_port)->check(CLI::Range(0, 65535));
    sb->add_option("--backend", sb_backend, "threshold | precomputed:<mask.png>");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }
    const auto config_opt = config_path.empty() ? std::nullopt
                                                : std::optional<std::filesystem::path>(config_path);

    if (a->parsed()) {
        analyze.configPath = config_opt;
        if (a_seed->count() > 0) analyze.seed = seed;
        return cmd_analyze(analyze, std::cout, std::cerr);
    }

    if (s->parsed()) {
        return guarded(std::cerr, [&] {
            ServiceOptions options;
            options.config = resolve_config(config_opt, s_seed->count() > 0 ? std::optional(seed) : std::nullopt);
            options.workers = serve_workers;
            options.analyzeBudget = std::chrono::milliseconds(serve_budget_ms);
            std::shared_ptr<SegmentationBackend> backend = make_backend(serve_backend, options.config);
            AnalysisService service(backend, options);
            const int port = service.start(serve_host, serve_port);
            std::cout << "listening on http://" << serve_host << ":" << port << " (backend "
                      << backend->info().name << ")" << std::endl;
            serve_until_interrupted([&] { service.stop(); });
            return kExitOk;
        });
    }

    if (b->parsed()) {
        return guarded(std::cerr, [&] {
            const PipelineConfig cfg =
                resolve_config(config_opt, b_seed->count() > 0 ? std::optional(seed) : std::nullopt);
            const auto dataset = load_dataset(dataset_dir);
            std::unique_ptr<SegmentationBackend> backend;
            if (bench_backend == "groundtruth") {
                auto truth = std::make_unique<PrecomputedMaskBackend>();
                for (const auto& r : dataset) truth->add(r.imageId, read_mask(r.maskPath));
                backend = std::move(truth);
            } else {
                backend = make_backend(bench_backend, cfg);
            }
            std::vector<Strategy> strategies;
            if (strategy == "all") {
                strategies = {Strategy::BoxOnly, Strategy::Naive, Strategy::DrSam};
            } else {
                strategies = {strategy_from_string(strategy)};
            }
            std::vector<EvalReport> reports;
            for (const Strategy st : strategies) {
                reports.push_back(run_benchmark(dataset, *backend, {st, tol_radius, bench_workers}, cfg));
            }
            std::cout << format_table(reports);
            if (!json_out.empty()) {
                nlohmann::json doc = nlohmann::json::array();
                for (const auto& r : reports) doc.push_back(to_json(r));
                const std::string text = doc.dump(2) + "\n";
                write_file_bytes(json_out, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                                     text.size()));
            }
            return kExitOk;
        });
    }

    if (p->parsed()) {
        return guarded(std::cerr, [&] {
            PhantomOptions options;
            options.distractors = !no_distractors;
            for (int i = 0; i < phantom_count; ++i) {
                char id[32];
                std::snprintf(id, sizeof id, "phantom_%03d", i);
                const auto ph = make_angiogram_phantom(derive_seed(phantom_seed, id), options);
                write_dataset(phantom_out, id, ph.image, ph.vessel, ph.boxes, ph.anomalies);
            }
            std::cout << "wrote " << phantom_count << " phantom(s) to " << phantom_out.string() << "\n";
            return kExitOk;
        });
    }

    return guarded(std::cerr, [&] {
        if (sb_backend.rfind("http", 0) == 0) throw ValidationError("serve-backend needs a local backend");
        auto backend = make_backend(sb_backend, PipelineConfig{});
        std::atomic<bool> ready{true};
        httplib::Server server;
        install_segment_endpoint(server, *backend, ready);
        const int port = sb_port == 0 ? server.bind_to_any_port(sb_host)
                                      : (server.bind_to_port(sb_host, sb_port) ? sb_port : -1);
        if (port < 0) throw Error("cannot bind " + sb_host + ":" + std::to_string(sb_port));
        std::thread listener([&] { server.listen_after_bind(); });
        server.wait_until_ready();
        std::cout << "segment backend on http://" << sb_host << ":" << port << std::endl;
        serve_until_interrupted([&] { server.stop(); });
        listener.join();
        return kExitOk;
    });
}

}  // namespace drsam
