#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "drsam/analysis.hpp"
#include "drsam/config.hpp"
#include "drsam/segmentation.hpp"

namespace httplib {
class Server;
}

namespace drsam {

/// Fixed-size pool of worker threads draining a FIFO of jobs.
class WorkerPool {
public:
    explicit WorkerPool(int workers);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    void submit(std::function<void()> job);

private:
    std::mutex lock_;
    std::condition_variable wake_;
    std::deque<std::function<void()>> jobs_;
    bool stopping_ = false;
    std::vector<std::thread> threads_;
};

enum class SessionStatus { Pending, Done, Failed };

const char* to_string(SessionStatus s);

/// One analysis request. Immutable once it leaves Pending.
struct AnalysisSession {
    std::string sessionId;
    std::string imageId;
    std::vector<BoundingBox> boxes;
    PipelineConfig config;
    SessionStatus status = SessionStatus::Pending;
    std::string document;  // canonical analysis JSON once done
    nlohmann::json payload;  // masks and overlay once done
    std::string error;
    bool backendFailure = false;
};

struct ServiceOptions {
    PipelineConfig config;
    int workers = 2;
    std::chrono::milliseconds analyzeBudget = std::chrono::seconds(60);
};

/// HTTP API for the review UI:
///   POST /api/images                 raw PNG body or {"image_b64": ...} -> {"imageId"}
///   POST /api/images/{id}/analyze    {"boxes": [...], "config": {...}} -> {"sessionId", "status"}
///   GET  /api/sessions/{sid}         session JSON with analysis, masks and overlay
///   GET  /api/sessions/{sid}/analysis  canonical analysis document (same bytes as the CLI)
///   GET  /healthz
/// Errors are JSON {"error", "detail"}: 404 unknown id, 422 invalid input, 503 backend down.
class AnalysisService {
public:
    AnalysisService(std::shared_ptr<SegmentationBackend> backend, ServiceOptions options);
    ~AnalysisService();

    AnalysisService(const AnalysisService&) = delete;
    AnalysisService& operator=(const AnalysisService&) = delete;

    /// Binds and serves on a background thread; returns the bound port (0 picks a free one).
    int start(const std::string& host, int port);
    void stop();
    /// Blocks until the server stops.
    void wait();

    httplib::Server& server() { return *server_; }

private:
    void install_routes();
    std::shared_ptr<AnalysisSession> find_session(const std::string& id) const;

    std::shared_ptr<SegmentationBackend> backend_;
    ServiceOptions options_;
    std::unique_ptr<httplib::Server> server_;
    std::thread listener_;

    mutable std::shared_mutex images_lock_;
    std::map<std::string, std::shared_ptr<const GrayscaleImage>> images_;

    mutable std::shared_mutex sessions_lock_;
    std::map<std::string, std::shared_ptr<AnalysisSession>> sessions_;
    std::mutex session_update_;
    std::condition_variable session_done_;
    std::atomic<long> next_session_{1};

    WorkerPool pool_;
};

}  // namespace drsam
