#include "drsam/service.hpp"

#include <httplib.h>

#include "drsam/evaluation.hpp"
#include "drsam/image_io.hpp"

namespace drsam {

WorkerPool::WorkerPool(int workers) {
    for (int i = 0; i < std::max(1, workers); ++i) {
        threads_.emplace_back([this] {
            for (;;) {
                std::function<void()> job;
                {
                    std::unique_lock lock(lock_);
                    wake_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
                    if (stopping_) return;
                    job = std::move(jobs_.front());
                    jobs_.pop_front();
                }
                job();
            }
        });
    }
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(lock_);
        stopping_ = true;  // queued jobs are dropped
    }
    wake_.notify_all();
    for (auto& t : threads_) t.join();
}

void WorkerPool::submit(std::function<void()> job) {
    {
        std::lock_guard lock(lock_);
        jobs_.push_back(std::move(job));
    }
    wake_.notify_one();
}

const char* to_string(SessionStatus s) {
    switch (s) {
        case SessionStatus::Pending: return "pending";
        case SessionStatus::Done: return "done";
        case SessionStatus::Failed: return "failed";
    }
    return "?";
}

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& error, const std::string& detail) {
    send_json(res, status, {{"error", error}, {"detail", detail}});
}

}  // namespace

AnalysisService::AnalysisService(std::shared_ptr<SegmentationBackend> backend, ServiceOptions options)
    : backend_(std::move(backend)),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()),
      pool_(options_.workers) {
    options_.config.validate();
    install_routes();
}

AnalysisService::~AnalysisService() { stop(); }

int AnalysisService::start(const std::string& host, int port) {
    const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    listener_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

void AnalysisService::stop() {
    if (server_) server_->stop();
    if (listener_.joinable()) listener_.join();
}

void AnalysisService::wait() {
    if (listener_.joinable()) listener_.join();
}

std::shared_ptr<AnalysisSession> AnalysisService::find_session(const std::string& id) const {
    std::shared_lock lock(sessions_lock_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

void AnalysisService::install_routes() {
    auto& srv = *server_;

    srv.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, {{"status", "ok"}, {"backend", backend_->info().name}});
    });

    srv.Post("/api/images", [this](const httplib::Request& req, httplib::Response& res) {
        GrayscaleImage image;
        try {
            const bool is_json = req.get_header_value("Content-Type").find("json") != std::string::npos;
            if (is_json) {
                const auto body = nlohmann::json::parse(req.body);
                image = decode_png_gray(base64_decode(body.at("image_b64").get<std::string>()));
            } else {
                image = decode_png_gray(std::span(
                    reinterpret_cast<const std::uint8_t*>(req.body.data()), req.body.size()));
            }
        } catch (const std::exception& e) {
            send_error(res, 422, "invalid_image", e.what());
            return;
        }
        const std::string id = image_digest(image);
        {
            std::unique_lock lock(images_lock_);
            images_.try_emplace(id, std::make_shared<const GrayscaleImage>(std::move(image)));
        }
        send_json(res, 201, {{"imageId", id}});
    });

    srv.Post(R"(/api/images/([0-9a-f]+)/analyze)", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string image_id = req.matches[1];
        std::shared_ptr<const GrayscaleImage> image;
        {
            std::shared_lock lock(images_lock_);
            if (const auto it = images_.find(image_id); it != images_.end()) image = it->second;
        }
        if (!image) {
            send_error(res, 404, "unknown_image", "no image with id " + image_id);
            return;
        }

        auto session = std::make_shared<AnalysisSession>();
        try {
            const auto body = nlohmann::json::parse(req.body.empty() ? std::string("{}") : req.body);
            session->boxes = boxes_from_json(body.value("boxes", nlohmann::json()));
            for (const auto& b : session->boxes) validate_box(b, image->width(), image->height());
            session->config = apply_overrides(options_.config, body.value("config", nlohmann::json()));
        } catch (const nlohmann::json::exception& e) {
            send_error(res, 422, "invalid_request", e.what());
            return;
        } catch (const ValidationError& e) {
            send_error(res, 422, "invalid_request", e.what());
            return;
        }
        session->imageId = image_id;
        char id[32];
        std::snprintf(id, sizeof id, "s%06ld", next_session_++);
        session->sessionId = id;
        {
            std::unique_lock lock(sessions_lock_);
            sessions_[session->sessionId] = session;
        }

        pool_.submit([this, session, image] {
            AnalysisSession outcome;
            try {
                const AnalysisResult result = analyze_image(*backend_, *image, session->boxes, session->config);
                outcome.document = analysis_document(result);
                nlohmann::json masks = nlohmann::json::array();
                for (const auto& b : result.boxes) {
                    masks.push_back(base64_encode(encode_png_gray(mask_to_gray(b.refinement.mask))));
                }
                outcome.payload = {{"box_masks_b64", std::move(masks)},
                                   {"mask_b64", base64_encode(encode_png_gray(mask_to_gray(result.mask)))},
                                   {"overlay_b64", base64_encode(encode_png_rgb(render_overlay(*image, result)))}};
                outcome.status = SessionStatus::Done;
            } catch (const BackendError& e) {
                outcome.status = SessionStatus::Failed;
                outcome.backendFailure = true;
                outcome.error = e.what();
            } catch (const std::exception& e) {
                outcome.status = SessionStatus::Failed;
                outcome.error = e.what();
            }
            {
                std::lock_guard lock(session_update_);
                session->document = std::move(outcome.document);
                session->payload = std::move(outcome.payload);
                session->error = std::move(outcome.error);
                session->backendFailure = outcome.backendFailure;
                session->status = outcome.status;
            }
            session_done_.notify_all();
        });

        std::unique_lock lock(session_update_);
        session_done_.wait_for(lock, options_.analyzeBudget,
                               [&] { return session->status != SessionStatus::Pending; });
        const nlohmann::json ack = {{"sessionId", session->sessionId}, {"status", to_string(session->status)}};
        if (session->status == SessionStatus::Pending) {
            send_json(res, 202, ack);
        } else if (session->status == SessionStatus::Done) {
            send_json(res, 200, ack);
        } else {
            const int status = session->backendFailure ? 503 : 500;
            send_json(res, status,
                      {{"error", session->backendFailure ? "backend_unavailable" : "analysis_failed"},
                       {"detail", session->error},
                       {"sessionId", session->sessionId}});
        }
    });

    srv.Get(R"(/api/sessions/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto session = find_session(req.matches[1]);
        if (!session) {
            send_error(res, 404, "unknown_session", "no session with id " + std::string(req.matches[1]));
            return;
        }
        std::lock_guard lock(session_update_);
        nlohmann::json boxes = nlohmann::json::array();
        for (const auto& b : session->boxes) boxes.push_back(to_json(b));
        nlohmann::json body = {{"sessionId", session->sessionId},
                               {"imageId", session->imageId},
                               {"status", to_string(session->status)},
                               {"boxes", std::move(boxes)},
                               {"config", to_json(session->config)}};
        if (session->status == SessionStatus::Done) {
            body["analysis"] = nlohmann::json::parse(session->document);
            body.update(session->payload);
        }
        if (!session->error.empty()) body["error"] = session->error;
        send_json(res, 200, body);
    });

    srv.Get(R"(/api/sessions/([A-Za-z0-9_-]+)/analysis)", [this](const httplib::Request& req, httplib::Response& res) {
        const auto session = find_session(req.matches[1]);
        if (!session) {
            send_error(res, 404, "unknown_session", "no session with id " + std::string(req.matches[1]));
            return;
        }
        std::lock_guard lock(session_update_);
        if (session->status != SessionStatus::Done) {
            send_error(res, 409, "not_ready", std::string("session is ") + to_string(session->status));
            return;
        }
        res.status = 200;
        res.set_content(session->document, "application/json");
    });
}

}  // namespace drsam
