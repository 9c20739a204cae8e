#include "drsam/remote_backend.hpp"

#include <cstdlib>

#include <httplib.h>

#include "drsam/evaluation.hpp"
#include "drsam/image_io.hpp"

namespace drsam {

nlohmann::json encode_segment_request(const SegmentationRequest& request) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : request.positivePoints) points.push_back(to_json(p));
    return {{"image_b64", base64_encode(encode_png_gray(*request.image))},
            {"box", to_json(request.box)},
            {"points", std::move(points)}};
}

DecodedSegmentRequest decode_segment_request(const nlohmann::json& body) {
    if (!body.is_object() || !body.contains("image_b64") || !body["image_b64"].is_string() ||
        !body.contains("box")) {
        throw ValidationError("request needs image_b64 (string) and box");
    }
    DecodedSegmentRequest out;
    out.image = decode_png_gray(base64_decode(body["image_b64"].get<std::string>()));
    out.box = box_from_json(body["box"]);
    validate_box(out.box, out.image.width(), out.image.height());
    if (body.contains("points")) {
        if (!body["points"].is_array()) throw ValidationError("points must be an array");
        for (const auto& p : body["points"]) {
            const PromptPoint point = prompt_point_from_json(p);
            if (!out.box.contains(point.pixel())) {
                throw ValidationError("point (" + std::to_string(point.x) + "," +
                                      std::to_string(point.y) + ") lies outside the box");
            }
            out.points.push_back(point);
        }
    }
    return out;
}

RemoteBackend::RemoteBackend(std::string url, std::chrono::milliseconds timeout)
    : url_(std::move(url)), timeout_(timeout) {
    while (!url_.empty() && url_.back() == '/') url_.pop_back();
}

BinaryMask RemoteBackend::segment_impl(const SegmentationRequest& request) {
    httplib::Client client(url_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const std::string body = encode_segment_request(request).dump();
    const auto response = client.Post("/segment", body, "application/json");
    if (!response) {
        throw BackendError(request.requestId,
                           url_ + "/segment: " + httplib::to_string(response.error()));
    }
    if (response->status != 200) {
        throw BackendError(request.requestId, url_ + "/segment returned HTTP " +
                                                  std::to_string(response->status) + ": " +
                                                  response->body);
    }
    try {
        const auto reply = nlohmann::json::parse(response->body);
        return gray_to_mask(decode_png_gray(base64_decode(reply.at("mask_b64").get<std::string>())));
    } catch (const std::exception& e) {
        throw BackendError(request.requestId, std::string("malformed backend reply: ") + e.what());
    }
}

void install_segment_endpoint(httplib::Server& server, SegmentationBackend& backend,
                              const std::atomic<bool>& ready) {
    auto reply = [](httplib::Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    };

    server.Get("/healthz", [&ready, &backend, reply](const httplib::Request&, httplib::Response& res) {
        reply(res, ready ? 200 : 503,
              {{"status", ready ? "ok" : "loading"}, {"model", backend.info().name}});
    });

    server.Post("/segment", [&ready, &backend, reply](const httplib::Request& req, httplib::Response& res) {
        if (!ready) {
            reply(res, 503, {{"error", "model_unavailable"}, {"detail", "model is not loaded"}});
            return;
        }
        DecodedSegmentRequest decoded;
        try {
            decoded = decode_segment_request(nlohmann::json::parse(req.body));
        } catch (const nlohmann::json::exception& e) {
            reply(res, 422, {{"error", "invalid_request"}, {"detail", e.what()}});
            return;
        } catch (const ValidationError& e) {
            reply(res, 422, {{"error", "invalid_request"}, {"detail", e.what()}});
            return;
        }
        try {
            SegmentationRequest request{&decoded.image, image_digest(decoded.image), decoded.box,
                                        decoded.points, "wire"};
            const BinaryMask mask = clamp_to_box(backend.segment(request), decoded.box);
            reply(res, 200,
                  {{"mask_b64", base64_encode(encode_png_gray(mask_to_gray(mask)))},
                   {"model", backend.info().name}});
        } catch (const std::exception& e) {
            reply(res, 500, {{"error", "inference_failed"}, {"detail", e.what()}});
        }
    });
}

std::unique_ptr<SegmentationBackend> make_backend(const std::string& spec, const PipelineConfig& cfg,
                                                  std::chrono::milliseconds timeout) {
    std::string resolved = spec;
    if (resolved.empty()) {
        const char* env = std::getenv("DRSAM_BACKEND_URL");
        resolved = env != nullptr && *env != '\0' ? env : "threshold";
    }
    if (resolved == "threshold") return std::make_unique<ThresholdBackend>(cfg.probabilityThreshold);
    if (resolved.rfind("precomputed:", 0) == 0) {
        auto backend = std::make_unique<PrecomputedMaskBackend>();
        backend->set_default(read_mask(resolved.substr(std::string("precomputed:").size())));
        return backend;
    }
    if (resolved.rfind("http://", 0) == 0) {
        return std::make_unique<RemoteBackend>(resolved, timeout);
    }
    throw ValidationError("unknown backend '" + resolved +
                          "' (expected threshold, precomputed:<mask.png> or an http:// URL)");
}

}  // namespace drsam
