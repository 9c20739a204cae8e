#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>

#include <json.hpp>

#include "drsam/segmentation.hpp"

namespace httplib {
class Server;
}

namespace drsam {

// Segmentation wire protocol:
//   POST /segment {"image_b64": <png>, "box": {x0,y0,x1,y1}, "points": [{"x","y","label"}]}
//     200 {"mask_b64": <png>, "model": str}; 422 malformed request; 503 model unavailable.

nlohmann::json encode_segment_request(const SegmentationRequest& request);

struct DecodedSegmentRequest {
    GrayscaleImage image;
    BoundingBox box;
    std::vector<PromptPoint> points;
};

/// Throws ValidationError when the body violates the schema: undecodable image, box outside
/// the image, or a point outside the box.
DecodedSegmentRequest decode_segment_request(const nlohmann::json& body);

/// Client side of the wire protocol.
class RemoteBackend final : public SegmentationBackend {
public:
    explicit RemoteBackend(std::string url,
                           std::chrono::milliseconds timeout = std::chrono::seconds(30));

    BackendInfo info() const override { return {"remote", true, false}; }
    const std::string& url() const noexcept { return url_; }

protected:
    BinaryMask segment_impl(const SegmentationRequest& request) override;

private:
    std::string url_;
    std::chrono::milliseconds timeout_;
};

/// Serves `POST /segment` and `GET /healthz` backed by an in-process backend. `ready`
/// gates requests with 503 until it is set.
void install_segment_endpoint(httplib::Server& server, SegmentationBackend& backend,
                              const std::atomic<bool>& ready);

/// "threshold", "precomputed:<mask.png>" or an http:// URL. An empty spec falls back to
/// DRSAM_BACKEND_URL, then to "threshold".
std::unique_ptr<SegmentationBackend> make_backend(const std::string& spec, const PipelineConfig& cfg,
                                                  std::chrono::milliseconds timeout = std::chrono::seconds(30));

}  // namespace drsam
