#pragma once

#include <stdexcept>
#include <string>

namespace drsam {

/// Base class for every error raised by the pipeline.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input failed a precondition (bad box, mismatched dimensions, malformed file).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// No pixel in the region passes the vessel-probability threshold.
class NoCandidatesError : public Error {
public:
    using Error::Error;
};

/// Transport or model failure in a segmentation backend.
class BackendError : public Error {
public:
    BackendError(std::string request_id, const std::string& what)
        : Error("backend failure [" + request_id + "]: " + what),
          request_id_(std::move(request_id)) {}

    const std::string& request_id() const noexcept { return request_id_; }

private:
    std::string request_id_;
};

class SegmentTooShortError : public Error {
public:
    using Error::Error;
};

class SegmentOutsideFieldError : public Error {
public:
    using Error::Error;
};

}  // namespace drsam
