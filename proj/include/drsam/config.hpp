#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

namespace drsam {

/// Every tunable constant of the pipeline. Defaults are the published operating point.
struct PipelineConfig {
    double probabilityThreshold = 0.6;
    int sampleSize = 100;
    double selectionRadius = 75.0;
    double secondPointSelectionRadius = 50.0;
    double excludeRadius = 100.0;
    int refinementIterations = 3;
    int minBranchLength = 40;
    double minChangeThreshold = 0.5;
    int epsDivisor = 10;
    int stepDivisor = 5;
    int minSegmentLength = 10;
    std::uint64_t rngSeed = 0;

    /// Throws ValidationError on any out-of-range field.
    void validate() const;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

nlohmann::json to_json(const PipelineConfig& cfg);

/// Applies the keys present in `overrides` on top of `base`; unknown keys are rejected.
PipelineConfig apply_overrides(PipelineConfig base, const nlohmann::json& overrides);

/// Reads a `key = value` file (one field per line, `#` comments) on top of the defaults.
PipelineConfig load_config_file(const std::filesystem::path& path);

/// Applies `DRSAM_SEED` from the environment if set.
PipelineConfig apply_environment(PipelineConfig cfg);

}  // namespace drsam
