#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "drsam/config.hpp"

namespace drsam {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitBackend = 3;

struct AnalyzeArgs {
    std::filesystem::path imagePath;
    std::filesystem::path boxesPath;
    std::string backendSpec;  // see make_backend
    std::optional<std::filesystem::path> configPath;
    std::filesystem::path outDir;
    std::optional<std::uint64_t> seed;
};

/// Defaults, then the config file, then DRSAM_SEED, then an explicit seed.
PipelineConfig resolve_config(const std::optional<std::filesystem::path>& configPath,
                              const std::optional<std::uint64_t>& seed);

/// Writes analysis.json plus mask and overlay rasters under `outDir`. Returns 0 on success,
/// 2 on invalid input, 3 when the backend fails; messages go to `err`.
int cmd_analyze(const AnalyzeArgs& args, std::ostream& out, std::ostream& err);

/// Entry point of the `drsam` executable.
int run_cli(int argc, char** argv);

}  // namespace drsam
