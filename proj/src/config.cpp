#include "drsam/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>

#include "drsam/error.hpp"

namespace drsam {
namespace {

struct FieldAccess {
    std::function<nlohmann::json(const PipelineConfig&)> get;
    std::function<void(PipelineConfig&, const nlohmann::json&)> set;
};

template <typename T>
FieldAccess field(T PipelineConfig::*member) {
    return {[member](const PipelineConfig& c) { return nlohmann::json(c.*member); },
            [member](PipelineConfig& c, const nlohmann::json& v) {
                if constexpr (std::is_floating_point_v<T>) {
                    if (!v.is_number()) throw ValidationError("expected a number");
                } else if constexpr (std::is_unsigned_v<T>) {
                    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) throw ValidationError("expected an unsigned integer");
                } else {
                    if (!v.is_number_integer()) throw ValidationError("expected an integer");
                }
                c.*member = v.get<T>();
            }};
}

// Ordered by name so serialized configs are stable.
const std::map<std::string, FieldAccess>& fields() {
    static const std::map<std::string, FieldAccess> table = {
        {"epsDivisor", field(&PipelineConfig::epsDivisor)},
        {"excludeRadius", field(&PipelineConfig::excludeRadius)},
        {"minBranchLength", field(&PipelineConfig::minBranchLength)},
        {"minChangeThreshold", field(&PipelineConfig::minChangeThreshold)},
        {"minSegmentLength", field(&PipelineConfig::minSegmentLength)},
        {"probabilityThreshold", field(&PipelineConfig::probabilityThreshold)},
        {"refinementIterations", field(&PipelineConfig::refinementIterations)},
        {"rngSeed", field(&PipelineConfig::rngSeed)},
        {"sampleSize", field(&PipelineConfig::sampleSize)},
        {"secondPointSelectionRadius", field(&PipelineConfig::secondPointSelectionRadius)},
        {"selectionRadius", field(&PipelineConfig::selectionRadius)},
        {"stepDivisor", field(&PipelineConfig::stepDivisor)},
    };
    return table;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

void PipelineConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw ValidationError(std::string("invalid config: ") + what);
    };
    require(probabilityThreshold > 0.0 && probabilityThreshold < 1.0,
            "probabilityThreshold must be in (0,1)");
    require(minChangeThreshold > 0.0 && minChangeThreshold < 1.0,
            "minChangeThreshold must be in (0,1)");
    require(sampleSize > 0, "sampleSize must be > 0");
    require(selectionRadius > 0.0, "selectionRadius must be > 0");
    require(secondPointSelectionRadius > 0.0, "secondPointSelectionRadius must be > 0");
    require(excludeRadius > 0.0, "excludeRadius must be > 0");
    require(refinementIterations >= 0, "refinementIterations must be >= 0");
    require(minBranchLength > 0, "minBranchLength must be > 0");
    require(minSegmentLength > 0, "minSegmentLength must be > 0");
    require(epsDivisor >= 1, "epsDivisor must be >= 1");
    require(stepDivisor >= 1, "stepDivisor must be >= 1");
}

nlohmann::json to_json(const PipelineConfig& cfg) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [name, access] : fields()) out[name] = access.get(cfg);
    return out;
}

PipelineConfig apply_overrides(PipelineConfig base, const nlohmann::json& overrides) {
    if (overrides.is_null()) return base;
    if (!overrides.is_object()) throw ValidationError("config overrides must be a JSON object");
    for (const auto& [key, value] : overrides.items()) {
        const auto it = fields().find(key);
        if (it == fields().end()) throw ValidationError("unknown config key: " + key);
        try {
            it->second.set(base, value);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("config key " + key + ": " + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError("config key " + key + ": " + e.what());
        }
    }
    base.validate();
    return base;
}

PipelineConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file " + path.string());

    nlohmann::json overrides = nlohmann::json::object();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string raw = trim(line.substr(eq + 1));
        nlohmann::json value;
        try {
            value = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::parse_error&) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": value is not a number");
        }
        overrides[key] = value;
    }
    return apply_overrides(PipelineConfig{}, overrides);
}

PipelineConfig apply_environment(PipelineConfig cfg) {
    if (const char* seed = std::getenv("DRSAM_SEED"); seed != nullptr && *seed != '\0') {
        try {
            cfg.rngSeed = std::stoull(seed);
        } catch (const std::exception&) {
            throw ValidationError(std::string("DRSAM_SEED is not an unsigned integer: ") + seed);
        }
    }
    return cfg;
}

}  // namespace drsam
