#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "heatpinn/fem.hpp"
#include "heatpinn/training.hpp"

namespace heatpinn {

struct OutputSettings {
    int grid_nx = 81;        ///< export/comparison grid columns
    int grid_ny = 41;        ///< export/comparison grid rows
    int profile_samples = 201;

    void validate() const;
};

/// Full description of one simulation: problem, solvers, run parameters.
/// Parsed from an INI-style file; every field has a default except the
/// [material] section, which must be present.
struct SimulationConfig {
    DomainSpec domain;
    MaterialProps material;
    SourceSpec source;
    Architecture arch;
    TrainHyper hyper;
    WindowSchedule schedule;
    SamplingCounts counts;
    FemSettings fem;
    OutputSettings output;
    double out_scale = 500.0;
    double out_offset = 298.0;
    double initial_temperature = 298.0;
    std::uint64_t seed = 0;

    void validate() const;

    TrainSetup train_setup() const;

    /// Canonical INI text: fixed section/key order, full precision. Equal
    /// configs produce identical text; the text reparses to an equal config.
    std::string canonical_dump() const;

    /// FNV-1a hash of the canonical dump, as fixed-width hex.
    std::string hash_hex() const;
};

/// Parse and validate a config file. Unknown sections or keys are rejected.
SimulationConfig parse_config(const std::filesystem::path& path);

/// Parse from text (same grammar); `origin` names the source in errors.
SimulationConfig parse_config_text(const std::string& text, const std::string& origin = "config");

/// Apply one "section.key=value" override string to an already-parsed config.
void apply_override(SimulationConfig& cfg, const std::string& assignment);

} // namespace heatpinn
