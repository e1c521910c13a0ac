#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <string>

#include "sabon/galerkin.hpp"
#include "sabon/trainer.hpp"

namespace sabon {

inline constexpr int kConfigSchema = 1;

struct BaselineOptions {
    int per_dim = 18;        // Fourier functions per coordinate
    int quad_side = 400;     // quadrature grid for Galerkin matrices
    int analysis_side = 100; // grid for projection errors
};

struct ExperimentConfig {
    Scale scale = Scale::Desk;
    TrainConfig train; // carries map, seed and thread count
    SRBOptions srb;
    BaselineOptions baseline;
};

// Preset values for the map at the given scale.
ExperimentConfig default_experiment(const MapDescriptor& map, Scale scale);

// Parses the sectioned key=value format (see docs/config.md). Presets for the
// declared map and scale are applied first, then every key in the file
// overrides them. `scale_override` replaces the file's scale when present.
// Throws ConfigError with the line number on any problem.
ExperimentConfig parse_config(std::istream& in, std::optional<Scale> scale_override = std::nullopt);
ExperimentConfig load_config(const std::string& path, std::optional<Scale> scale_override = std::nullopt);

// Canonical text form (every key, fixed order); parse_config(canonical) is
// the same experiment. Its SHA-256 is the config hash.
std::string canonical_config(const ExperimentConfig& cfg);
std::string config_hash(const ExperimentConfig& cfg);

MapDescriptor parse_map(const std::string& name);
std::string scale_name(Scale s);
Scale parse_scale(const std::string& name);

} // namespace sabon
