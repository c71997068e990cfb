#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "esim/model.hpp"

namespace esim {

/// Starting point of a run, overriding the defaults of half-full
/// batteries in the first listed background state.
struct InitialConditions {
    double b1 = 0.0;
    double b2 = 0.0;
    int bg = 0;
};

/// A fully resolved experiment: model + sharing configuration plus
/// optional run defaults carried by the config file.
struct ExperimentConfig {
    ModelSpec model;
    SharingConfig sharing;
    std::optional<double> horizon;
    std::optional<double> warmup;
    std::optional<std::uint64_t> seed;
    std::optional<double> grid_step;
    std::optional<InitialConditions> initial;
};

/// Load a JSON experiment config. Trace backgrounds may inline their
/// series or reference a `t,r1,r2` CSV (resolved relative to the config
/// file); trace models must carry the unit labels
/// {"power":"MW","energy":"MWh","period":"min"}.
ExperimentConfig load_config(const std::string& path);

/// Serialize to JSON. Trace series are embedded inline so the output is
/// self-contained; load_config(save) round-trips the model exactly.
std::string config_to_json(const ExperimentConfig& config);
void save_config(const ExperimentConfig& config, const std::string& path);

ExperimentConfig parse_config_json(const std::string& text,
                                   const std::string& base_dir = ".");

/// Bundled toy models: two independent unit-rate two-state chains,
/// B1 = B2 = 10, c = 1.5, full sharing by default.
///   toy-symmetric  r1, r2 in {-1.5, 2}
///   toy-asym1      r2 hi value 2.15
///   toy-asym2      r2 hi value 2.5
std::vector<std::string> preset_names();
bool is_preset(const std::string& name);
ExperimentConfig make_preset(const std::string& name);

/// Load from a file path or a preset name (presets win only when the
/// path does not exist).
ExperimentConfig load_config_or_preset(const std::string& path_or_name);

} // namespace esim
