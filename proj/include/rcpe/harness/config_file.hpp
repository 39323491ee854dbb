#pragma once

#include <map>
#include <string>

#include "rcpe/harness/experiment.hpp"

namespace rcpe {

/// Flat key = value settings; '#' starts a comment, later keys override
/// earlier ones.
std::map<std::string, std::string> read_key_values(const std::string& path);

/// Apply one setting to an experiment. Unknown keys and malformed values
/// raise InvalidConfig.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Build an experiment from settings: the plant key selects the reference
/// configuration, every other key overrides one field of it.
ExperimentConfig build_experiment(const std::map<std::string, std::string>& settings);

ExperimentConfig make_default_experiment(PlantId plant);

}  // namespace rcpe
