#pragma once

// YAML configuration files. Top-level tables: `dgp`, `learner`, `sweep`,
// and experiment scalars (`name`, `reps`, `tests`, `alpha`, `K`, `seed`).
// Unknown keys and bad values raise ParseError with the line number.

#include "clit/harness.hpp"

#include <filesystem>
#include <string>

namespace clit {

DgpConfig parse_dgp_config(const std::string& yaml_text);
LearnerConfig parse_learner_config(const std::string& yaml_text);
ExperimentSpec parse_experiment_spec(const std::string& yaml_text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace clit
