#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "experiments.hpp"

namespace predisso {

struct RunOptions {
    std::optional<double> theta;
    std::optional<int> nu;
    std::string times;  // "t0:t1:n" or "t0:t1:n:log"; empty = default grid
};

// Executes one CLI-level command against a configuration. When output_dir is
// nonempty the command's files (JSON, CSV) are written there atomically, each
// embedding the config hash. The returned JSON is the command summary.
// Supported commands: validate spectrum resonances evolve compare sweep accept.
nlohmann::json run_command(const ModelConfig& cfg, const std::string& command,
                           const RunOptions& opts, const std::string& output_dir);

std::vector<double> parse_times(const std::string& spec);

}  // namespace predisso
