#pragma once

// Structured-text run configuration: flat `key value` lines plus one
// two-space-indented `task` block. A file fully determines a run; unknown
// or malformed lines fail with their line number.

#include "tropa/train.hpp"

#include <iosfwd>
#include <string>

namespace trop {

/// ConfigError with a "line N:" prefix on structural problems.
TrainConfig parse_train_config(std::istream& in);
TrainConfig parse_train_config_file(const std::string& path);

/// Full key set, round-trips through parse_train_config.
std::string format_train_config(const TrainConfig& cfg);

}  // namespace trop
