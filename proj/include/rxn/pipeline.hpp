#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "rxn/config.hpp"

namespace rxn {

inline constexpr std::string_view kVersion = "0.1.0";

const std::vector<std::string>& command_names();

struct RunResult {
  std::vector<std::filesystem::path> outputs;
  std::filesystem::path manifest;
  std::vector<std::string> warnings;
};

// Runs one pipeline command. Outputs are buffered and only written, each
// atomically, once the command has succeeded; a manifest.<command>.json is
// written beside them last. Progress lines go to `log` when given.
RunResult run_command(std::string_view name, const Config& config, std::ostream* log = nullptr);

}  // namespace rxn
