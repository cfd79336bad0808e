#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "json.hpp"

namespace covdiff::cli {

struct CommandContext {
  nlohmann::json config;
  std::filesystem::path config_dir;  // base for relative paths in the config
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed_override;
  std::optional<double> tol_override;
};

// Each command prints its JSON summary to stdout and, when out_dir is set,
// writes the summary plus its data artifacts there.  Return value is the
// process exit code: 0 all checks passed, 1 a check failed.  Configuration
// problems throw ConfigError and map to exit code 2 in the driver.
int cmd_verify_channel(const CommandContext& ctx);
int cmd_diffuse(const CommandContext& ctx);
int cmd_theorem_scan(const CommandContext& ctx);
int cmd_lindblad_evolve(const CommandContext& ctx);
int cmd_unravel(const CommandContext& ctx);

}  // namespace covdiff::cli
