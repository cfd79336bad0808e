#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "covdiff/commands.hpp"
#include "covdiff/config.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
};

covdiff::cli::CommandContext make_context(const GlobalOptions& options) {
  covdiff::cli::CommandContext ctx;
  const std::filesystem::path config_path(options.config_path);
  ctx.config = covdiff::cli::load_config(config_path);
  ctx.config_dir = config_path.has_parent_path() ? config_path.parent_path()
                                                 : std::filesystem::path(".");
  if (!options.out_dir.empty()) ctx.out_dir = options.out_dir;
  ctx.seed_override = options.seed;
  ctx.tol_override = options.tol;
  return ctx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariant collapse dynamics laboratory"};
  app.require_subcommand(1);

  GlobalOptions options;
  app.add_option("--config", options.config_path, "run configuration file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  app.add_option("--out", options.out_dir, "directory for output artifacts");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "override the config seed");
  double tol_value = 0.0;
  auto* tol_opt = app.add_option("--tol", tol_value, "override the config tolerance");

  int (*command)(const covdiff::cli::CommandContext&) = nullptr;
  const auto add_command = [&](const std::string& name, const std::string& help,
                               int (*fn)(const covdiff::cli::CommandContext&)) {
    auto* sub = app.add_subcommand(name, help);
    sub->fallthrough();  // global flags may follow the subcommand name
    sub->callback([&command, fn] { command = fn; });
  };
  add_command("verify-channel", "check trace preservation, covariance and class",
              covdiff::cli::cmd_verify_channel);
  add_command("diffuse", "apply a channel repeatedly and track momentum moments",
              covdiff::cli::cmd_diffuse);
  add_command("theorem-scan",
              "classify random channels structurally and by measured spread change",
              covdiff::cli::cmd_theorem_scan);
  add_command("lindblad-evolve", "integrate a master equation and track moments",
              covdiff::cli::cmd_lindblad_evolve);
  add_command("unravel", "average stochastic trajectories against the exact map",
              covdiff::cli::cmd_unravel);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (seed_opt->count() > 0) options.seed = seed_value;
    if (tol_opt->count() > 0) options.tol = tol_value;
    return command(make_context(options));
  } catch (const covdiff::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
