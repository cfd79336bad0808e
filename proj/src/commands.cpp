#include "covdiff/commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "covdiff/channel_io.hpp"
#include "covdiff/config.hpp"
#include "covdiff/diagnostics.hpp"
#include "covdiff/format.hpp"
#include "covdiff/lindblad.hpp"
#include "covdiff/random_channels.hpp"
#include "covdiff/rng.hpp"
#include "covdiff/unraveling.hpp"

namespace covdiff::cli {

using nlohmann::json;

namespace {

constexpr double kCovarianceTol = 1e-10;
constexpr double kMeasuredTol = 1e-12;     // Δ/d threshold for measured classes
constexpr double kOffCenterTol = 1e-10;    // P = delta reconstruction threshold

void write_file(const std::filesystem::path& dir, const std::string& name,
                const std::string& content) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = dir / name;
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

void emit_report(const CommandContext& ctx, const std::string& name, const json& report) {
  const std::string text = report.dump(2) + "\n";
  std::cout << text;
  if (ctx.out_dir.has_value()) write_file(*ctx.out_dir, name, text);
}

void emit_artifact(const CommandContext& ctx, const std::string& name,
                   const std::string& content) {
  if (ctx.out_dir.has_value()) write_file(*ctx.out_dir, name, content);
}

std::uint64_t resolve_seed(const CommandContext& ctx, std::uint64_t fallback) {
  if (ctx.seed_override.has_value()) return *ctx.seed_override;
  if (ctx.config.contains("seed")) {
    const json& value = ctx.config.at("seed");
    if (!value.is_number_integer()) throw ConfigError("config.seed must be an integer");
    return value.get<std::uint64_t>();
  }
  return fallback;
}

double resolve_tol(const CommandContext& ctx, double fallback) {
  if (ctx.tol_override.has_value()) return *ctx.tol_override;
  if (ctx.config.contains("tol")) {
    const json& value = ctx.config.at("tol");
    if (!value.is_number()) throw ConfigError("config.tol must be a number");
    return value.get<double>();
  }
  return fallback;
}

long require_root_int(const CommandContext& ctx, const char* key) {
  if (!ctx.config.contains(key)) throw ConfigError("config is missing '" + std::string(key) + "'");
  const json& value = ctx.config.at(key);
  if (!value.is_number_integer()) {
    throw ConfigError("config." + std::string(key) + " must be an integer");
  }
  return value.get<long>();
}

long optional_root_int(const CommandContext& ctx, const char* key, long fallback) {
  if (!ctx.config.contains(key)) return fallback;
  return require_root_int(ctx, key);
}

double require_root_double(const CommandContext& ctx, const char* key) {
  if (!ctx.config.contains(key)) throw ConfigError("config is missing '" + std::string(key) + "'");
  const json& value = ctx.config.at(key);
  if (!value.is_number()) throw ConfigError("config." + std::string(key) + " must be a number");
  return value.get<double>();
}

const json& require_root(const CommandContext& ctx, const char* key) {
  if (!ctx.config.contains(key)) throw ConfigError("config is missing '" + std::string(key) + "'");
  return ctx.config.at(key);
}

BoxLattice root_lattice(const CommandContext& ctx) {
  return build_lattice(require_root(ctx, "lattice"));
}

// Deterministic displacement ladder: component a of displacement j is
// box_length * frac((j + 1) * irr_a) with irrational multipliers, so the
// probes never align with the lattice period.
std::vector<std::array<double, 3>> displacement_set(const BoxLattice& lattice, int count) {
  constexpr double kIrrational[3] = {0.61803398874989485, 0.41421356237309515,
                                     0.14159265358979312};
  std::vector<std::array<double, 3>> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int j = 0; j < count; ++j) {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int a = 0; a < lattice.dim(); ++a) {
      const double scaled = (j + 1) * kIrrational[a];
      x[static_cast<std::size_t>(a)] =
          lattice.box_length() * (scaled - std::floor(scaled));
    }
    out.push_back(x);
  }
  return out;
}

std::string class_label(ChannelClass cls) { return to_string(cls); }

double fit_slope(std::span<const double> t, std::span<const double> y) {
  const double n = static_cast<double>(t.size());
  double t_mean = 0.0;
  double y_mean = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    t_mean += t[i];
    y_mean += y[i];
  }
  t_mean /= n;
  y_mean /= n;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    num += (t[i] - t_mean) * (y[i] - y_mean);
    den += (t[i] - t_mean) * (t[i] - t_mean);
  }
  return num / den;
}

}  // namespace

int cmd_verify_channel(const CommandContext& ctx) {
  static constexpr const char* kKeys[] = {"lattice", "channel", "seed", "tol", "displacements"};
  check_keys(ctx.config, kKeys, "config");
  const BoxLattice lattice = root_lattice(ctx);
  const double class_tol = resolve_tol(ctx, 1e-9);
  const int n_displacements = static_cast<int>(optional_root_int(ctx, "displacements", 16));
  if (n_displacements < 1) throw ConfigError("config.displacements must be positive");
  const json& channel_block = require_root(ctx, "channel");

  json report;
  std::optional<CovariantChannel> channel;
  if (channel_block.is_object() && channel_block.value("kind", "") == "file") {
    // Lenient path so a file that breaks trace preservation is reported as
    // a failed check instead of a configuration error.
    static constexpr const char* kFileKeys[] = {"kind", "path"};
    check_keys(channel_block, kFileKeys, "channel(file)");
    const std::filesystem::path raw_path(channel_block.at("path").get<std::string>());
    const std::filesystem::path path =
        raw_path.is_absolute() ? raw_path : ctx.config_dir / raw_path;
    io::RawChannelData raw = [&] {
      try {
        return io::load_channel_raw(path);
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    }();
    if (!(raw.lattice == lattice)) {
      throw ConfigError("channel(file): file lattice does not match the config lattice");
    }
    Eigen::VectorXd totals = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(
        lattice.basis_size()));
    for (const TransferBlock& block : raw.blocks) totals += block.gains.cwiseAbs2();
    report["completeness_max_dev"] = (totals.array() - 1.0).abs().maxCoeff();
    try {
      channel.emplace(raw.lattice, raw.blocks);
    } catch (const std::invalid_argument& e) {
      report["cptp_error"] = e.what();
    }
  } else {
    channel = build_channel(channel_block, lattice, ctx.config_dir);
    report["completeness_max_dev"] = channel->completeness_deviation();
  }

  bool pass = channel.has_value();
  report["cptp"] = channel.has_value();
  if (channel.has_value()) {
    const auto displacements = displacement_set(lattice, n_displacements);
    const double cov_dev = covariance_check(densify(*channel), displacements);
    report["covariance_max_dev"] = cov_dev;
    report["class"] = class_label(classify_channel(*channel, class_tol));
    pass = pass && cov_dev <= kCovarianceTol;
  } else {
    report["covariance_max_dev"] = nullptr;
    report["class"] = nullptr;
  }
  report["pass"] = pass;
  emit_report(ctx, "verify_channel.json", report);
  return pass ? 0 : 1;
}

int cmd_diffuse(const CommandContext& ctx) {
  static constexpr const char* kKeys[] = {"lattice", "channel", "state", "steps", "seed", "tol"};
  check_keys(ctx.config, kKeys, "config");
  const BoxLattice lattice = root_lattice(ctx);
  const double class_tol = resolve_tol(ctx, 1e-9);
  const long steps = require_root_int(ctx, "steps");
  if (steps < 1) throw ConfigError("config.steps must be positive");
  const CovariantChannel channel =
      build_channel(require_root(ctx, "channel"), lattice, ctx.config_dir);
  DensityMatrix rho = build_state(require_root(ctx, "state"), lattice);
  const ChannelClass cls = classify_channel(channel, class_tol);

  std::ostringstream csv;
  csv << "step";
  for (int a = 0; a < lattice.dim(); ++a) {
    csv << ",mean_p_" << a << ",spread_p_" << a << ",d_" << a << ",D_" << a << ",delta_" << a;
  }
  csv << '\n';

  std::vector<std::vector<double>> spreads(static_cast<std::size_t>(lattice.dim()));
  double max_abs_d = 0.0;
  for (long s = 0; s <= steps; ++s) {
    csv << s;
    for (int a = 0; a < lattice.dim(); ++a) {
      const double mean = mean_momentum(rho, a);
      const double spread = momentum_spread(rho, a);
      const AxisDiffusion diff = spread_change_full(channel, rho, a);
      spreads[static_cast<std::size_t>(a)].push_back(spread);
      max_abs_d = std::max(max_abs_d, std::abs(diff.d));
      csv << ',' << format_float(mean) << ',' << format_float(spread) << ','
          << format_float(diff.d) << ',' << format_float(diff.D) << ','
          << format_float(diff.delta);
    }
    csv << '\n';
    if (s < steps) rho = channel.apply(rho);
  }

  json report;
  report["class"] = class_label(cls);
  report["steps"] = steps;
  bool pass = true;
  if (cls == ChannelClass::Diffusive && max_abs_d <= 1e-12) {
    bool monotone = true;
    for (const auto& series : spreads) {
      for (std::size_t i = 1; i < series.size(); ++i) {
        if (series[i] - series[i - 1] < -1e-12) monotone = false;
      }
    }
    report["monotone_spread"] = monotone;
    pass = monotone;
  } else {
    report["monotone_spread"] = nullptr;
  }
  report["pass"] = pass;
  emit_artifact(ctx, "diffuse.csv", csv.str());
  emit_report(ctx, "diffuse.json", report);
  return pass ? 0 : 1;
}

int cmd_theorem_scan(const CommandContext& ctx) {
  static constexpr const char* kKeys[] = {"lattice",      "n_diagonal", "n_diffusive",
                                          "seed",         "tol",        "n_probes",
                                          "max_transfer", "min_off_fraction"};
  check_keys(ctx.config, kKeys, "config");
  const BoxLattice lattice = root_lattice(ctx);
  const double class_tol = resolve_tol(ctx, 1e-9);
  const long n_diagonal = optional_root_int(ctx, "n_diagonal", 20);
  const long n_diffusive = optional_root_int(ctx, "n_diffusive", 20);
  if (n_diagonal < 0 || n_diffusive < 0) throw ConfigError("channel counts must be nonnegative");
  const std::uint64_t seed = resolve_seed(ctx, 1);
  const int n_probes = static_cast<int>(optional_root_int(ctx, "n_probes", 20));

  DiffusiveChannelOptions options;
  options.max_transfer = static_cast<int>(optional_root_int(ctx, "max_transfer", 1));
  options.min_off_fraction = 0.2;
  if (ctx.config.contains("min_off_fraction")) {
    options.min_off_fraction = require_root_double(ctx, "min_off_fraction");
  }

  const auto probes = probe_suite(lattice, seed ^ 0x9E3779B97F4A7C15ull, n_probes);

  json confusion;
  for (const char* generated : {"diagonal", "diffusive"}) {
    confusion[generated] = {{"diagonal", 0}, {"boost", 0}, {"diffusive", 0}};
  }
  long misclassifications = 0;
  long p_delta_violations = 0;
  std::vector<std::string> warnings;
  if (class_tol > 0.01) {
    warnings.push_back("classification tolerance " + format_float(class_tol) +
                       " exceeds 0.01; structural classes are degenerate");
  }

  const auto measured_label = [&](const CovariantChannel& channel) {
    double max_delta = 0.0;
    double max_d = 0.0;
    for (const auto& [id, rho] : probes) {
      for (int a = 0; a < lattice.dim(); ++a) {
        const AxisDiffusion diff = spread_change_full(channel, rho, a);
        max_delta = std::max(max_delta, std::abs(diff.delta));
        max_d = std::max(max_d, std::abs(diff.d));
      }
    }
    if (max_delta <= kMeasuredTol && max_d <= kMeasuredTol) return std::string("diagonal");
    if (max_delta <= kMeasuredTol) return std::string("boost");
    return std::string("diffusive");
  };

  const auto structural_label = [&](ChannelClass cls) {
    switch (cls) {
      case ChannelClass::MomentumDiagonal: return std::string("diagonal");
      case ChannelClass::PureBoost: return std::string("boost");
      case ChannelClass::Diffusive: break;
    }
    return std::string("diffusive");
  };

  const auto scan_one = [&](const CovariantChannel& channel, const std::string& generated) {
    const std::string structural = structural_label(classify_channel(channel, class_tol));
    const std::string measured = measured_label(channel);
    confusion[generated][measured] = confusion[generated][measured].get<long>() + 1;
    if (structural != measured) ++misclassifications;
    if (measured == "diagonal") {
      // Measured-zero spread change must pin the whole transfer table to
      // the zero transfer.
      for (std::size_t i = 0; i < lattice.basis_size(); ++i) {
        const auto dist = transfer_distribution(channel, lattice.unflatten(i));
        if (dist.off_center_mass() >= kOffCenterTol) {
          ++p_delta_violations;
          break;
        }
      }
    }
  };

  for (long i = 0; i < n_diagonal; ++i) {
    RandomStream rng = RandomStream::substream(seed, static_cast<std::uint64_t>(i));
    scan_one(random_momentum_diagonal_channel(lattice, 1 + static_cast<int>(i % 3), rng),
             "diagonal");
  }
  for (long j = 0; j < n_diffusive; ++j) {
    RandomStream rng = RandomStream::substream(seed, 0x100000ull + static_cast<std::uint64_t>(j));
    DiffusiveChannelOptions local = options;
    local.momentum_conserving = (j % 2 == 0);
    scan_one(random_diffusive_channel(lattice, local, rng), "diffusive");
  }

  const bool pass = misclassifications == 0 && p_delta_violations == 0;
  json report;
  report["n_diagonal"] = n_diagonal;
  report["n_diffusive"] = n_diffusive;
  report["seed"] = seed;
  report["tol"] = class_tol;
  report["confusion"] = confusion;
  report["misclassifications"] = misclassifications;
  report["p_delta_violations"] = p_delta_violations;
  report["warnings"] = warnings;
  report["pass"] = pass;
  emit_report(ctx, "theorem_scan.json", report);
  return pass ? 0 : 1;
}

int cmd_lindblad_evolve(const CommandContext& ctx) {
  static constexpr const char* kKeys[] = {"lattice", "lindblad", "state",
                                          "dt",      "steps",    "seed",
                                          "tol"};
  check_keys(ctx.config, kKeys, "config");
  const BoxLattice lattice = root_lattice(ctx);
  const double dt = require_root_double(ctx, "dt");
  const long steps = require_root_int(ctx, "steps");
  if (!(dt > 0.0)) throw ConfigError("config.dt must be positive");
  if (steps < 1) throw ConfigError("config.steps must be positive");
  const json& gen_block = require_root(ctx, "lindblad");
  const std::string kind = gen_block.value("kind", "");
  const LindbladGenerator gen = build_generator(gen_block, lattice, ctx.config_dir);
  const DensityMatrix rho0 = build_state(require_root(ctx, "state"), lattice);

  json report;
  report["kind"] = kind;
  report["dt"] = dt;
  report["steps"] = steps;

  std::optional<EvolutionResult> evolved;
  try {
    evolved = evolve(gen, rho0, dt, static_cast<int>(steps));
  } catch (const std::runtime_error& e) {
    // Losing positivity or trace mid-run is a failed check, not a bad config.
    report["error"] = e.what();
    report["pass"] = false;
    emit_report(ctx, "lindblad_evolve.json", report);
    return 1;
  }
  const EvolutionResult& result = *evolved;

  std::ostringstream csv;
  csv << "t,trace,min_eig";
  for (int a = 0; a < lattice.dim(); ++a) csv << ",mean_p_" << a << ",spread_p_" << a;
  csv << '\n';
  for (const TrajectoryPoint& point : result.points) {
    csv << format_float(point.t) << ',' << format_float(point.trace) << ','
        << format_float(point.min_eig);
    for (int a = 0; a < lattice.dim(); ++a) {
      csv << ',' << format_float(point.mean_p[static_cast<std::size_t>(a)]) << ','
          << format_float(point.spread_p[static_cast<std::size_t>(a)]);
    }
    csv << '\n';
  }

  const MomentRates rates = moment_rates(gen, rho0);
  report["initial_dp2"] = rates.dp2;

  bool pass = true;
  const ZeroDiffusionResult reduction = zero_diffusion_reduce(gen, kMeasuredTol);
  if (reduction.is_momentum_diagonal) {
    // No momentum is moved, so the spread must stay put.
    double max_drift = 0.0;
    for (int a = 0; a < lattice.dim(); ++a) {
      const double start = result.points.front().spread_p[static_cast<std::size_t>(a)];
      for (const TrajectoryPoint& point : result.points) {
        max_drift =
            std::max(max_drift, std::abs(point.spread_p[static_cast<std::size_t>(a)] - start));
      }
    }
    report["spread_constant"] = max_drift <= 1e-9;
    report["spread_max_drift"] = max_drift;
    report["fitted_p2_slope"] = nullptr;
    report["slope_match"] = nullptr;
    pass = max_drift <= 1e-9;
  } else if (kind == "csl_like") {
    std::vector<double> times;
    for (const TrajectoryPoint& point : result.points) times.push_back(point.t);
    std::vector<double> slopes;
    bool match = true;
    for (int a = 0; a < lattice.dim(); ++a) {
      std::vector<double> p2;
      for (const TrajectoryPoint& point : result.points) {
        const double mean = point.mean_p[static_cast<std::size_t>(a)];
        p2.push_back(point.spread_p[static_cast<std::size_t>(a)] + mean * mean);
      }
      const double slope = fit_slope(times, p2);
      slopes.push_back(slope);
      const double expected = rates.dp2[static_cast<std::size_t>(a)];
      if (std::abs(slope - expected) > 1e-6 * std::abs(expected)) match = false;
    }
    report["fitted_p2_slope"] = slopes;
    report["slope_match"] = match;
    report["spread_constant"] = nullptr;
    pass = match;
  } else {
    report["fitted_p2_slope"] = nullptr;
    report["slope_match"] = nullptr;
    report["spread_constant"] = nullptr;
  }
  report["pass"] = pass;
  emit_artifact(ctx, "trajectory.csv", csv.str());
  emit_report(ctx, "lindblad_evolve.json", report);
  return pass ? 0 : 1;
}

int cmd_unravel(const CommandContext& ctx) {
  static constexpr const char* kKeys[] = {"lattice",        "channel", "ensemble",
                                          "n_trajectories", "n_steps", "seed",
                                          "outcomes",       "tol"};
  check_keys(ctx.config, kKeys, "config");
  const BoxLattice lattice = root_lattice(ctx);
  const CovariantChannel channel =
      build_channel(require_root(ctx, "channel"), lattice, ctx.config_dir);
  const auto ensemble = build_pure_ensemble(require_root(ctx, "ensemble"), lattice);

  TrajectoryConfig cfg;
  cfg.seed = resolve_seed(ctx, 1);
  cfg.n_trajectories = static_cast<int>(require_root_int(ctx, "n_trajectories"));
  cfg.n_steps = static_cast<int>(optional_root_int(ctx, "n_steps", 1));
  bool want_outcomes = false;
  if (ctx.config.contains("outcomes")) {
    const json& flag = ctx.config.at("outcomes");
    if (!flag.is_boolean()) throw ConfigError("config.outcomes must be a boolean");
    want_outcomes = flag.get<bool>();
  }

  std::vector<OutcomeRecord> log;
  const EnsembleAverage result =
      ensemble_average(channel, cfg, ensemble, want_outcomes ? &log : nullptr);

  DensityMatrix exact = mix(ensemble);
  for (int s = 0; s < cfg.n_steps; ++s) exact = channel.apply(exact);
  const double td = trace_distance(result.average, exact);
  const double bound = std::max(5.0 * result.error_estimate, 1e-9);
  const bool pass = td <= bound;

  json report;
  report["n_trajectories"] = cfg.n_trajectories;
  report["n_steps"] = cfg.n_steps;
  report["seed"] = cfg.seed;
  report["trace_distance"] = td;
  report["error_estimate"] = result.error_estimate;
  report["pass"] = pass;

  if (ctx.out_dir.has_value()) {
    std::filesystem::create_directories(*ctx.out_dir);
    io::save_density(result.average, *ctx.out_dir / "average_state.txt");
    if (want_outcomes) {
      std::ostringstream csv;
      csv << "trajectory,step,kraus_id";
      for (int a = 0; a < lattice.dim(); ++a) csv << ",q_" << a;
      csv << '\n';
      for (const OutcomeRecord& record : log) {
        csv << record.trajectory << ',' << record.step << ',' << record.outcome.kraus_id;
        for (int a = 0; a < lattice.dim(); ++a) csv << ',' << record.outcome.transfer[a];
        csv << '\n';
      }
      write_file(*ctx.out_dir, "outcomes.csv", csv.str());
    }
  }
  emit_report(ctx, "unravel.json", report);
  return pass ? 0 : 1;
}

}  // namespace covdiff::cli
