#include "covdiff/config.hpp"

#include <cmath>
#include <fstream>

#include "covdiff/channel_io.hpp"
#include "covdiff/random_channels.hpp"
#include "covdiff/rng.hpp"

namespace covdiff::cli {

using nlohmann::json;

namespace {

const json& require(const json& block, const char* key, const std::string& context) {
  if (!block.is_object()) throw ConfigError(context + " must be an object");
  const auto it = block.find(key);
  if (it == block.end()) throw ConfigError(context + " is missing '" + key + "'");
  return *it;
}

double require_double(const json& block, const char* key, const std::string& context) {
  const json& value = require(block, key, context);
  if (!value.is_number()) throw ConfigError(context + "." + key + " must be a number");
  return value.get<double>();
}

long require_int(const json& block, const char* key, const std::string& context) {
  const json& value = require(block, key, context);
  if (!value.is_number_integer()) throw ConfigError(context + "." + key + " must be an integer");
  return value.get<long>();
}

std::string require_string(const json& block, const char* key, const std::string& context) {
  const json& value = require(block, key, context);
  if (!value.is_string()) throw ConfigError(context + "." + key + " must be a string");
  return value.get<std::string>();
}

double optional_double(const json& block, const char* key, double fallback,
                       const std::string& context) {
  if (!block.contains(key)) return fallback;
  return require_double(block, key, context);
}

long optional_int(const json& block, const char* key, long fallback, const std::string& context) {
  if (!block.contains(key)) return fallback;
  return require_int(block, key, context);
}

MomentumIndex require_index(const json& block, const char* key, const BoxLattice& lattice,
                            const std::string& context) {
  const json& value = require(block, key, context);
  if (!value.is_array() || value.size() != static_cast<std::size_t>(lattice.dim())) {
    throw ConfigError(context + "." + key + " must be an array of " +
                      std::to_string(lattice.dim()) + " integers");
  }
  MomentumIndex n = MomentumIndex::zero(lattice.dim());
  for (int a = 0; a < lattice.dim(); ++a) {
    if (!value[static_cast<std::size_t>(a)].is_number_integer()) {
      throw ConfigError(context + "." + key + " components must be integers");
    }
    n[a] = value[static_cast<std::size_t>(a)].get<int>();
  }
  return n;
}

std::array<double, 3> require_vector(const json& block, const char* key,
                                     const BoxLattice& lattice, const std::string& context) {
  const json& value = require(block, key, context);
  if (!value.is_array() || value.size() != static_cast<std::size_t>(lattice.dim())) {
    throw ConfigError(context + "." + key + " must be an array of " +
                      std::to_string(lattice.dim()) + " numbers");
  }
  std::array<double, 3> x{0.0, 0.0, 0.0};
  for (int a = 0; a < lattice.dim(); ++a) {
    const json& entry = value[static_cast<std::size_t>(a)];
    if (!entry.is_number()) throw ConfigError(context + "." + key + " components must be numbers");
    x[static_cast<std::size_t>(a)] = entry.get<double>();
  }
  return x;
}

Complex parse_amplitude(const json& value, const std::string& context) {
  if (value.is_number()) return Complex(value.get<double>(), 0.0);
  if (value.is_array() && value.size() == 2 && value[0].is_number() && value[1].is_number()) {
    return Complex(value[0].get<double>(), value[1].get<double>());
  }
  throw ConfigError(context + ".amplitude must be a number or a [re, im] pair");
}

std::filesystem::path resolve(const std::string& raw, const std::filesystem::path& base_dir) {
  const std::filesystem::path given(raw);
  return given.is_absolute() ? given : base_dir / given;
}

template <typename Fn>
auto guard(const std::string& context, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(context + ": " + e.what());
  }
}

}  // namespace

json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void check_keys(const json& block, std::span<const char* const> allowed,
                const std::string& context) {
  if (!block.is_object()) throw ConfigError(context + " must be an object");
  for (const auto& [key, value] : block.items()) {
    bool known = false;
    for (const char* candidate : allowed) {
      if (key == candidate) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError(context + " has unknown key '" + key + "'");
  }
}

BoxLattice build_lattice(const json& block) {
  static constexpr const char* kKeys[] = {"dim", "n_max", "box_length", "hbar"};
  check_keys(block, kKeys, "lattice");
  const long dim = require_int(block, "dim", "lattice");
  const long n_max = require_int(block, "n_max", "lattice");
  const double box_length = require_double(block, "box_length", "lattice");
  const double hbar = optional_double(block, "hbar", 1.0, "lattice");
  return guard("lattice", [&] {
    return BoxLattice(static_cast<int>(dim), static_cast<int>(n_max), box_length, hbar);
  });
}

CovariantChannel build_channel(const json& block, const BoxLattice& lattice,
                               const std::filesystem::path& base_dir) {
  const std::string kind = require_string(block, "kind", "channel");
  const std::string context = "channel(" + kind + ")";
  return guard(context, [&]() -> CovariantChannel {
    if (kind == "identity") {
      static constexpr const char* kKeys[] = {"kind"};
      check_keys(block, kKeys, context);
      return build_identity(lattice);
    }
    if (kind == "boost") {
      static constexpr const char* kKeys[] = {"kind", "a"};
      check_keys(block, kKeys, context);
      return build_boost(lattice, require_vector(block, "a", lattice, context));
    }
    if (kind == "free") {
      static constexpr const char* kKeys[] = {"kind", "t", "mass"};
      check_keys(block, kKeys, context);
      return build_free_evolution(lattice, require_double(block, "t", context),
                                  require_double(block, "mass", context));
    }
    if (kind == "grw") {
      static constexpr const char* kKeys[] = {"kind", "r_c", "strength"};
      check_keys(block, kKeys, context);
      return build_grw(lattice, require_double(block, "r_c", context),
                       optional_double(block, "strength", 1.0, context));
    }
    if (kind == "momentum_diagonal") {
      static constexpr const char* kKeys[] = {"kind", "c", "phi"};
      check_keys(block, kKeys, context);
      const json& c_rows = require(block, "c", context);
      if (!c_rows.is_array() || c_rows.empty()) {
        throw ConfigError(context + ".c must be a nonempty array of rows");
      }
      const auto basis = static_cast<Eigen::Index>(lattice.basis_size());
      const auto rows = static_cast<Eigen::Index>(c_rows.size());
      Eigen::MatrixXd c(rows, basis);
      Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(rows, basis);
      for (Eigen::Index k = 0; k < rows; ++k) {
        const json& row = c_rows[static_cast<std::size_t>(k)];
        if (!row.is_array() || row.size() != static_cast<std::size_t>(basis)) {
          throw ConfigError(context + ".c rows must have one entry per mode");
        }
        for (Eigen::Index n = 0; n < basis; ++n) {
          c(k, n) = row[static_cast<std::size_t>(n)].get<double>();
        }
      }
      if (block.contains("phi")) {
        const json& phi_rows = block.at("phi");
        if (!phi_rows.is_array() || phi_rows.size() != static_cast<std::size_t>(rows)) {
          throw ConfigError(context + ".phi must match the shape of c");
        }
        for (Eigen::Index k = 0; k < rows; ++k) {
          const json& row = phi_rows[static_cast<std::size_t>(k)];
          if (!row.is_array() || row.size() != static_cast<std::size_t>(basis)) {
            throw ConfigError(context + ".phi must match the shape of c");
          }
          for (Eigen::Index n = 0; n < basis; ++n) {
            phi(k, n) = row[static_cast<std::size_t>(n)].get<double>();
          }
        }
      }
      return build_momentum_diagonal(lattice, c, phi);
    }
    if (kind == "random_momentum_diagonal") {
      static constexpr const char* kKeys[] = {"kind", "num_kraus", "seed"};
      check_keys(block, kKeys, context);
      RandomStream rng(static_cast<std::uint64_t>(require_int(block, "seed", context)));
      return random_momentum_diagonal_channel(
          lattice, static_cast<int>(require_int(block, "num_kraus", context)), rng);
    }
    if (kind == "random_diffusive") {
      static constexpr const char* kKeys[] = {"kind", "max_transfer", "min_off_fraction",
                                              "momentum_conserving", "seed"};
      check_keys(block, kKeys, context);
      DiffusiveChannelOptions options;
      options.max_transfer =
          static_cast<int>(optional_int(block, "max_transfer", 1, context));
      options.min_off_fraction = optional_double(block, "min_off_fraction", 0.2, context);
      if (block.contains("momentum_conserving")) {
        const json& flag = block.at("momentum_conserving");
        if (!flag.is_boolean()) {
          throw ConfigError(context + ".momentum_conserving must be a boolean");
        }
        options.momentum_conserving = flag.get<bool>();
      }
      RandomStream rng(static_cast<std::uint64_t>(require_int(block, "seed", context)));
      return random_diffusive_channel(lattice, options, rng);
    }
    if (kind == "boost_family") {
      static constexpr const char* kKeys[] = {"kind", "gamma", "mode", "boundary"};
      check_keys(block, kKeys, context);
      const std::string mode = require_string(block, "mode", context);
      BoostMode boost_mode;
      if (mode == "constant") {
        boost_mode = BoostMode::Constant;
      } else if (mode == "reflecting") {
        boost_mode = BoostMode::Reflecting;
      } else {
        throw ConfigError(context + ".mode must be 'constant' or 'reflecting'");
      }
      BoundaryPolicy boundary = BoundaryPolicy::Reject;
      if (block.contains("boundary")) {
        const std::string value = require_string(block, "boundary", context);
        if (value == "wrap") {
          boundary = BoundaryPolicy::Wrap;
        } else if (value != "reject") {
          throw ConfigError(context + ".boundary must be 'reject' or 'wrap'");
        }
      }
      return build_boost_family(lattice, require_index(block, "gamma", lattice, context),
                                boost_mode, boundary);
    }
    if (kind == "file") {
      static constexpr const char* kKeys[] = {"kind", "path"};
      check_keys(block, kKeys, context);
      CovariantChannel channel =
          io::load_channel(resolve(require_string(block, "path", context), base_dir));
      if (!(channel.lattice() == lattice)) {
        throw ConfigError(context + ": file lattice does not match the config lattice");
      }
      return channel;
    }
    throw ConfigError("unknown channel kind '" + kind + "'");
  });
}

LindbladGenerator build_generator(const json& block, const BoxLattice& lattice,
                                  const std::filesystem::path& base_dir) {
  const std::string kind = require_string(block, "kind", "lindblad");
  const std::string context = "lindblad(" + kind + ")";
  return guard(context, [&]() -> LindbladGenerator {
    if (kind == "csl_like") {
      static constexpr const char* kKeys[] = {"kind", "r_c", "rate"};
      check_keys(block, kKeys, context);
      return build_csl_like(lattice, require_double(block, "r_c", context),
                            require_double(block, "rate", context));
    }
    if (kind == "zero") {
      static constexpr const char* kKeys[] = {"kind"};
      check_keys(block, kKeys, context);
      return build_momentum_diagonal_generator(
          lattice,
          Eigen::MatrixXcd::Zero(1, static_cast<Eigen::Index>(lattice.basis_size())));
    }
    if (kind == "random_momentum_diagonal") {
      static constexpr const char* kKeys[] = {"kind", "num_ops", "rate_scale", "seed"};
      check_keys(block, kKeys, context);
      RandomStream rng(static_cast<std::uint64_t>(require_int(block, "seed", context)));
      return random_momentum_diagonal_generator(
          lattice, static_cast<int>(require_int(block, "num_ops", context)),
          require_double(block, "rate_scale", context), rng);
    }
    if (kind == "file") {
      static constexpr const char* kKeys[] = {"kind", "path"};
      check_keys(block, kKeys, context);
      LindbladGenerator gen =
          io::load_generator(resolve(require_string(block, "path", context), base_dir));
      if (!(gen.lattice() == lattice)) {
        throw ConfigError(context + ": file lattice does not match the config lattice");
      }
      return gen;
    }
    throw ConfigError("unknown lindblad kind '" + kind + "'");
  });
}

PureState build_pure_state(const json& block, const BoxLattice& lattice) {
  const std::string kind = require_string(block, "kind", "state");
  const std::string context = "state(" + kind + ")";
  return guard(context, [&]() -> PureState {
    if (kind == "plane_wave") {
      static constexpr const char* kKeys[] = {"kind", "n"};
      check_keys(block, kKeys, context);
      return PureState::plane_wave(lattice, require_index(block, "n", lattice, context));
    }
    if (kind == "superposition") {
      static constexpr const char* kKeys[] = {"kind", "terms"};
      check_keys(block, kKeys, context);
      const json& terms = require(block, "terms", context);
      if (!terms.is_array() || terms.empty()) {
        throw ConfigError(context + ".terms must be a nonempty array");
      }
      std::vector<std::pair<Complex, MomentumIndex>> parsed;
      for (const json& term : terms) {
        static constexpr const char* kTermKeys[] = {"amplitude", "n"};
        check_keys(term, kTermKeys, context + ".terms[]");
        parsed.emplace_back(parse_amplitude(require(term, "amplitude", context), context),
                            require_index(term, "n", lattice, context));
      }
      return PureState::superposition(lattice, parsed);
    }
    throw ConfigError("unknown pure state kind '" + kind + "'");
  });
}

DensityMatrix build_state(const json& block, const BoxLattice& lattice) {
  const std::string kind = require_string(block, "kind", "state");
  if (kind == "mixture") {
    const std::string context = "state(mixture)";
    return guard(context, [&]() -> DensityMatrix {
      static constexpr const char* kKeys[] = {"kind", "components"};
      check_keys(block, kKeys, context);
      const json& components = require(block, "components", context);
      if (!components.is_array() || components.empty()) {
        throw ConfigError(context + ".components must be a nonempty array");
      }
      std::vector<std::pair<double, PureState>> ensemble;
      for (const json& component : components) {
        static constexpr const char* kComponentKeys[] = {"weight", "state"};
        check_keys(component, kComponentKeys, context + ".components[]");
        ensemble.emplace_back(require_double(component, "weight", context),
                              build_pure_state(require(component, "state", context), lattice));
      }
      return mix(ensemble);
    });
  }
  return from_pure(build_pure_state(block, lattice));
}

std::vector<std::pair<double, PureState>> build_pure_ensemble(const json& block,
                                                              const BoxLattice& lattice) {
  if (!block.is_array() || block.empty()) {
    throw ConfigError("ensemble must be a nonempty array");
  }
  std::vector<std::pair<double, PureState>> ensemble;
  for (const json& component : block) {
    static constexpr const char* kComponentKeys[] = {"weight", "state"};
    check_keys(component, kComponentKeys, "ensemble[]");
    ensemble.emplace_back(require_double(component, "weight", "ensemble[]"),
                          build_pure_state(require(component, "state", "ensemble[]"), lattice));
  }
  double total = 0.0;
  for (const auto& [w, state] : ensemble) total += w;
  if (std::abs(total - 1.0) > 1e-12) throw ConfigError("ensemble weights must sum to 1");
  return ensemble;
}

}  // namespace covdiff::cli
