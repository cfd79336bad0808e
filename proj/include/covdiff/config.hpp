#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "covdiff/channels.hpp"
#include "covdiff/lattice.hpp"
#include "covdiff/lindblad.hpp"
#include "covdiff/states.hpp"

namespace covdiff::cli {

// Anything wrong with the run configuration itself, as opposed to a failed
// physics check; maps to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json load_config(const std::filesystem::path& path);

// Rejects keys outside `allowed`; `context` names the block in the error.
void check_keys(const nlohmann::json& block, std::span<const char* const> allowed,
                const std::string& context);

BoxLattice build_lattice(const nlohmann::json& block);

// Channel kinds: identity, boost {a}, free {t, mass}, grw {r_c, strength},
// momentum_diagonal {c, phi}, random_momentum_diagonal {num_kraus, seed},
// random_diffusive {max_transfer, min_off_fraction, momentum_conserving,
// seed}, boost_family {gamma, mode, boundary}, file {path}.
CovariantChannel build_channel(const nlohmann::json& block, const BoxLattice& lattice,
                               const std::filesystem::path& base_dir);

// Generator kinds: csl_like {r_c, rate}, zero,
// random_momentum_diagonal {num_ops, rate_scale, seed}, file {path}.
LindbladGenerator build_generator(const nlohmann::json& block, const BoxLattice& lattice,
                                  const std::filesystem::path& base_dir);

// Pure-state kinds: plane_wave {n}, superposition {terms: [{amplitude, n}]}.
PureState build_pure_state(const nlohmann::json& block, const BoxLattice& lattice);

// Adds mixture {components: [{weight, state}]} on top of the pure kinds.
DensityMatrix build_state(const nlohmann::json& block, const BoxLattice& lattice);

// Array of {weight, state} with pure states; weights must sum to 1.
std::vector<std::pair<double, PureState>> build_pure_ensemble(const nlohmann::json& block,
                                                              const BoxLattice& lattice);

}  // namespace covdiff::cli
