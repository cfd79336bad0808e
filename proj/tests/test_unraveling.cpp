#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "covdiff/channels.hpp"
#include "covdiff/diagnostics.hpp"
#include "covdiff/random_channels.hpp"
#include "covdiff/rng.hpp"
#include "covdiff/states.hpp"
#include "covdiff/unraveling.hpp"
#include "support/test_helpers.hpp"

using namespace covdiff;

namespace {

const BoxLattice kLat(1, 4, 2.0 * std::numbers::pi);

std::vector<std::pair<double, PureState>> plane_ensemble(const BoxLattice& lattice,
                                                         const MomentumIndex& n) {
  std::vector<std::pair<double, PureState>> ensemble;
  ensemble.emplace_back(1.0, PureState::plane_wave(lattice, n));
  return ensemble;
}

}  // namespace

TEST_CASE("identity channel produces a single deterministic outcome") {
  const CovariantChannel id = build_identity(kLat);
  RandomStream rng(1);
  const PureState psi = random_pure_state(kLat, rng);
  const auto [post, outcome] = step(psi, id, rng);
  CHECK(outcome.kraus_id == 0);
  CHECK(outcome.transfer == MomentumIndex::zero(1));
  CHECK((post.amplitudes() - psi.amplitudes()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("dephasing jumps fix plane waves up to a phase") {
  RandomStream rng(2);
  const CovariantChannel channel = random_momentum_diagonal_channel(kLat, 3, rng);
  const PureState plane = PureState::plane_wave(kLat, {2});
  for (int trial = 0; trial < 10; ++trial) {
    const auto [post, outcome] = step(plane, channel, rng);
    CHECK(outcome.transfer == MomentumIndex::zero(1));
    CHECK(std::abs(std::abs(post.amplitude({2})) - 1.0) < 1e-12);
  }
}

TEST_CASE("sampled transfers follow the channel's transfer table") {
  const BoxLattice lat(1, 8, 2.0 * std::numbers::pi);
  const CovariantChannel grw = build_grw(lat, 1.0);
  const TransferDistribution dist = transfer_distribution(grw, MomentumIndex::zero(1));
  const PureState plane = PureState::plane_wave(lat, MomentumIndex::zero(1));

  const int samples = 10000;
  RandomStream rng(20260815);
  std::array<long, 5> counts{};  // cells: q <= -2, -1, 0, +1, q >= +2
  for (int s = 0; s < samples; ++s) {
    const auto [post, outcome] = step(plane, grw, rng);
    const int q = outcome.transfer[0];
    if (q <= -2) {
      ++counts[0];
    } else if (q >= 2) {
      ++counts[4];
    } else {
      ++counts[static_cast<std::size_t>(q + 2)];
    }
  }

  const double p0 = dist.prob(MomentumIndex::zero(1));
  const double p1 = dist.prob({1});
  const double tail = (1.0 - p0 - 2.0 * p1) / 2.0;
  const std::array<double, 5> expected{samples * tail, samples * p1, samples * p0,
                                       samples * p1, samples * tail};
  // 0.999 quantile of chi^2 with 4 degrees of freedom
  CHECK(covdiff::testing::chi_square(counts, expected) < 18.47);
}

TEST_CASE("trajectories are bitwise reproducible") {
  const CovariantChannel grw = build_grw(kLat, 1.0);
  TrajectoryConfig cfg;
  cfg.seed = 77;
  cfg.n_steps = 3;
  cfg.n_trajectories = 50;
  const auto ensemble = plane_ensemble(kLat, {1});

  std::vector<OutcomeRecord> log_a;
  std::vector<OutcomeRecord> log_b;
  const EnsembleAverage a = ensemble_average(grw, cfg, ensemble, &log_a);
  const EnsembleAverage b = ensemble_average(grw, cfg, ensemble, &log_b);

  CHECK((a.average.matrix() - b.average.matrix()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.error_estimate == b.error_estimate);
  REQUIRE(log_a.size() == log_b.size());
  REQUIRE(log_a.size() == static_cast<std::size_t>(cfg.n_steps * cfg.n_trajectories));
  for (std::size_t i = 0; i < log_a.size(); ++i) {
    CHECK(log_a[i].trajectory == log_b[i].trajectory);
    CHECK(log_a[i].step == log_b[i].step);
    CHECK(log_a[i].outcome.kraus_id == log_b[i].outcome.kraus_id);
    CHECK(log_a[i].outcome.transfer == log_b[i].outcome.transfer);
  }

  // a different seed gives a different sample path
  cfg.seed = 78;
  std::vector<OutcomeRecord> log_c;
  ensemble_average(grw, cfg, ensemble, &log_c);
  bool any_differ = false;
  for (std::size_t i = 0; i < log_a.size(); ++i) {
    if (!(log_a[i].outcome.transfer == log_c[i].outcome.transfer)) any_differ = true;
  }
  CHECK(any_differ);
}

TEST_CASE("ensemble average approaches the deterministic channel output") {
  const CovariantChannel grw = build_grw(kLat, 1.0);
  TrajectoryConfig cfg;
  cfg.seed = 4242;
  cfg.n_steps = 1;
  cfg.n_trajectories = 2000;
  const auto ensemble = plane_ensemble(kLat, {0});

  const EnsembleAverage result = ensemble_average(grw, cfg, ensemble);
  const DensityMatrix exact = grw.apply(mix(ensemble));
  const double td = trace_distance(result.average, exact);
  CHECK(result.error_estimate < 0.2);
  CHECK(td <= 5.0 * result.error_estimate);
}

TEST_CASE("equivalent ensembles average to the same state") {
  RandomStream rng(9);
  const DensityMatrix rho = random_density_matrix(kLat, rng);
  const auto ensemble_a = covdiff::testing::equivalent_ensemble(rho, 12, rng);
  const auto ensemble_b = covdiff::testing::equivalent_ensemble(rho, 12, rng);

  // both decompositions reproduce rho exactly before any dynamics
  CHECK(trace_distance(mix(ensemble_a), rho) < 1e-12);
  CHECK(trace_distance(mix(ensemble_b), rho) < 1e-12);

  const CovariantChannel grw = build_grw(kLat, 1.0);
  TrajectoryConfig cfg;
  cfg.n_steps = 2;
  cfg.n_trajectories = 3000;
  cfg.seed = 11;
  const EnsembleAverage avg_a = ensemble_average(grw, cfg, ensemble_a);
  cfg.seed = 12;
  const EnsembleAverage avg_b = ensemble_average(grw, cfg, ensemble_b);

  const double td = trace_distance(avg_a.average, avg_b.average);
  CHECK(td <= 5.0 * (avg_a.error_estimate + avg_b.error_estimate));
}

TEST_CASE("single trajectory reports the trivial error bound") {
  const CovariantChannel id = build_identity(kLat);
  TrajectoryConfig cfg;
  cfg.n_trajectories = 1;
  const EnsembleAverage result = ensemble_average(id, cfg, plane_ensemble(kLat, {0}));
  CHECK(result.error_estimate == 1.0);
}

TEST_CASE("ensemble validation") {
  const CovariantChannel id = build_identity(kLat);
  TrajectoryConfig cfg;

  std::vector<std::pair<double, PureState>> bad;
  bad.emplace_back(0.5, PureState::plane_wave(kLat, {0}));
  CHECK_THROWS_AS(ensemble_average(id, cfg, bad), std::invalid_argument);  // weights sum 0.5

  bad[0].first = -1.0;
  bad.emplace_back(2.0, PureState::plane_wave(kLat, {1}));
  CHECK_THROWS_AS(ensemble_average(id, cfg, bad), std::invalid_argument);  // negative weight

  cfg.n_trajectories = 0;
  CHECK_THROWS_AS(ensemble_average(id, cfg, plane_ensemble(kLat, {0})), std::invalid_argument);
  cfg.n_trajectories = 1;
  cfg.n_steps = -1;
  CHECK_THROWS_AS(ensemble_average(id, cfg, plane_ensemble(kLat, {0})), std::invalid_argument);
}

TEST_CASE("block representation is completely positive on the doubled space") {
  RandomStream rng(13);
  DiffusiveChannelOptions opts;
  opts.momentum_conserving = false;
  const CovariantChannel channel = random_diffusive_channel(kLat, opts, rng);

  const auto basis = static_cast<Eigen::Index>(kLat.basis_size());
  Eigen::MatrixXcd choi = Eigen::MatrixXcd::Zero(basis * basis, basis * basis);
  for (Eigen::Index a = 0; a < basis; ++a) {
    for (Eigen::Index b = 0; b < basis; ++b) {
      Eigen::MatrixXcd unit = Eigen::MatrixXcd::Zero(basis, basis);
      unit(a, b) = 1.0;
      choi.block(a * basis, b * basis, basis, basis) = channel.apply_matrix(unit);
    }
  }
  choi /= static_cast<double>(basis);
  CHECK(min_eigenvalue(choi) > -1e-10);
  CHECK(std::abs(choi.trace().real() - 1.0) < 1e-12);
}
