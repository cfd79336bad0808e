#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "covdiff/channels.hpp"
#include "covdiff/rng.hpp"
#include "covdiff/states.hpp"

namespace covdiff {

// Label of one sampled jump: which transfer block fired.
struct Outcome {
  int kraus_id = 0;
  MomentumIndex transfer;
};

struct OutcomeRecord {
  int trajectory = 0;
  int step = 0;
  Outcome outcome;
};

struct TrajectoryConfig {
  std::uint64_t seed = 0;
  int n_steps = 1;
  int n_trajectories = 1;
};

// Samples one jump: block b fires with probability ||A_b psi||^2, the
// post-state is A_b psi renormalized.  Block probabilities are accumulated
// in stored block order and sampled by inverse CDF, so a fixed rng stream
// reproduces the trajectory bitwise.  A numerically degenerate draw is
// retried a few times before becoming a hard error.
std::pair<PureState, Outcome> step(const PureState& psi, const CovariantChannel& channel,
                                   RandomStream& rng);

struct EnsembleAverage {
  DensityMatrix average;
  // Heuristic trace-distance error: per-entry sample standard error of the
  // mean aggregated through td <= sqrt(basis)/2 * frobenius norm.  With one
  // trajectory there is no scatter to estimate and the trivial bound 1 is
  // reported.
  double error_estimate = 1.0;
};

// Runs cfg.n_trajectories independent trajectories of cfg.n_steps jumps,
// each seeded by a substream of cfg.seed, with the initial state drawn from
// the weighted ensemble, and averages the final projectors.  Trajectories
// are accumulated in index order, so the result is bitwise reproducible.
// When log is given, every sampled outcome is appended to it.
EnsembleAverage ensemble_average(const CovariantChannel& channel, const TrajectoryConfig& cfg,
                                 std::span<const std::pair<double, PureState>> ensemble,
                                 std::vector<OutcomeRecord>* log = nullptr);

}  // namespace covdiff
