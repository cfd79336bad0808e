#include "covdiff/unraveling.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace covdiff {

namespace {

constexpr double kProbabilityTol = 1e-10;

std::size_t sample_index(std::span<const double> weights, double total, RandomStream& rng) {
  for (int attempt = 0; attempt < 8; ++attempt) {
    const double u = rng.uniform() * total;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      cumulative += weights[i];
      if (u < cumulative) {
        if (weights[i] > 0.0) return i;
        break;  // landed on a zero-width cell through round-off
      }
    }
    // u fell past the accumulated mass; redraw.
  }
  throw std::runtime_error("outcome sampling degenerated: no block carries probability");
}

}  // namespace

std::pair<PureState, Outcome> step(const PureState& psi, const CovariantChannel& channel,
                                   RandomStream& rng) {
  if (!(psi.lattice() == channel.lattice())) throw std::invalid_argument("lattice mismatch");
  const BoxLattice& lattice = channel.lattice();
  const auto& blocks = channel.blocks();
  const Eigen::VectorXcd& amp = psi.amplitudes();

  std::vector<double> probs(blocks.size(), 0.0);
  double total = 0.0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    double p = 0.0;
    const Eigen::VectorXcd& gains = blocks[b].gains;
    for (Eigen::Index i = 0; i < gains.size(); ++i) p += std::norm(gains(i) * amp(i));
    probs[b] = p;
    total += p;
  }
  if (std::abs(total - 1.0) > kProbabilityTol) {
    throw std::runtime_error("outcome probabilities sum to " + std::to_string(total));
  }

  const std::size_t chosen = sample_index(probs, total, rng);
  const TransferBlock& block = blocks[chosen];
  const double norm = std::sqrt(probs[chosen]);
  Eigen::VectorXcd post = Eigen::VectorXcd::Zero(amp.size());
  for (Eigen::Index i = 0; i < amp.size(); ++i) {
    const Complex g = block.gains(i);
    if (g == Complex(0.0, 0.0)) continue;
    const std::size_t target = lattice.flat_index(lattice.unflatten(static_cast<std::size_t>(i)) +
                                                  block.transfer);
    post(static_cast<Eigen::Index>(target)) += g * amp(i) / norm;
  }
  return {PureState(lattice, std::move(post)), Outcome{block.kraus_id, block.transfer}};
}

EnsembleAverage ensemble_average(const CovariantChannel& channel, const TrajectoryConfig& cfg,
                                 std::span<const std::pair<double, PureState>> ensemble,
                                 std::vector<OutcomeRecord>* log) {
  if (cfg.n_trajectories < 1) throw std::invalid_argument("n_trajectories must be positive");
  if (cfg.n_steps < 0) throw std::invalid_argument("n_steps must be nonnegative");
  if (ensemble.empty()) throw std::invalid_argument("ensemble is empty");
  std::vector<double> weights;
  double weight_total = 0.0;
  for (const auto& [w, state] : ensemble) {
    if (w < 0.0) throw std::invalid_argument("ensemble weights must be nonnegative");
    if (!(state.lattice() == channel.lattice())) throw std::invalid_argument("lattice mismatch");
    weights.push_back(w);
    weight_total += w;
  }
  if (std::abs(weight_total - 1.0) > 1e-12) {
    throw std::invalid_argument("ensemble weights must sum to 1");
  }

  const auto basis = static_cast<Eigen::Index>(channel.lattice().basis_size());
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(basis, basis);
  for (int t = 0; t < cfg.n_trajectories; ++t) {
    RandomStream rng = RandomStream::substream(cfg.seed, static_cast<std::uint64_t>(t));
    const std::size_t pick = sample_index(weights, weight_total, rng);
    PureState psi = ensemble[pick].second;
    for (int s = 0; s < cfg.n_steps; ++s) {
      auto [next, outcome] = step(psi, channel, rng);
      psi = std::move(next);
      if (log != nullptr) log->push_back(OutcomeRecord{t, s, outcome});
    }
    sum.noalias() += psi.amplitudes() * psi.amplitudes().adjoint();
  }

  const double n = static_cast<double>(cfg.n_trajectories);
  Eigen::MatrixXcd average = sum / n;
  double estimate = 1.0;
  if (cfg.n_trajectories > 1) {
    // Each trajectory projector has unit Frobenius norm, so the summed
    // per-entry variance reduces to 1 - ||average||_F^2.
    const double scatter = std::max(0.0, 1.0 - average.squaredNorm());
    const double se_frobenius = std::sqrt(scatter / (n - 1.0));
    estimate = std::min(1.0, 0.5 * std::sqrt(static_cast<double>(basis)) * se_frobenius);
  }
  ValidationLimits limits;
  limits.hermitian_tol = 1e-9;
  limits.trace_tol = 1e-9;
  return EnsembleAverage{DensityMatrix(channel.lattice(), std::move(average), limits), estimate};
}

}  // namespace covdiff
