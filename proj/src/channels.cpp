#include "covdiff/channels.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>

#include "covdiff/detail/gaussian_weights.hpp"
#include "covdiff/rng.hpp"

namespace covdiff {

namespace {

constexpr double kCompletenessTol = 1e-10;
constexpr double kDropThreshold = 1e-14;

Eigen::MatrixXcd zero_matrix(const BoxLattice& lattice) {
  const auto n = static_cast<Eigen::Index>(lattice.basis_size());
  return Eigen::MatrixXcd::Zero(n, n);
}

}  // namespace

CovariantChannel::CovariantChannel(BoxLattice lattice, std::vector<TransferBlock> blocks)
    : lattice_(std::move(lattice)), blocks_(std::move(blocks)) {
  const std::size_t basis = lattice_.basis_size();
  Eigen::VectorXd column_mass = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis));
  plans_.reserve(blocks_.size());
  for (const TransferBlock& block : blocks_) {
    if (!lattice_.valid_transfer(block.transfer)) {
      throw std::invalid_argument("block transfer " + to_string(block.transfer) +
                                  " outside transfer window");
    }
    if (static_cast<std::size_t>(block.gains.size()) != basis) {
      throw std::invalid_argument("block gain vector does not match basis size");
    }
    BlockPlan plan;
    for (std::size_t i = 0; i < basis; ++i) {
      const auto gain = block.gains(static_cast<Eigen::Index>(i));
      if (gain == Complex(0.0, 0.0)) continue;
      const MomentumIndex target = lattice_.unflatten(i) + block.transfer;
      if (!lattice_.contains(target)) {
        throw std::invalid_argument("nonzero gain at source " + to_string(lattice_.unflatten(i)) +
                                    " maps outside the window under transfer " +
                                    to_string(block.transfer));
      }
      plan.src.push_back(static_cast<Eigen::Index>(i));
      plan.dst.push_back(static_cast<Eigen::Index>(lattice_.flat_index(target)));
      column_mass(static_cast<Eigen::Index>(i)) += std::norm(gain);
    }
    plans_.push_back(std::move(plan));
  }
  completeness_deviation_ = (column_mass.array() - 1.0).abs().maxCoeff();
  if (completeness_deviation_ > kCompletenessTol) {
    throw std::invalid_argument("channel violates completeness by " +
                                std::to_string(completeness_deviation_));
  }
}

Eigen::MatrixXcd CovariantChannel::apply_matrix(const Eigen::MatrixXcd& m) const {
  const auto basis = static_cast<Eigen::Index>(lattice_.basis_size());
  if (m.rows() != basis || m.cols() != basis) {
    throw std::invalid_argument("matrix shape does not match basis size");
  }
  Eigen::MatrixXcd out = zero_matrix(lattice_);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const auto& gains = blocks_[b].gains;
    const auto& plan = plans_[b];
    const std::size_t active = plan.src.size();
    for (std::size_t i = 0; i < active; ++i) {
      const Complex gi = gains(plan.src[i]);
      for (std::size_t j = 0; j < active; ++j) {
        out(plan.dst[i], plan.dst[j]) += gi * std::conj(gains(plan.src[j])) * m(plan.src[i], plan.src[j]);
      }
    }
  }
  return out;
}

DensityMatrix CovariantChannel::apply(const DensityMatrix& rho) const {
  if (!(rho.lattice() == lattice_)) throw std::invalid_argument("lattice mismatch");
  return DensityMatrix(lattice_, apply_matrix(rho.matrix()));
}

DenseKrausChannel::DenseKrausChannel(BoxLattice lattice, std::vector<Eigen::MatrixXcd> operators)
    : lattice_(std::move(lattice)), operators_(std::move(operators)) {
  if (operators_.empty()) throw std::invalid_argument("channel needs at least one Kraus operator");
  const auto basis = static_cast<Eigen::Index>(lattice_.basis_size());
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(basis, basis);
  for (const auto& op : operators_) {
    if (op.rows() != basis || op.cols() != basis) {
      throw std::invalid_argument("Kraus operator shape does not match basis size");
    }
    sum.noalias() += op.adjoint() * op;
  }
  const double deviation =
      (sum - Eigen::MatrixXcd::Identity(basis, basis)).cwiseAbs().maxCoeff();
  if (deviation > kCompletenessTol) {
    throw std::invalid_argument("Kraus operators violate sum A^dag A = 1 by " +
                                std::to_string(deviation));
  }
}

Eigen::MatrixXcd DenseKrausChannel::apply_matrix(const Eigen::MatrixXcd& m) const {
  Eigen::MatrixXcd out = zero_matrix(lattice_);
  for (const auto& op : operators_) out.noalias() += op * m * op.adjoint();
  return out;
}

DensityMatrix DenseKrausChannel::apply(const DensityMatrix& rho) const {
  if (!(rho.lattice() == lattice_)) throw std::invalid_argument("lattice mismatch");
  return DensityMatrix(lattice_, apply_matrix(rho.matrix()));
}

Eigen::VectorXcd translation_phases(const BoxLattice& lattice, const std::array<double, 3>& x) {
  const auto basis = static_cast<Eigen::Index>(lattice.basis_size());
  Eigen::VectorXcd phases(basis);
  for (Eigen::Index i = 0; i < basis; ++i) {
    const MomentumIndex n = lattice.unflatten(static_cast<std::size_t>(i));
    double angle = 0.0;
    for (int a = 0; a < lattice.dim(); ++a) {
      angle -= lattice.momentum_component(n, a) * x[static_cast<std::size_t>(a)] / lattice.hbar();
    }
    phases(i) = Complex(std::cos(angle), std::sin(angle));
  }
  return phases;
}

CovariantChannel covariant_average(const DenseKrausChannel& dense, double* max_dropped_mass) {
  const BoxLattice& lattice = dense.lattice();
  const std::size_t basis = lattice.basis_size();
  std::vector<TransferBlock> blocks;
  Eigen::VectorXd dropped = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis));
  Eigen::VectorXd kept = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis));
  int kraus_id = 0;
  for (const auto& op : dense.operators()) {
    for (std::size_t t = 0; t < lattice.transfer_count(); ++t) {
      const MomentumIndex q = lattice.transfer_unflatten(t);
      Eigen::VectorXcd gains = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis));
      double max_gain = 0.0;
      for (std::size_t i = 0; i < basis; ++i) {
        const MomentumIndex target = lattice.unflatten(i) + q;
        if (!lattice.contains(target)) continue;
        const Complex g = op(static_cast<Eigen::Index>(lattice.flat_index(target)),
                             static_cast<Eigen::Index>(i));
        gains(static_cast<Eigen::Index>(i)) = g;
        max_gain = std::max(max_gain, std::abs(g));
      }
      if (max_gain < kDropThreshold) {
        for (std::size_t i = 0; i < basis; ++i) {
          dropped(static_cast<Eigen::Index>(i)) += std::norm(gains(static_cast<Eigen::Index>(i)));
        }
        continue;
      }
      for (std::size_t i = 0; i < basis; ++i) {
        kept(static_cast<Eigen::Index>(i)) += std::norm(gains(static_cast<Eigen::Index>(i)));
      }
      blocks.push_back(TransferBlock{kraus_id, q, std::move(gains)});
    }
    ++kraus_id;
  }
  // Push the per-source deficit back into the zero-transfer blocks so the
  // averaged channel satisfies completeness exactly.
  const MomentumIndex q0 = MomentumIndex::zero(lattice.dim());
  for (std::size_t i = 0; i < basis; ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const double deficit = 1.0 - kept(idx);
    if (deficit == 0.0) continue;
    double q0_mass = 0.0;
    for (const auto& block : blocks) {
      if (block.transfer == q0) q0_mass += std::norm(block.gains(idx));
    }
    if (q0_mass <= 0.0) continue;
    const double factor = std::sqrt(std::max(0.0, q0_mass + deficit) / q0_mass);
    for (auto& block : blocks) {
      if (block.transfer == q0) block.gains(idx) *= factor;
    }
  }
  if (max_dropped_mass != nullptr) {
    *max_dropped_mass = dropped.size() > 0 ? dropped.maxCoeff() : 0.0;
  }
  return CovariantChannel(lattice, std::move(blocks));
}

DenseKrausChannel densify(const CovariantChannel& channel) {
  const BoxLattice& lattice = channel.lattice();
  const std::size_t basis = lattice.basis_size();
  std::vector<Eigen::MatrixXcd> operators;
  operators.reserve(channel.blocks().size());
  for (const auto& block : channel.blocks()) {
    Eigen::MatrixXcd op = zero_matrix(lattice);
    for (std::size_t i = 0; i < basis; ++i) {
      const Complex g = block.gains(static_cast<Eigen::Index>(i));
      if (g == Complex(0.0, 0.0)) continue;
      const MomentumIndex target = lattice.unflatten(i) + block.transfer;
      op(static_cast<Eigen::Index>(lattice.flat_index(target)), static_cast<Eigen::Index>(i)) = g;
    }
    operators.push_back(std::move(op));
  }
  return DenseKrausChannel(lattice, std::move(operators));
}

double covariance_check(const DenseKrausChannel& channel,
                        std::span<const std::array<double, 3>> displacements) {
  const BoxLattice& lattice = channel.lattice();
  const std::size_t basis = lattice.basis_size();
  std::vector<Eigen::MatrixXcd> probes;
  for (int axis = 0; axis < lattice.dim(); ++axis) {
    MomentumIndex step = MomentumIndex::zero(lattice.dim());
    step[axis] = 1;
    for (std::size_t i = 0; i < basis; ++i) {
      const MomentumIndex n = lattice.unflatten(i);
      if (!lattice.contains(n + step)) continue;
      Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis));
      amp(static_cast<Eigen::Index>(i)) = 1.0 / std::numbers::sqrt2;
      amp(static_cast<Eigen::Index>(lattice.flat_index(n + step))) = 1.0 / std::numbers::sqrt2;
      probes.push_back(amp * amp.adjoint());
    }
  }
  for (std::uint64_t r = 0; r < 3; ++r) {
    RandomStream rng = RandomStream::substream(0xC0DEC0DEull, r);
    Eigen::MatrixXcd g(static_cast<Eigen::Index>(basis), static_cast<Eigen::Index>(basis));
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.complex_normal();
    }
    Eigen::MatrixXcd probe = g * g.adjoint();
    probe /= probe.trace().real();
    probes.push_back(std::move(probe));
  }
  double worst = 0.0;
  for (const auto& x : displacements) {
    const Eigen::VectorXcd phases = translation_phases(lattice, x);
    for (const auto& probe : probes) {
      const Eigen::MatrixXcd translated =
          phases.asDiagonal() * probe * phases.conjugate().asDiagonal();
      const Eigen::MatrixXcd lhs =
          phases.asDiagonal() * channel.apply_matrix(probe) * phases.conjugate().asDiagonal();
      const Eigen::MatrixXcd rhs = channel.apply_matrix(translated);
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

CovariantChannel build_identity(const BoxLattice& lattice) {
  TransferBlock block{0, MomentumIndex::zero(lattice.dim()),
                      Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(lattice.basis_size()))};
  return CovariantChannel(lattice, {std::move(block)});
}

CovariantChannel build_boost(const BoxLattice& lattice, const std::array<double, 3>& a) {
  const auto basis = static_cast<Eigen::Index>(lattice.basis_size());
  Eigen::VectorXcd gains(basis);
  for (Eigen::Index i = 0; i < basis; ++i) {
    const MomentumIndex n = lattice.unflatten(static_cast<std::size_t>(i));
    double angle = 0.0;
    for (int axis = 0; axis < lattice.dim(); ++axis) {
      angle += lattice.momentum_component(n, axis) * a[static_cast<std::size_t>(axis)] /
               lattice.hbar();
    }
    gains(i) = Complex(std::cos(angle), std::sin(angle));
  }
  return CovariantChannel(lattice, {TransferBlock{0, MomentumIndex::zero(lattice.dim()), gains}});
}

CovariantChannel build_free_evolution(const BoxLattice& lattice, double t, double mass) {
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  const auto basis = static_cast<Eigen::Index>(lattice.basis_size());
  Eigen::VectorXcd gains(basis);
  for (Eigen::Index i = 0; i < basis; ++i) {
    const MomentumIndex n = lattice.unflatten(static_cast<std::size_t>(i));
    double p_sq = 0.0;
    for (int axis = 0; axis < lattice.dim(); ++axis) {
      const double p = lattice.momentum_component(n, axis);
      p_sq += p * p;
    }
    const double angle = -p_sq * t / (2.0 * mass * lattice.hbar());
    gains(i) = Complex(std::cos(angle), std::sin(angle));
  }
  return CovariantChannel(lattice, {TransferBlock{0, MomentumIndex::zero(lattice.dim()), gains}});
}

CovariantChannel build_momentum_diagonal(const BoxLattice& lattice, const Eigen::MatrixXd& c,
                                         const Eigen::MatrixXd& phi) {
  const auto basis = static_cast<Eigen::Index>(lattice.basis_size());
  if (c.rows() < 1 || c.cols() != basis) {
    throw std::invalid_argument("weight table must be num_kraus x basis_size");
  }
  if (phi.rows() != c.rows() || phi.cols() != c.cols()) {
    throw std::invalid_argument("phase table shape must match weight table");
  }
  if (c.minCoeff() < 0.0) throw std::invalid_argument("weights must be nonnegative");
  for (Eigen::Index n = 0; n < basis; ++n) {
    const double sum = c.col(n).sum();
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("weights at source " + std::to_string(n) + " sum to " +
                                  std::to_string(sum));
    }
  }
  std::vector<TransferBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(c.rows()));
  for (Eigen::Index k = 0; k < c.rows(); ++k) {
    Eigen::VectorXcd gains(basis);
    for (Eigen::Index n = 0; n < basis; ++n) {
      gains(n) = std::sqrt(c(k, n)) * Complex(std::cos(phi(k, n)), std::sin(phi(k, n)));
    }
    blocks.push_back(
        TransferBlock{static_cast<int>(k), MomentumIndex::zero(lattice.dim()), std::move(gains)});
  }
  return CovariantChannel(lattice, std::move(blocks));
}

CovariantChannel build_grw(const BoxLattice& lattice, double r_c, double strength) {
  if (!(r_c > 0.0)) throw std::invalid_argument("r_c must be positive");
  if (!(strength > 0.0) || strength > 1.0) {
    throw std::invalid_argument("strength must lie in (0, 1]");
  }
  const std::vector<double> w1 = detail::gaussian_transfer_weights_1d(lattice, r_c);
  const int wing = 2 * lattice.n_max();
  const std::size_t basis = lattice.basis_size();

  // Per-axis renormalization sums over the source-symmetric transfer sets
  // |q_a| <= n_max - |n_a|; the full sum factorizes across axes.
  std::vector<double> axis_sum(static_cast<std::size_t>(lattice.side()), 0.0);
  for (int m = -lattice.n_max(); m <= lattice.n_max(); ++m) {
    double sum = 0.0;
    for (int j = -(lattice.n_max() - std::abs(m)); j <= lattice.n_max() - std::abs(m); ++j) {
      const double v = w1[static_cast<std::size_t>(j + wing)];
      sum += v * v;
    }
    axis_sum[static_cast<std::size_t>(m + lattice.n_max())] = sum;
  }

  std::vector<TransferBlock> blocks;
  if (strength < 1.0) {
    blocks.push_back(TransferBlock{
        0, MomentumIndex::zero(lattice.dim()),
        std::sqrt(1.0 - strength) *
            Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(basis))});
  }
  MomentumIndex q = MomentumIndex::zero(lattice.dim());
  const std::size_t q_count = [&] {
    std::size_t count = 1;
    for (int a = 0; a < lattice.dim(); ++a) count *= static_cast<std::size_t>(lattice.side());
    return count;
  }();
  for (std::size_t qi = 0; qi < q_count; ++qi) {
    std::size_t rest = qi;
    for (int a = lattice.dim() - 1; a >= 0; --a) {
      q[a] = static_cast<int>(rest % static_cast<std::size_t>(lattice.side())) - lattice.n_max();
      rest /= static_cast<std::size_t>(lattice.side());
    }
    double weight = 1.0;
    for (int a = 0; a < lattice.dim(); ++a) weight *= w1[static_cast<std::size_t>(q[a] + wing)];
    Eigen::VectorXcd gains = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis));
    double max_gain = 0.0;
    for (std::size_t i = 0; i < basis; ++i) {
      const MomentumIndex n = lattice.unflatten(i);
      bool allowed = true;
      double renorm = 1.0;
      for (int a = 0; a < lattice.dim(); ++a) {
        if (std::abs(q[a]) > lattice.n_max() - std::abs(n[a])) {
          allowed = false;
          break;
        }
        renorm *= axis_sum[static_cast<std::size_t>(n[a] + lattice.n_max())];
      }
      if (!allowed) continue;
      const double g = std::sqrt(strength) * weight / std::sqrt(renorm);
      gains(static_cast<Eigen::Index>(i)) = g;
      max_gain = std::max(max_gain, g);
    }
    if (max_gain < kDropThreshold) continue;
    blocks.push_back(TransferBlock{1, q, std::move(gains)});
  }
  return CovariantChannel(lattice, std::move(blocks));
}

namespace {

int wrap_into_window(int value, int n_max) {
  const int side = 2 * n_max + 1;
  int shifted = (value + n_max) % side;
  if (shifted < 0) shifted += side;
  return shifted - n_max;
}

}  // namespace

CovariantChannel build_boost_family(const BoxLattice& lattice, const MomentumIndex& gamma,
                                    BoostMode mode, BoundaryPolicy boundary) {
  if (gamma.dim != lattice.dim()) throw std::invalid_argument("dimension mismatch");
  const std::size_t basis = lattice.basis_size();
  // transfer flat index -> gains, materialized in first-seen order
  std::vector<std::pair<MomentumIndex, Eigen::VectorXcd>> groups;
  for (std::size_t i = 0; i < basis; ++i) {
    const MomentumIndex n = lattice.unflatten(i);
    MomentumIndex target = MomentumIndex::zero(lattice.dim());
    for (int a = 0; a < lattice.dim(); ++a) {
      const int shift = mode == BoostMode::Constant ? gamma[a] : gamma[a] - 2 * n[a];
      target[a] = n[a] + shift;
    }
    if (!lattice.contains(target)) {
      if (boundary == BoundaryPolicy::Reject) {
        throw std::invalid_argument("shift maps mode " + to_string(n) + " to " +
                                    to_string(target) + ", outside the window");
      }
      for (int a = 0; a < lattice.dim(); ++a) target[a] = wrap_into_window(target[a], lattice.n_max());
    }
    const MomentumIndex q = target - n;
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == q; });
    if (it == groups.end()) {
      groups.emplace_back(q, Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis)));
      it = std::prev(groups.end());
    }
    it->second(static_cast<Eigen::Index>(i)) = 1.0;
  }
  std::vector<TransferBlock> blocks;
  blocks.reserve(groups.size());
  for (auto& [q, gains] : groups) blocks.push_back(TransferBlock{0, q, std::move(gains)});
  return CovariantChannel(lattice, std::move(blocks));
}

}  // namespace covdiff
