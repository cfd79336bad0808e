#include "covdiff/random_channels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace covdiff {

CovariantChannel random_momentum_diagonal_channel(const BoxLattice& lattice, int num_kraus,
                                                  RandomStream& rng) {
  if (num_kraus < 1) throw std::invalid_argument("num_kraus must be positive");
  const auto basis = static_cast<Eigen::Index>(lattice.basis_size());
  Eigen::MatrixXd c(num_kraus, basis);
  Eigen::MatrixXd phi(num_kraus, basis);
  for (Eigen::Index n = 0; n < basis; ++n) {
    double total = 0.0;
    for (int k = 0; k < num_kraus; ++k) {
      c(k, n) = rng.uniform(0.1, 1.0);
      total += c(k, n);
      phi(k, n) = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    for (int k = 0; k < num_kraus; ++k) c(k, n) /= total;
  }
  return build_momentum_diagonal(lattice, c, phi);
}

CovariantChannel random_diffusive_channel(const BoxLattice& lattice,
                                          const DiffusiveChannelOptions& options,
                                          RandomStream& rng) {
  if (options.max_transfer < 1 || options.max_transfer > lattice.n_max()) {
    throw std::invalid_argument("max_transfer must lie in [1, n_max]");
  }
  if (!(options.min_off_fraction > 0.0) || !(options.min_off_fraction <= 0.9)) {
    throw std::invalid_argument("min_off_fraction must lie in (0, 0.9]");
  }

  // All candidate transfers in lexicographic order; q = 0 is among them.
  std::vector<MomentumIndex> transfers;
  const int span = 2 * options.max_transfer + 1;
  std::size_t count = 1;
  for (int a = 0; a < lattice.dim(); ++a) count *= static_cast<std::size_t>(span);
  for (std::size_t flat = 0; flat < count; ++flat) {
    MomentumIndex q = MomentumIndex::zero(lattice.dim());
    std::size_t rest = flat;
    for (int a = lattice.dim() - 1; a >= 0; --a) {
      q[a] = static_cast<int>(rest % static_cast<std::size_t>(span)) - options.max_transfer;
      rest /= static_cast<std::size_t>(span);
    }
    transfers.push_back(q);
  }

  const auto basis = static_cast<Eigen::Index>(lattice.basis_size());
  Eigen::MatrixXcd gains = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(transfers.size()),
                                                  basis);
  const auto allowed_at = [&](const MomentumIndex& n, const MomentumIndex& q) {
    for (int a = 0; a < lattice.dim(); ++a) {
      if (options.momentum_conserving) {
        if (std::abs(q[a]) > lattice.n_max() - std::abs(n[a])) return false;
      } else {
        if (std::abs(n[a] + q[a]) > lattice.n_max()) return false;
      }
    }
    return true;
  };

  for (Eigen::Index i = 0; i < basis; ++i) {
    const MomentumIndex n = lattice.unflatten(static_cast<std::size_t>(i));
    std::vector<std::size_t> off;
    for (std::size_t t = 0; t < transfers.size(); ++t) {
      if (transfers[t] == MomentumIndex::zero(lattice.dim())) continue;
      if (allowed_at(n, transfers[t])) off.push_back(t);
    }
    std::vector<double> mass(transfers.size(), 0.0);
    if (off.empty()) {
      mass[transfers.size() / 2] = 1.0;  // q = 0 sits at the center
    } else {
      std::vector<double> raw(transfers.size(), 0.0);
      for (std::size_t t : off) {
        if (raw[t] > 0.0) continue;  // mirror partner already drawn
        const double u = rng.uniform(0.25, 1.0);
        raw[t] = u;
        // -q sits at the reflected lexicographic position; in conserving
        // mode it is allowed exactly when q is.
        if (options.momentum_conserving) raw[transfers.size() - 1 - t] = u;
      }
      double raw_total = 0.0;
      for (std::size_t t : off) raw_total += raw[t];
      const double f = rng.uniform(options.min_off_fraction, 0.9);
      for (std::size_t t : off) mass[t] = f * raw[t] / raw_total;
      mass[transfers.size() / 2] = 1.0 - f;
    }
    for (std::size_t t = 0; t < transfers.size(); ++t) {
      if (mass[t] == 0.0) continue;
      gains(static_cast<Eigen::Index>(t), i) =
          std::sqrt(mass[t]) * rng.unit_phase();
    }
  }

  std::vector<TransferBlock> blocks;
  for (std::size_t t = 0; t < transfers.size(); ++t) {
    if (gains.row(static_cast<Eigen::Index>(t)).cwiseAbs().maxCoeff() == 0.0) continue;
    blocks.push_back(TransferBlock{0, transfers[t],
                                   gains.row(static_cast<Eigen::Index>(t)).transpose()});
  }
  return CovariantChannel(lattice, std::move(blocks));
}

LindbladGenerator random_momentum_diagonal_generator(const BoxLattice& lattice, int num_ops,
                                                     double rate_scale, RandomStream& rng) {
  if (num_ops < 1) throw std::invalid_argument("num_ops must be positive");
  if (!(rate_scale > 0.0)) throw std::invalid_argument("rate_scale must be positive");
  const auto basis = static_cast<Eigen::Index>(lattice.basis_size());
  Eigen::MatrixXcd values(num_ops, basis);
  const double scale = std::sqrt(rate_scale);
  for (int j = 0; j < num_ops; ++j) {
    for (Eigen::Index n = 0; n < basis; ++n) values(j, n) = scale * rng.complex_normal();
  }
  return build_momentum_diagonal_generator(lattice, values);
}

}  // namespace covdiff
