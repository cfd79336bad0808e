#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "covdiff/channels.hpp"
#include "covdiff/rng.hpp"
#include "covdiff/states.hpp"

namespace covdiff::testing {

// Translation average by brute force: applies the dense channel between
// conjugations with the box translation U(x) on a uniform x grid.  The
// integrand oscillates with at most 4 n_max harmonics per axis, so any grid
// with more points than that per axis reproduces the integral exactly.
inline Eigen::MatrixXcd grid_average_apply(const DenseKrausChannel& dense,
                                           const Eigen::MatrixXcd& rho, int grid = 64) {
  const BoxLattice& lattice = dense.lattice();
  const auto basis = static_cast<Eigen::Index>(lattice.basis_size());
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(basis, basis);
  std::size_t points = 1;
  for (int a = 0; a < lattice.dim(); ++a) points *= static_cast<std::size_t>(grid);
  for (std::size_t flat = 0; flat < points; ++flat) {
    std::array<double, 3> x{0.0, 0.0, 0.0};
    std::size_t rest = flat;
    for (int a = lattice.dim() - 1; a >= 0; --a) {
      x[static_cast<std::size_t>(a)] =
          lattice.box_length() * static_cast<double>(rest % static_cast<std::size_t>(grid)) /
          static_cast<double>(grid);
      rest /= static_cast<std::size_t>(grid);
    }
    const Eigen::VectorXcd phases = translation_phases(lattice, x);
    const Eigen::MatrixXcd shifted =
        phases.asDiagonal() * rho * phases.conjugate().asDiagonal();
    const Eigen::MatrixXcd mapped = dense.apply_matrix(shifted);
    sum.noalias() +=
        phases.conjugate().asDiagonal() * mapped * phases.asDiagonal();
  }
  return sum / static_cast<double>(points);
}

// Sharp position measurement on the two halves of the box: Kraus operators
// sqrt(E) and sqrt(1 - E) where E compresses the left-half indicator onto
// the momentum window.  Deliberately breaks translation covariance.
inline DenseKrausChannel half_box_measurement_channel(const BoxLattice& lattice) {
  const auto basis = static_cast<Eigen::Index>(lattice.basis_size());
  Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(basis, basis);
  for (Eigen::Index i = 0; i < basis; ++i) {
    for (Eigen::Index j = 0; j < basis; ++j) {
      const int k = lattice.unflatten(static_cast<std::size_t>(j))[0] -
                    lattice.unflatten(static_cast<std::size_t>(i))[0];
      if (k == 0) {
        e(i, j) = 0.5;
      } else if (k % 2 != 0) {
        e(i, j) = Complex(0.0, 1.0 / (std::numbers::pi * k));
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(e);
  Eigen::VectorXd values = eig.eigenvalues().cwiseMax(0.0).cwiseMin(1.0);
  const Eigen::MatrixXcd left =
      eig.eigenvectors() * values.cwiseSqrt().asDiagonal() * eig.eigenvectors().adjoint();
  const Eigen::MatrixXcd right = eig.eigenvectors() *
                                 (1.0 - values.array()).sqrt().matrix().asDiagonal() *
                                 eig.eigenvectors().adjoint();
  return DenseKrausChannel(lattice, {left, right});
}

// Pure-state ensemble with the given number of members averaging exactly to
// rho: w_k = sum_i Q(k, i) sqrt(lambda_i) v_i with Q unitary, so different
// Q give different ensembles of the same state.
inline std::vector<std::pair<double, PureState>> equivalent_ensemble(const DensityMatrix& rho,
                                                                     int size,
                                                                     RandomStream& rng) {
  const auto basis = static_cast<Eigen::Index>(rho.lattice().basis_size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho.matrix());
  std::vector<Eigen::Index> kept;
  for (Eigen::Index i = 0; i < basis; ++i) {
    if (eig.eigenvalues()(i) > 1e-12) kept.push_back(i);
  }
  const auto rank = static_cast<Eigen::Index>(kept.size());
  const Eigen::Index members = std::max<Eigen::Index>(size, rank);

  Eigen::MatrixXcd ginibre(members, members);
  for (Eigen::Index i = 0; i < members; ++i) {
    for (Eigen::Index j = 0; j < members; ++j) ginibre(i, j) = rng.complex_normal();
  }
  const Eigen::MatrixXcd q =
      Eigen::HouseholderQR<Eigen::MatrixXcd>(ginibre).householderQ();

  std::vector<std::pair<double, PureState>> ensemble;
  double total = 0.0;
  for (Eigen::Index k = 0; k < members; ++k) {
    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(basis);
    for (Eigen::Index r = 0; r < rank; ++r) {
      w += q(k, r) * std::sqrt(eig.eigenvalues()(kept[static_cast<std::size_t>(r)])) *
           eig.eigenvectors().col(kept[static_cast<std::size_t>(r)]);
    }
    const double weight = w.squaredNorm();
    if (weight < 1e-14) continue;
    ensemble.emplace_back(weight, PureState(rho.lattice(), w / std::sqrt(weight)));
    total += weight;
  }
  for (auto& [weight, state] : ensemble) weight /= total;
  return ensemble;
}

inline double chi_square(std::span<const long> observed, std::span<const double> expected) {
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double diff = static_cast<double>(observed[i]) - expected[i];
    stat += diff * diff / expected[i];
  }
  return stat;
}

}  // namespace covdiff::testing
