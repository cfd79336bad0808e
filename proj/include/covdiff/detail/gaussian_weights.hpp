#pragma once

#include <cmath>
#include <vector>

#include "covdiff/lattice.hpp"

namespace covdiff::detail {

// One-axis Gaussian transfer weights w(q) on q in [-2 n_max, 2 n_max]:
// w(q) = sum_{j=-5..5} exp(-(u (q + j P) r_c)^2 / (2 hbar^2)) with
// u = 2 pi hbar / L and P = 4 n_max + 1 the transfer-window period,
// normalized so sum_q w(q)^2 = 1.
inline std::vector<double> gaussian_transfer_weights_1d(const BoxLattice& lattice, double r_c) {
  const int wing = 2 * lattice.n_max();
  const int period = 4 * lattice.n_max() + 1;
  const double scale = lattice.momentum_quantum() * r_c / lattice.hbar();
  std::vector<double> w(static_cast<std::size_t>(lattice.transfer_side()), 0.0);
  for (int q = -wing; q <= wing; ++q) {
    double value = 0.0;
    for (int image = -5; image <= 5; ++image) {
      const double s = scale * (q + image * period);
      value += std::exp(-0.5 * s * s);
    }
    w[static_cast<std::size_t>(q + wing)] = value;
  }
  double sum_sq = 0.0;
  for (double v : w) sum_sq += v * v;
  const double norm = std::sqrt(sum_sq);
  for (double& v : w) v /= norm;
  return w;
}

}  // namespace covdiff::detail
