#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <utility>

#include "covdiff/lattice.hpp"

namespace covdiff {

using Complex = std::complex<double>;

// Normalized wave function over the momentum modes of a lattice.
class PureState {
 public:
  PureState(BoxLattice lattice, Eigen::VectorXcd amplitudes);  // requires unit norm

  static PureState plane_wave(const BoxLattice& lattice, const MomentumIndex& n);
  // Normalizes the given coefficients; repeated indices accumulate.
  static PureState superposition(const BoxLattice& lattice,
                                 std::span<const std::pair<Complex, MomentumIndex>> terms);

  const BoxLattice& lattice() const { return lattice_; }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }
  Complex amplitude(const MomentumIndex& n) const;

 private:
  BoxLattice lattice_;
  Eigen::VectorXcd amplitudes_;
};

struct ValidationLimits {
  double hermitian_tol = 1e-12;
  double trace_tol = 1e-12;
  double eigenvalue_floor = -1e-10;
};

// Dense density matrix in the momentum basis; the constructor enforces
// hermiticity, unit trace and positivity within the given limits.
class DensityMatrix {
 public:
  DensityMatrix(BoxLattice lattice, Eigen::MatrixXcd matrix, ValidationLimits limits = {});

  const BoxLattice& lattice() const { return lattice_; }
  const Eigen::MatrixXcd& matrix() const { return matrix_; }
  double diagonal(const MomentumIndex& n) const;

 private:
  BoxLattice lattice_;
  Eigen::MatrixXcd matrix_;
};

DensityMatrix from_pure(const PureState& psi);

// Convex mixture of pure states; weights must be nonnegative and sum to 1.
DensityMatrix mix(std::span<const std::pair<double, PureState>> ensemble);

// First and second momentum moments; both depend only on diag(rho).
double mean_momentum(const DensityMatrix& rho, int axis);
// Variance of the momentum along one axis.  Tiny negative round-off
// (above -1e-12) is clamped to zero; anything lower is returned as is so
// that a genuinely broken state cannot hide.
double momentum_spread(const DensityMatrix& rho, int axis);

double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

// Smallest eigenvalue of a Hermitian matrix (helper shared by validators).
double min_eigenvalue(const Eigen::MatrixXcd& hermitian);

class RandomStream;

// Haar-ish random pure state: normalized complex Gaussian amplitudes.
PureState random_pure_state(const BoxLattice& lattice, RandomStream& rng);

// Full-rank random mixed state G G^dag / tr(G G^dag) with Gaussian G.
DensityMatrix random_density_matrix(const BoxLattice& lattice, RandomStream& rng);

}  // namespace covdiff
