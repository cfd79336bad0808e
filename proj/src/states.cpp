#include "covdiff/states.hpp"

#include "covdiff/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace covdiff {

namespace {

void check_vector_size(const BoxLattice& lattice, const Eigen::VectorXcd& v) {
  if (static_cast<std::size_t>(v.size()) != lattice.basis_size()) {
    throw std::invalid_argument("amplitude vector size " + std::to_string(v.size()) +
                                " does not match basis size " +
                                std::to_string(lattice.basis_size()));
  }
}

}  // namespace

PureState::PureState(BoxLattice lattice, Eigen::VectorXcd amplitudes)
    : lattice_(std::move(lattice)), amplitudes_(std::move(amplitudes)) {
  check_vector_size(lattice_, amplitudes_);
  const double norm = amplitudes_.norm();
  if (std::abs(norm - 1.0) > 1e-12) {
    throw std::invalid_argument("state norm " + std::to_string(norm) + " is not 1");
  }
}

PureState PureState::plane_wave(const BoxLattice& lattice, const MomentumIndex& n) {
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(lattice.basis_size()));
  amp(static_cast<Eigen::Index>(lattice.flat_index(n))) = 1.0;
  return PureState(lattice, std::move(amp));
}

PureState PureState::superposition(const BoxLattice& lattice,
                                   std::span<const std::pair<Complex, MomentumIndex>> terms) {
  if (terms.empty()) throw std::invalid_argument("superposition needs at least one term");
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(lattice.basis_size()));
  for (const auto& [coeff, n] : terms) {
    amp(static_cast<Eigen::Index>(lattice.flat_index(n))) += coeff;
  }
  const double norm = amp.norm();
  if (norm < 1e-14) throw std::invalid_argument("superposition coefficients cancel to zero");
  amp /= norm;
  return PureState(lattice, std::move(amp));
}

Complex PureState::amplitude(const MomentumIndex& n) const {
  return amplitudes_(static_cast<Eigen::Index>(lattice_.flat_index(n)));
}

double min_eigenvalue(const Eigen::MatrixXcd& hermitian) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hermitian, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

DensityMatrix::DensityMatrix(BoxLattice lattice, Eigen::MatrixXcd matrix, ValidationLimits limits)
    : lattice_(std::move(lattice)), matrix_(std::move(matrix)) {
  const auto n = static_cast<Eigen::Index>(lattice_.basis_size());
  if (matrix_.rows() != n || matrix_.cols() != n) {
    throw std::invalid_argument("density matrix shape does not match basis size");
  }
  const double herm_dev = (matrix_ - matrix_.adjoint()).cwiseAbs().maxCoeff();
  if (herm_dev > limits.hermitian_tol) {
    throw std::invalid_argument("density matrix is not Hermitian (deviation " +
                                std::to_string(herm_dev) + ")");
  }
  const double trace_dev = std::abs(matrix_.trace() - Complex(1.0, 0.0));
  if (trace_dev > limits.trace_tol) {
    throw std::invalid_argument("density matrix trace deviates from 1 by " +
                                std::to_string(trace_dev));
  }
  const double lambda_min = min_eigenvalue(matrix_);
  if (lambda_min < limits.eigenvalue_floor) {
    throw std::invalid_argument("density matrix has eigenvalue " + std::to_string(lambda_min) +
                                " below the positivity floor");
  }
}

double DensityMatrix::diagonal(const MomentumIndex& n) const {
  const auto i = static_cast<Eigen::Index>(lattice_.flat_index(n));
  return matrix_(i, i).real();
}

DensityMatrix from_pure(const PureState& psi) {
  Eigen::MatrixXcd m = psi.amplitudes() * psi.amplitudes().adjoint();
  return DensityMatrix(psi.lattice(), std::move(m));
}

DensityMatrix mix(std::span<const std::pair<double, PureState>> ensemble) {
  if (ensemble.empty()) throw std::invalid_argument("mixture needs at least one member");
  const BoxLattice& lattice = ensemble.front().second.lattice();
  double weight_sum = 0.0;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(lattice.basis_size()),
                                              static_cast<Eigen::Index>(lattice.basis_size()));
  for (const auto& [weight, psi] : ensemble) {
    if (!(psi.lattice() == lattice)) throw std::invalid_argument("mixture mixes lattices");
    if (weight < 0.0) throw std::invalid_argument("mixture weight is negative");
    weight_sum += weight;
    m.noalias() += weight * (psi.amplitudes() * psi.amplitudes().adjoint());
  }
  if (std::abs(weight_sum - 1.0) > 1e-12) {
    throw std::invalid_argument("mixture weights sum to " + std::to_string(weight_sum));
  }
  return DensityMatrix(lattice, std::move(m));
}

double mean_momentum(const DensityMatrix& rho, int axis) {
  const BoxLattice& lattice = rho.lattice();
  double mean = 0.0;
  for (std::size_t i = 0; i < lattice.basis_size(); ++i) {
    const auto n = lattice.unflatten(i);
    mean += lattice.momentum_component(n, axis) *
            rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  }
  return mean;
}

double momentum_spread(const DensityMatrix& rho, int axis) {
  const BoxLattice& lattice = rho.lattice();
  double mean = 0.0;
  double second = 0.0;
  for (std::size_t i = 0; i < lattice.basis_size(); ++i) {
    const auto n = lattice.unflatten(i);
    const double p = lattice.momentum_component(n, axis);
    const double population =
        rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    mean += p * population;
    second += p * p * population;
  }
  const double variance = second - mean * mean;
  if (variance < 0.0 && variance >= -1e-12) return 0.0;
  return variance;
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (!(a.lattice() == b.lattice())) throw std::invalid_argument("lattice mismatch");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a.matrix() - b.matrix(),
                                                         Eigen::EigenvaluesOnly);
  return 0.5 * solver.eigenvalues().cwiseAbs().sum();
}

PureState random_pure_state(const BoxLattice& lattice, RandomStream& rng) {
  const auto basis = static_cast<Eigen::Index>(lattice.basis_size());
  Eigen::VectorXcd amp(basis);
  for (Eigen::Index i = 0; i < basis; ++i) amp(i) = rng.complex_normal();
  amp /= amp.norm();
  return PureState(lattice, std::move(amp));
}

DensityMatrix random_density_matrix(const BoxLattice& lattice, RandomStream& rng) {
  const auto basis = static_cast<Eigen::Index>(lattice.basis_size());
  Eigen::MatrixXcd g(basis, basis);
  for (Eigen::Index i = 0; i < basis; ++i) {
    for (Eigen::Index j = 0; j < basis; ++j) g(i, j) = rng.complex_normal();
  }
  Eigen::MatrixXcd m = g * g.adjoint();
  m /= m.trace().real();
  m = Complex(0.5, 0.0) * (m + m.adjoint().eval());
  return DensityMatrix(lattice, std::move(m));
}

}  // namespace covdiff
