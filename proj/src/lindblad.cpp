#include "covdiff/lindblad.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "covdiff/detail/gaussian_weights.hpp"

namespace covdiff {

namespace {

double diag_momentum_mean(const BoxLattice& lattice, const Eigen::MatrixXcd& m, int axis) {
  double mean = 0.0;
  for (std::size_t i = 0; i < lattice.basis_size(); ++i) {
    mean += lattice.momentum_component(lattice.unflatten(i), axis) *
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  }
  return mean;
}

double diag_momentum_second(const BoxLattice& lattice, const Eigen::MatrixXcd& m, int axis) {
  double second = 0.0;
  for (std::size_t i = 0; i < lattice.basis_size(); ++i) {
    const double p = lattice.momentum_component(lattice.unflatten(i), axis);
    second += p * p * m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
  }
  return second;
}

}  // namespace

LindbladGenerator::LindbladGenerator(BoxLattice lattice, std::vector<GeneratorTerm> terms,
                                     std::optional<Eigen::MatrixXcd> hamiltonian)
    : lattice_(std::move(lattice)), terms_(std::move(terms)), hamiltonian_(std::move(hamiltonian)) {
  const std::size_t basis = lattice_.basis_size();
  measure_ = std::pow(lattice_.momentum_quantum(), lattice_.dim());
  rate_diagonal_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis));
  plans_.reserve(terms_.size());
  for (const GeneratorTerm& term : terms_) {
    if (!lattice_.valid_transfer(term.transfer)) {
      throw std::invalid_argument("term transfer " + to_string(term.transfer) +
                                  " outside transfer window");
    }
    if (static_cast<std::size_t>(term.values.size()) != basis) {
      throw std::invalid_argument("term value vector does not match basis size");
    }
    TermPlan plan;
    for (std::size_t i = 0; i < basis; ++i) {
      const Complex v = term.values(static_cast<Eigen::Index>(i));
      if (v == Complex(0.0, 0.0)) continue;
      const MomentumIndex target = lattice_.unflatten(i) + term.transfer;
      if (!lattice_.contains(target)) {
        throw std::invalid_argument("nonzero jump value at source " +
                                    to_string(lattice_.unflatten(i)) +
                                    " maps outside the window under transfer " +
                                    to_string(term.transfer));
      }
      plan.src.push_back(static_cast<Eigen::Index>(i));
      plan.dst.push_back(static_cast<Eigen::Index>(lattice_.flat_index(target)));
      rate_diagonal_(static_cast<Eigen::Index>(i)) += measure_ * std::norm(v);
    }
    plans_.push_back(std::move(plan));
  }
  if (hamiltonian_.has_value()) {
    const auto n = static_cast<Eigen::Index>(basis);
    if (hamiltonian_->rows() != n || hamiltonian_->cols() != n) {
      throw std::invalid_argument("Hamiltonian shape does not match basis size");
    }
    const double herm_dev = (*hamiltonian_ - hamiltonian_->adjoint()).cwiseAbs().maxCoeff();
    if (herm_dev > 1e-12) {
      throw std::invalid_argument("Hamiltonian is not Hermitian (deviation " +
                                  std::to_string(herm_dev) + ")");
    }
  }
}

Eigen::MatrixXcd LindbladGenerator::dissipator(const Eigen::MatrixXcd& rho) const {
  const auto basis = static_cast<Eigen::Index>(lattice_.basis_size());
  if (rho.rows() != basis || rho.cols() != basis) {
    throw std::invalid_argument("matrix shape does not match basis size");
  }
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(basis, basis);
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    const auto& values = terms_[k].values;
    const auto& plan = plans_[k];
    const std::size_t active = plan.src.size();
    for (std::size_t i = 0; i < active; ++i) {
      const Complex vi = values(plan.src[i]);
      for (std::size_t j = 0; j < active; ++j) {
        out(plan.dst[i], plan.dst[j]) +=
            measure_ * vi * std::conj(values(plan.src[j])) * rho(plan.src[i], plan.src[j]);
      }
    }
  }
  for (Eigen::Index i = 0; i < basis; ++i) {
    for (Eigen::Index j = 0; j < basis; ++j) {
      out(i, j) -= 0.5 * (rate_diagonal_(i) + rate_diagonal_(j)) * rho(i, j);
    }
  }
  return out;
}

Eigen::MatrixXcd LindbladGenerator::rhs(const Eigen::MatrixXcd& rho) const {
  Eigen::MatrixXcd out = dissipator(rho);
  if (hamiltonian_.has_value()) {
    const Complex minus_i_over_hbar(0.0, -1.0 / lattice_.hbar());
    out.noalias() += minus_i_over_hbar * (*hamiltonian_ * rho - rho * *hamiltonian_);
  }
  return out;
}

Eigen::MatrixXcd generator_apply(const LindbladGenerator& gen, const DensityMatrix& rho) {
  if (!(rho.lattice() == gen.lattice())) throw std::invalid_argument("lattice mismatch");
  return gen.dissipator(rho.matrix());
}

MomentRates moment_rates(const LindbladGenerator& gen, const DensityMatrix& rho) {
  if (!(rho.lattice() == gen.lattice())) throw std::invalid_argument("lattice mismatch");
  const BoxLattice& lattice = gen.lattice();
  MomentRates rates;
  rates.dp.assign(static_cast<std::size_t>(lattice.dim()), 0.0);
  rates.dp2.assign(static_cast<std::size_t>(lattice.dim()), 0.0);
  for (const GeneratorTerm& term : gen.terms()) {
    for (int axis = 0; axis < lattice.dim(); ++axis) {
      const double q_tilde = lattice.momentum_quantum() * term.transfer[axis];
      if (q_tilde == 0.0) continue;
      for (std::size_t i = 0; i < lattice.basis_size(); ++i) {
        const double f = std::norm(term.values(static_cast<Eigen::Index>(i)));
        if (f == 0.0) continue;
        const double population =
            rho.matrix()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
        const double p = lattice.momentum_component(lattice.unflatten(i), axis);
        rates.dp[static_cast<std::size_t>(axis)] += gen.measure_factor() * f * q_tilde * population;
        rates.dp2[static_cast<std::size_t>(axis)] +=
            gen.measure_factor() * f * (q_tilde * q_tilde + 2.0 * p * q_tilde) * population;
      }
    }
  }
  return rates;
}

EvolutionResult evolve(const LindbladGenerator& gen, const DensityMatrix& rho0, double dt,
                       int n_steps) {
  if (!(rho0.lattice() == gen.lattice())) throw std::invalid_argument("lattice mismatch");
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (n_steps < 1) throw std::invalid_argument("n_steps must be positive");
  const BoxLattice& lattice = gen.lattice();

  const auto record = [&](double t, const Eigen::MatrixXcd& m) {
    TrajectoryPoint point;
    point.t = t;
    point.trace = m.trace().real();
    point.min_eig = min_eigenvalue(m);
    for (int axis = 0; axis < lattice.dim(); ++axis) {
      const double mean = diag_momentum_mean(lattice, m, axis);
      point.mean_p.push_back(mean);
      point.spread_p.push_back(diag_momentum_second(lattice, m, axis) - mean * mean);
    }
    const double herm_dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (herm_dev > 1e-8 || std::abs(point.trace - 1.0) > 1e-8) {
      throw std::runtime_error("integration lost hermiticity or trace at t = " +
                               std::to_string(t));
    }
    if (point.min_eig < -1e-6) {
      throw std::runtime_error("integration lost positivity at t = " + std::to_string(t) +
                               " (min eigenvalue " + std::to_string(point.min_eig) + ")");
    }
    return point;
  };

  std::vector<TrajectoryPoint> points;
  points.reserve(static_cast<std::size_t>(n_steps) + 1);
  Eigen::MatrixXcd state = rho0.matrix();
  points.push_back(record(0.0, state));
  for (int s = 1; s <= n_steps; ++s) {
    const Eigen::MatrixXcd k1 = gen.rhs(state);
    const Eigen::MatrixXcd k2 = gen.rhs(state + 0.5 * dt * k1);
    const Eigen::MatrixXcd k3 = gen.rhs(state + 0.5 * dt * k2);
    const Eigen::MatrixXcd k4 = gen.rhs(state + dt * k3);
    state += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    points.push_back(record(s * dt, state));
  }
  ValidationLimits limits;
  limits.hermitian_tol = 1e-8;
  limits.trace_tol = 1e-8;
  limits.eigenvalue_floor = -1e-6;
  return EvolutionResult{std::move(points), DensityMatrix(lattice, std::move(state), limits)};
}

ZeroDiffusionResult zero_diffusion_reduce(const LindbladGenerator& gen, double tol) {
  const BoxLattice& lattice = gen.lattice();
  const MomentumIndex q0 = MomentumIndex::zero(lattice.dim());
  ZeroDiffusionResult result;
  result.witness_transfer = q0;
  result.witness_source = q0;
  for (const GeneratorTerm& term : gen.terms()) {
    if (term.transfer == q0) continue;
    for (std::size_t i = 0; i < lattice.basis_size(); ++i) {
      const double mass =
          gen.measure_factor() * std::norm(term.values(static_cast<Eigen::Index>(i)));
      if (mass > result.witness_mass) {
        result.witness_mass = mass;
        result.witness_transfer = term.transfer;
        result.witness_source = lattice.unflatten(i);
      }
    }
  }
  result.is_momentum_diagonal = result.witness_mass < tol;
  return result;
}

LindbladGenerator build_csl_like(const BoxLattice& lattice, double r_c, double rate) {
  if (!(r_c > 0.0)) throw std::invalid_argument("r_c must be positive");
  if (!(rate > 0.0)) throw std::invalid_argument("rate must be positive");
  const std::vector<double> w1 = detail::gaussian_transfer_weights_1d(lattice, r_c);
  const int wing = 2 * lattice.n_max();
  const std::size_t basis = lattice.basis_size();
  std::vector<GeneratorTerm> terms;
  MomentumIndex q = MomentumIndex::zero(lattice.dim());
  std::size_t q_count = 1;
  for (int a = 0; a < lattice.dim(); ++a) q_count *= static_cast<std::size_t>(lattice.side());
  for (std::size_t qi = 0; qi < q_count; ++qi) {
    std::size_t rest = qi;
    for (int a = lattice.dim() - 1; a >= 0; --a) {
      q[a] = static_cast<int>(rest % static_cast<std::size_t>(lattice.side())) - lattice.n_max();
      rest /= static_cast<std::size_t>(lattice.side());
    }
    double weight = 1.0;
    for (int a = 0; a < lattice.dim(); ++a) weight *= w1[static_cast<std::size_t>(q[a] + wing)];
    Eigen::VectorXcd values = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(basis));
    double max_value = 0.0;
    for (std::size_t i = 0; i < basis; ++i) {
      const MomentumIndex n = lattice.unflatten(i);
      bool allowed = true;
      for (int a = 0; a < lattice.dim(); ++a) {
        if (std::abs(q[a]) > lattice.n_max() - std::abs(n[a])) {
          allowed = false;
          break;
        }
      }
      if (!allowed) continue;
      const double v = std::sqrt(rate) * weight;
      values(static_cast<Eigen::Index>(i)) = v;
      max_value = std::max(max_value, v);
    }
    if (max_value < 1e-14) continue;
    terms.push_back(GeneratorTerm{0, q, std::move(values)});
  }
  return LindbladGenerator(lattice, std::move(terms));
}

LindbladGenerator build_momentum_diagonal_generator(const BoxLattice& lattice,
                                                    const Eigen::MatrixXcd& values) {
  if (values.rows() < 1 || values.cols() != static_cast<Eigen::Index>(lattice.basis_size())) {
    throw std::invalid_argument("value table must be num_ops x basis_size");
  }
  std::vector<GeneratorTerm> terms;
  terms.reserve(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index j = 0; j < values.rows(); ++j) {
    terms.push_back(GeneratorTerm{static_cast<int>(j), MomentumIndex::zero(lattice.dim()),
                                  values.row(j).transpose()});
  }
  return LindbladGenerator(lattice, std::move(terms));
}

}  // namespace covdiff
