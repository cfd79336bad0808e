#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "covdiff/lattice.hpp"
#include "covdiff/states.hpp"

namespace covdiff {

// One jump family of a translation-covariant generator: the operator
// shifts momentum by the transfer and multiplies each source mode n by
// values(n).  Entries whose target leaves the window must be zero; the
// anticommutator rate table is built from the same stored values, which
// keeps the generator exactly trace-free on the truncated window.
struct GeneratorTerm {
  int label = 0;            // j
  MomentumIndex transfer;   // momentum transfer in lattice units
  Eigen::VectorXcd values;  // L_j(transfer, n) per flat source mode
};

class LindbladGenerator {
 public:
  LindbladGenerator(BoxLattice lattice, std::vector<GeneratorTerm> terms,
                    std::optional<Eigen::MatrixXcd> hamiltonian = std::nullopt);

  const BoxLattice& lattice() const { return lattice_; }
  const std::vector<GeneratorTerm>& terms() const { return terms_; }
  const std::optional<Eigen::MatrixXcd>& hamiltonian() const { return hamiltonian_; }

  // (2 pi hbar / L)^dim, the discrete measure of the transfer sum.  It is
  // kept explicit so jump values and rate tables keep their continuum units.
  double measure_factor() const { return measure_; }
  // measure * sum_{j,q} |values(n)|^2 per source mode.
  const Eigen::VectorXd& rate_diagonal() const { return rate_diagonal_; }

  // Dissipative part: sum of shifted sandwiches minus the anticommutator.
  Eigen::MatrixXcd dissipator(const Eigen::MatrixXcd& rho) const;
  // Full right-hand side including the optional Hamiltonian commutator.
  Eigen::MatrixXcd rhs(const Eigen::MatrixXcd& rho) const;

 private:
  struct TermPlan {
    std::vector<Eigen::Index> src;
    std::vector<Eigen::Index> dst;
  };

  BoxLattice lattice_;
  std::vector<GeneratorTerm> terms_;
  std::optional<Eigen::MatrixXcd> hamiltonian_;
  std::vector<TermPlan> plans_;
  Eigen::VectorXd rate_diagonal_;
  double measure_ = 1.0;
};

// Dissipator as a matrix; traceless and Hermitian within 1e-12.
Eigen::MatrixXcd generator_apply(const LindbladGenerator& gen, const DensityMatrix& rho);

struct MomentRates {
  std::vector<double> dp;   // d<p_a>/dt from the rate sums
  std::vector<double> dp2;  // d<p_a^2>/dt from the rate sums
};

// Moment derivatives evaluated from the rate table f(l, n); these must
// agree with dense traces of generator_apply.
MomentRates moment_rates(const LindbladGenerator& gen, const DensityMatrix& rho);

struct TrajectoryPoint {
  double t = 0.0;
  double trace = 0.0;
  double min_eig = 0.0;
  std::vector<double> mean_p;
  std::vector<double> spread_p;
};

struct EvolutionResult {
  std::vector<TrajectoryPoint> points;  // includes t = 0
  DensityMatrix final_state;
};

// Fixed-step fourth-order Runge-Kutta integration of
// drho/dt = -(i/hbar)[H, rho] + dissipator(rho).  Each recorded state must
// stay Hermitian and unit-trace within 1e-8; an eigenvalue below -1e-6
// aborts with a diagnostic.
EvolutionResult evolve(const LindbladGenerator& gen, const DensityMatrix& rho0, double dt,
                       int n_steps);

struct ZeroDiffusionResult {
  bool is_momentum_diagonal = false;
  double witness_mass = 0.0;       // largest off-center rate entry
  MomentumIndex witness_transfer;  // its transfer
  MomentumIndex witness_source;    // its source mode
};

// True when every nonzero-transfer rate entry measure * |value|^2 stays
// below tol, i.e. the generator moves no momentum.
ZeroDiffusionResult zero_diffusion_reduce(const LindbladGenerator& gen, double tol);

// Localization-rate generator with Gaussian transfer weights (same weight
// table and source-symmetric clipping as the localization channel), flat in
// the source momentum: zero mean-momentum drift, positive diffusion.
LindbladGenerator build_csl_like(const BoxLattice& lattice, double r_c, double rate);

// Pure-dephasing generator: one zero-transfer term per row of values.
LindbladGenerator build_momentum_diagonal_generator(const BoxLattice& lattice,
                                                    const Eigen::MatrixXcd& values);

}  // namespace covdiff
