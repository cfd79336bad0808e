#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <vector>

#include "covdiff/lattice.hpp"
#include "covdiff/states.hpp"

namespace covdiff {

// One fixed-transfer piece of a covariant channel: the Kraus operator
// A_{k,q} = sum_n g(n) |n+q><n| with g indexed by the flat source mode.
// Entries whose target n+q leaves the window must be zero.
struct TransferBlock {
  int kraus_id = 0;
  MomentumIndex transfer;
  Eigen::VectorXcd gains;
};

// Completely positive trace-preserving map commuting with all spatial
// translations, stored transfer-decomposed: distinct (kraus_id, transfer)
// pieces act incoherently, which makes covariance exact by construction.
// The constructor enforces the completeness sum over every source mode,
// sum_{k,q} |g_{k,q}(n)|^2 = 1 within 1e-10.
class CovariantChannel {
 public:
  CovariantChannel(BoxLattice lattice, std::vector<TransferBlock> blocks);

  const BoxLattice& lattice() const { return lattice_; }
  const std::vector<TransferBlock>& blocks() const { return blocks_; }
  double completeness_deviation() const { return completeness_deviation_; }

  DensityMatrix apply(const DensityMatrix& rho) const;
  // Linear action on an arbitrary matrix (no state validation); this is the
  // extension used for positivity checks on a doubled space.
  Eigen::MatrixXcd apply_matrix(const Eigen::MatrixXcd& m) const;

 private:
  struct BlockPlan {
    std::vector<Eigen::Index> src;
    std::vector<Eigen::Index> dst;
  };

  BoxLattice lattice_;
  std::vector<TransferBlock> blocks_;
  std::vector<BlockPlan> plans_;
  double completeness_deviation_ = 0.0;
};

// General Kraus channel with dense operators, sum_k A_k^dag A_k = 1 within
// 1e-10.  Used as the pre-averaging form and for covariance probing.
class DenseKrausChannel {
 public:
  DenseKrausChannel(BoxLattice lattice, std::vector<Eigen::MatrixXcd> operators);

  const BoxLattice& lattice() const { return lattice_; }
  const std::vector<Eigen::MatrixXcd>& operators() const { return operators_; }

  DensityMatrix apply(const DensityMatrix& rho) const;
  Eigen::MatrixXcd apply_matrix(const Eigen::MatrixXcd& m) const;

 private:
  BoxLattice lattice_;
  std::vector<Eigen::MatrixXcd> operators_;
};

// Diagonal of exp(-i p.x / hbar) in the momentum basis.
Eigen::VectorXcd translation_phases(const BoxLattice& lattice, const std::array<double, 3>& x);

// Uniform average of the channel over all box translations: extracts the
// fixed-transfer diagonals g_{k,q}(n) = <n+q|A_k|n>.  Blocks with
// max |g| < 1e-14 are dropped and the q = 0 blocks are rescaled per source
// to keep completeness exact; the dropped per-source mass is reported
// through max_dropped_mass when given.
CovariantChannel covariant_average(const DenseKrausChannel& dense,
                                   double* max_dropped_mass = nullptr);

// Expands each transfer block into its dense Kraus operator, in block order.
DenseKrausChannel densify(const CovariantChannel& channel);

// Largest entry-wise deviation between translating before and after the
// channel, maximized over the displacements and a fixed probe set (all
// adjacent two-mode superpositions plus three seeded random mixed states).
double covariance_check(const DenseKrausChannel& channel,
                        std::span<const std::array<double, 3>> displacements);

CovariantChannel build_identity(const BoxLattice& lattice);
// Spatial displacement by a: multiplies mode n by exp(i p(n).a / hbar).
CovariantChannel build_boost(const BoxLattice& lattice, const std::array<double, 3>& a);
CovariantChannel build_free_evolution(const BoxLattice& lattice, double t, double mass);

// One momentum-diagonal Kraus operator per row of c: gains
// sqrt(c(k, n)) * exp(i phi(k, n)), with sum_k c(k, n) = 1 per source.
CovariantChannel build_momentum_diagonal(const BoxLattice& lattice, const Eigen::MatrixXd& c,
                                         const Eigen::MatrixXd& phi);

// Spontaneous-localization channel: Gaussian momentum-transfer weights
// w(q) ~ exp(-(q_tilde r_c)^2 / (2 hbar^2)) with images summed over five
// window periods each side and sum_q w(q)^2 = 1.  Each source keeps the
// transfers whose mirror image also fits the window and renormalizes over
// them, so the transfer weights stay even in q for every source and the
// channel conserves mean momentum exactly.  strength < 1 mixes in the
// identity with weight 1 - strength.
CovariantChannel build_grw(const BoxLattice& lattice, double r_c, double strength = 1.0);

enum class BoostMode { Constant, Reflecting };
// Boundary handling for momentum shifts that would leave the window:
// Reject throws, Wrap rolls the target around the window.  Wrapping
// permutes the mode populations cyclically, but the rolled piece carries a
// different transfer and distinct transfers act incoherently, so coherence
// across the seam is dropped.
enum class BoundaryPolicy { Reject, Wrap };

// Single-Kraus channel shifting each mode n by gamma(n): constant mode
// gamma_j(n) = gamma_j, reflecting mode gamma_j(n) = gamma_j - 2 n_j.
CovariantChannel build_boost_family(const BoxLattice& lattice, const MomentumIndex& gamma,
                                    BoostMode mode,
                                    BoundaryPolicy boundary = BoundaryPolicy::Reject);

}  // namespace covdiff
