#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "covdiff/channels.hpp"
#include "covdiff/lattice.hpp"
#include "covdiff/states.hpp"

namespace covdiff {

// Probability distribution P(q, n) over the momentum transfer q out of one
// source mode n; nonnegative and summing to 1 within 1e-10.
class TransferDistribution {
 public:
  TransferDistribution(BoxLattice lattice, MomentumIndex source, std::vector<double> table);

  const BoxLattice& lattice() const { return lattice_; }
  const MomentumIndex& source() const { return source_; }
  const std::vector<double>& table() const { return table_; }  // transfer-flat order

  double prob(const MomentumIndex& q) const;
  std::vector<double> marginal(int axis) const;  // over q_axis in [-2 n_max, 2 n_max]
  double moment(int axis, int order) const;      // sum_q P(q) q_tilde_axis^order
  double variance(int axis) const;
  double off_center_mass() const;  // total mass outside q = 0

 private:
  BoxLattice lattice_;
  MomentumIndex source_;
  std::vector<double> table_;
};

TransferDistribution transfer_distribution(const CovariantChannel& channel,
                                           const MomentumIndex& source);

enum class ChannelClass { MomentumDiagonal, PureBoost, Diffusive };
std::string to_string(ChannelClass cls);

struct AxisDiffusion {
  double d = 0.0;      // mean momentum change along the axis
  double D = 0.0;      // second-moment change, transfer-square plus cross term
  double delta = 0.0;  // variance change, delta = D - d^2 - 2 <p> d
};

// Mean momentum kick per application, from the transfer sums.
double momentum_shift(const CovariantChannel& channel, const DensityMatrix& rho, int axis);

// Full diffusion diagnostics from the transfer sums, including the cross
// term that appears when the mean momentum is not conserved.
AxisDiffusion spread_change_full(const CovariantChannel& channel, const DensityMatrix& rho,
                                 int axis);

// Same quantities evaluated by applying the channel and differencing the
// moments; the transfer sums must agree with these.
double momentum_shift_direct(const CovariantChannel& channel, const DensityMatrix& rho, int axis);
AxisDiffusion spread_change_direct(const CovariantChannel& channel, const DensityMatrix& rho,
                                   int axis);

// Pattern classification on the stored gains.  MomentumDiagonal: all mass
// at q = 0 within tol per source.  PureBoost: each source feeds a single
// transfer and, per axis independently, the shift is constant or reflecting
// (gamma - 2 n); the match is taken modulo the window size because shifts
// roll around the truncated window.  Everything else is Diffusive.
ChannelClass classify_channel(const CovariantChannel& channel, double tol = 1e-9);

struct DiffusionReport {
  std::vector<AxisDiffusion> axes;
  ChannelClass channel_class = ChannelClass::Diffusive;
};

DiffusionReport diffusion_report(const CovariantChannel& channel, const DensityMatrix& rho,
                                 double class_tol = 1e-9);

// Named probe states: every plane wave, every adjacent equal two-mode
// superposition, then n_random seeded random mixed states.
std::vector<std::pair<std::string, DensityMatrix>> probe_suite(const BoxLattice& lattice,
                                                               std::uint64_t seed,
                                                               int n_random = 20);

struct InheritanceEntry {
  std::string state_id;
  int axis = 0;
  double overlap = 0.0;      // <n0|rho|n0>
  double lower_bound = 0.0;  // overlap * Var_P(n0)
  double inherited = 0.0;    // sum_n <n|rho|n> * second_moment(n), all terms >= 0
  bool satisfied = false;
};

struct InheritanceReport {
  MomentumIndex source;
  std::vector<double> source_variance;  // per axis
  std::vector<InheritanceEntry> entries;
  bool all_satisfied = false;
};

// Every state that populates the source mode inherits at least the source's
// transfer variance, weighted by the population.
InheritanceReport diffusion_inheritance(
    const CovariantChannel& channel, const MomentumIndex& source,
    std::span<const std::pair<std::string, DensityMatrix>> states);

struct DiffusionCsvRow {
  std::string channel_id;
  std::string state_id;
  int axis = 0;
  double d = 0.0;
  double D = 0.0;
  double delta = 0.0;
  ChannelClass cls = ChannelClass::Diffusive;
};

void write_diffusion_csv(const std::filesystem::path& path,
                         std::span<const DiffusionCsvRow> rows);

}  // namespace covdiff
