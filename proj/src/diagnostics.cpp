#include "covdiff/diagnostics.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "covdiff/format.hpp"
#include "covdiff/rng.hpp"

namespace covdiff {

namespace {

// First and second transfer moments per source mode, one pass over blocks.
struct SourceMoments {
  Eigen::MatrixXd m1;  // basis x dim
  Eigen::MatrixXd m2;
};

SourceMoments per_source_moments(const CovariantChannel& channel) {
  const BoxLattice& lattice = channel.lattice();
  const auto basis = static_cast<Eigen::Index>(lattice.basis_size());
  SourceMoments moments{Eigen::MatrixXd::Zero(basis, lattice.dim()),
                        Eigen::MatrixXd::Zero(basis, lattice.dim())};
  for (const auto& block : channel.blocks()) {
    for (int axis = 0; axis < lattice.dim(); ++axis) {
      const double q_tilde = lattice.momentum_quantum() * block.transfer[axis];
      if (q_tilde == 0.0) continue;
      for (Eigen::Index i = 0; i < basis; ++i) {
        const double mass = std::norm(block.gains(i));
        if (mass == 0.0) continue;
        moments.m1(i, axis) += mass * q_tilde;
        moments.m2(i, axis) += mass * q_tilde * q_tilde;
      }
    }
  }
  return moments;
}

bool congruent_mod(int a, int b, int period) {
  return (a - b) % period == 0;
}

}  // namespace

TransferDistribution::TransferDistribution(BoxLattice lattice, MomentumIndex source,
                                           std::vector<double> table)
    : lattice_(std::move(lattice)), source_(source), table_(std::move(table)) {
  if (!lattice_.contains(source_)) throw std::invalid_argument("source outside lattice window");
  if (table_.size() != lattice_.transfer_count()) {
    throw std::invalid_argument("transfer table size mismatch");
  }
  double total = 0.0;
  for (double p : table_) {
    if (p < 0.0) throw std::invalid_argument("negative transfer probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-10) {
    throw std::invalid_argument("transfer probabilities sum to " + std::to_string(total));
  }
}

double TransferDistribution::prob(const MomentumIndex& q) const {
  return table_[lattice_.transfer_flat_index(q)];
}

std::vector<double> TransferDistribution::marginal(int axis) const {
  if (axis < 0 || axis >= lattice_.dim()) throw std::out_of_range("axis outside dimension");
  std::vector<double> out(static_cast<std::size_t>(lattice_.transfer_side()), 0.0);
  for (std::size_t t = 0; t < table_.size(); ++t) {
    const MomentumIndex q = lattice_.transfer_unflatten(t);
    out[static_cast<std::size_t>(q[axis] + 2 * lattice_.n_max())] += table_[t];
  }
  return out;
}

double TransferDistribution::moment(int axis, int order) const {
  if (axis < 0 || axis >= lattice_.dim()) throw std::out_of_range("axis outside dimension");
  double sum = 0.0;
  for (std::size_t t = 0; t < table_.size(); ++t) {
    if (table_[t] == 0.0) continue;
    const MomentumIndex q = lattice_.transfer_unflatten(t);
    sum += table_[t] * std::pow(lattice_.momentum_quantum() * q[axis], order);
  }
  return sum;
}

double TransferDistribution::variance(int axis) const {
  const double mean = moment(axis, 1);
  return moment(axis, 2) - mean * mean;
}

double TransferDistribution::off_center_mass() const {
  const std::size_t center = lattice_.transfer_flat_index(MomentumIndex::zero(lattice_.dim()));
  double mass = 0.0;
  for (std::size_t t = 0; t < table_.size(); ++t) {
    if (t != center) mass += table_[t];
  }
  return mass;
}

TransferDistribution transfer_distribution(const CovariantChannel& channel,
                                           const MomentumIndex& source) {
  const BoxLattice& lattice = channel.lattice();
  const auto i = static_cast<Eigen::Index>(lattice.flat_index(source));
  std::vector<double> table(lattice.transfer_count(), 0.0);
  for (const auto& block : channel.blocks()) {
    table[lattice.transfer_flat_index(block.transfer)] += std::norm(block.gains(i));
  }
  return TransferDistribution(lattice, source, std::move(table));
}

std::string to_string(ChannelClass cls) {
  switch (cls) {
    case ChannelClass::MomentumDiagonal:
      return "MomentumDiagonal";
    case ChannelClass::PureBoost:
      return "PureBoost";
    case ChannelClass::Diffusive:
      return "Diffusive";
  }
  return "Diffusive";
}

double momentum_shift(const CovariantChannel& channel, const DensityMatrix& rho, int axis) {
  if (!(rho.lattice() == channel.lattice())) throw std::invalid_argument("lattice mismatch");
  const SourceMoments moments = per_source_moments(channel);
  double shift = 0.0;
  for (Eigen::Index i = 0; i < moments.m1.rows(); ++i) {
    shift += rho.matrix()(i, i).real() * moments.m1(i, axis);
  }
  return shift;
}

AxisDiffusion spread_change_full(const CovariantChannel& channel, const DensityMatrix& rho,
                                 int axis) {
  if (!(rho.lattice() == channel.lattice())) throw std::invalid_argument("lattice mismatch");
  const BoxLattice& lattice = channel.lattice();
  const SourceMoments moments = per_source_moments(channel);
  AxisDiffusion out;
  for (Eigen::Index i = 0; i < moments.m1.rows(); ++i) {
    const double population = rho.matrix()(i, i).real();
    if (population == 0.0) continue;
    const MomentumIndex n = lattice.unflatten(static_cast<std::size_t>(i));
    const double p = lattice.momentum_component(n, axis);
    out.d += population * moments.m1(i, axis);
    out.D += population * (moments.m2(i, axis) + 2.0 * p * moments.m1(i, axis));
  }
  const double mean_p = mean_momentum(rho, axis);
  out.delta = out.D - out.d * out.d - 2.0 * mean_p * out.d;
  return out;
}

double momentum_shift_direct(const CovariantChannel& channel, const DensityMatrix& rho,
                             int axis) {
  return mean_momentum(channel.apply(rho), axis) - mean_momentum(rho, axis);
}

AxisDiffusion spread_change_direct(const CovariantChannel& channel, const DensityMatrix& rho,
                                   int axis) {
  const DensityMatrix out = channel.apply(rho);
  const double mean_in = mean_momentum(rho, axis);
  const double mean_out = mean_momentum(out, axis);
  const double spread_in = momentum_spread(rho, axis);
  const double spread_out = momentum_spread(out, axis);
  AxisDiffusion result;
  result.d = mean_out - mean_in;
  result.D = (spread_out + mean_out * mean_out) - (spread_in + mean_in * mean_in);
  result.delta = spread_out - spread_in;
  return result;
}

ChannelClass classify_channel(const CovariantChannel& channel, double tol) {
  const BoxLattice& lattice = channel.lattice();
  const std::size_t basis = lattice.basis_size();
  const MomentumIndex q0 = MomentumIndex::zero(lattice.dim());

  double max_off_mass = 0.0;
  for (std::size_t i = 0; i < basis; ++i) {
    double off = 0.0;
    for (const auto& block : channel.blocks()) {
      if (block.transfer == q0) continue;
      off += std::norm(block.gains(static_cast<Eigen::Index>(i)));
    }
    max_off_mass = std::max(max_off_mass, off);
  }
  if (max_off_mass <= tol) return ChannelClass::MomentumDiagonal;

  // Dominant transfer per source, with the residual mass bounded by tol.
  std::vector<MomentumIndex> shift(basis, q0);
  for (std::size_t i = 0; i < basis; ++i) {
    const TransferDistribution dist = transfer_distribution(channel, lattice.unflatten(i));
    double best = -1.0;
    MomentumIndex best_q = q0;
    for (std::size_t t = 0; t < dist.table().size(); ++t) {
      if (dist.table()[t] > best) {
        best = dist.table()[t];
        best_q = lattice.transfer_unflatten(t);
      }
    }
    if (1.0 - best > tol) return ChannelClass::Diffusive;
    shift[i] = best_q;
  }
  const int period = lattice.side();
  for (int axis = 0; axis < lattice.dim(); ++axis) {
    bool constant_ok = true;
    bool reflect_ok = true;
    const MomentumIndex first = lattice.unflatten(0);
    const int const_ref = shift[0][axis];
    const int reflect_ref = shift[0][axis] + 2 * first[axis];
    for (std::size_t i = 1; i < basis; ++i) {
      const MomentumIndex n = lattice.unflatten(i);
      if (!congruent_mod(shift[i][axis], const_ref, period)) constant_ok = false;
      if (!congruent_mod(shift[i][axis] + 2 * n[axis], reflect_ref, period)) reflect_ok = false;
      if (!constant_ok && !reflect_ok) return ChannelClass::Diffusive;
    }
  }
  return ChannelClass::PureBoost;
}

DiffusionReport diffusion_report(const CovariantChannel& channel, const DensityMatrix& rho,
                                 double class_tol) {
  DiffusionReport report;
  for (int axis = 0; axis < channel.lattice().dim(); ++axis) {
    report.axes.push_back(spread_change_full(channel, rho, axis));
  }
  report.channel_class = classify_channel(channel, class_tol);
  return report;
}

std::vector<std::pair<std::string, DensityMatrix>> probe_suite(const BoxLattice& lattice,
                                                               std::uint64_t seed, int n_random) {
  std::vector<std::pair<std::string, DensityMatrix>> probes;
  const std::size_t basis = lattice.basis_size();
  for (std::size_t i = 0; i < basis; ++i) {
    const MomentumIndex n = lattice.unflatten(i);
    probes.emplace_back("plane:" + to_string(n),
                        from_pure(PureState::plane_wave(lattice, n)));
  }
  for (int axis = 0; axis < lattice.dim(); ++axis) {
    MomentumIndex step = MomentumIndex::zero(lattice.dim());
    step[axis] = 1;
    for (std::size_t i = 0; i < basis; ++i) {
      const MomentumIndex n = lattice.unflatten(i);
      if (!lattice.contains(n + step)) continue;
      const std::pair<Complex, MomentumIndex> terms[] = {{Complex(1.0, 0.0), n},
                                                         {Complex(1.0, 0.0), n + step}};
      probes.emplace_back("pair:" + to_string(n) + "+" + to_string(n + step),
                          from_pure(PureState::superposition(lattice, terms)));
    }
  }
  for (int r = 0; r < n_random; ++r) {
    RandomStream rng = RandomStream::substream(seed, static_cast<std::uint64_t>(r));
    probes.emplace_back("random:" + std::to_string(r), random_density_matrix(lattice, rng));
  }
  return probes;
}

InheritanceReport diffusion_inheritance(
    const CovariantChannel& channel, const MomentumIndex& source,
    std::span<const std::pair<std::string, DensityMatrix>> states) {
  const BoxLattice& lattice = channel.lattice();
  const TransferDistribution dist = transfer_distribution(channel, source);
  double total_second_moment = 0.0;
  for (int axis = 0; axis < lattice.dim(); ++axis) total_second_moment += dist.moment(axis, 2);
  if (!(total_second_moment > 0.0)) {
    throw std::invalid_argument("source mode has no transfer spread to inherit");
  }

  InheritanceReport report;
  report.source = source;
  for (int axis = 0; axis < lattice.dim(); ++axis) {
    report.source_variance.push_back(dist.variance(axis));
  }

  const SourceMoments moments = per_source_moments(channel);
  const auto source_flat = static_cast<Eigen::Index>(lattice.flat_index(source));
  report.all_satisfied = true;
  for (const auto& [state_id, rho] : states) {
    if (!(rho.lattice() == lattice)) throw std::invalid_argument("lattice mismatch");
    const double overlap = rho.matrix()(source_flat, source_flat).real();
    for (int axis = 0; axis < lattice.dim(); ++axis) {
      InheritanceEntry entry;
      entry.state_id = state_id;
      entry.axis = axis;
      entry.overlap = overlap;
      entry.lower_bound = overlap * report.source_variance[static_cast<std::size_t>(axis)];
      double inherited = 0.0;
      for (Eigen::Index i = 0; i < moments.m2.rows(); ++i) {
        inherited += rho.matrix()(i, i).real() * moments.m2(i, axis);
      }
      entry.inherited = inherited;
      entry.satisfied = inherited >= entry.lower_bound - 1e-12;
      if (!entry.satisfied) report.all_satisfied = false;
      report.entries.push_back(std::move(entry));
    }
  }
  return report;
}

void write_diffusion_csv(const std::filesystem::path& path,
                         std::span<const DiffusionCsvRow> rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "channel_id,state_id,axis,d,D,delta,class\n";
  for (const auto& row : rows) {
    out << row.channel_id << ',' << row.state_id << ',' << row.axis << ','
        << format_float(row.d) << ',' << format_float(row.D) << ',' << format_float(row.delta)
        << ',' << to_string(row.cls) << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace covdiff
