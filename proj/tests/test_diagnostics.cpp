#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "covdiff/channel_io.hpp"
#include "covdiff/channels.hpp"
#include "covdiff/diagnostics.hpp"
#include "covdiff/random_channels.hpp"
#include "covdiff/rng.hpp"
#include "covdiff/states.hpp"

using namespace covdiff;

namespace {

const BoxLattice kLat(1, 4, 2.0 * std::numbers::pi);

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

void check_full_matches_direct(const CovariantChannel& channel, const DensityMatrix& rho) {
  for (int axis = 0; axis < channel.lattice().dim(); ++axis) {
    const double d_full = momentum_shift(channel, rho, axis);
    const double d_direct = momentum_shift_direct(channel, rho, axis);
    CHECK(close(d_full, d_direct, 1e-10));

    const AxisDiffusion full = spread_change_full(channel, rho, axis);
    const AxisDiffusion direct = spread_change_direct(channel, rho, axis);
    CHECK(close(full.d, direct.d, 1e-10));
    CHECK(close(full.D, direct.D, 1e-10 * std::max(1.0, std::abs(full.D))));
    CHECK(close(full.delta, direct.delta, 1e-10 * std::max(1.0, std::abs(full.delta))));

    // delta is defined through d, D and the input mean
    const double mean = mean_momentum(rho, axis);
    CHECK(close(full.delta, full.D - full.d * full.d - 2.0 * mean * full.d, 1e-12));
  }
}

}  // namespace

TEST_CASE("transfer distribution validates and exposes moments") {
  const std::size_t count = kLat.transfer_count();
  std::vector<double> table(count, 0.0);
  table[kLat.transfer_flat_index({0})] = 0.5;
  table[kLat.transfer_flat_index({2})] = 0.25;
  table[kLat.transfer_flat_index({-2})] = 0.25;
  const TransferDistribution dist(kLat, {0}, table);

  const double u = kLat.momentum_quantum();
  CHECK(dist.prob({2}) == 0.25);
  CHECK(dist.prob({0}) == 0.5);
  CHECK(dist.off_center_mass() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(dist.moment(0, 1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(dist.moment(0, 2) == doctest::Approx(2.0 * u * u).epsilon(1e-14));
  CHECK(dist.variance(0) == doctest::Approx(2.0 * u * u).epsilon(1e-14));

  const std::vector<double> marg = dist.marginal(0);
  REQUIRE(marg.size() == static_cast<std::size_t>(kLat.transfer_side()));
  CHECK(marg[static_cast<std::size_t>(2 * kLat.n_max())] == 0.5);

  CHECK_THROWS_AS(TransferDistribution(kLat, {9}, table), std::invalid_argument);
  CHECK_THROWS_AS(TransferDistribution(kLat, {0}, std::vector<double>(count - 1, 0.0)),
                  std::invalid_argument);
  std::vector<double> negative = table;
  negative[0] = -0.1;
  negative[kLat.transfer_flat_index({0})] += 0.1;
  CHECK_THROWS_AS(TransferDistribution(kLat, {0}, negative), std::invalid_argument);
  std::vector<double> short_mass(count, 0.0);
  short_mass[kLat.transfer_flat_index({0})] = 0.9;
  CHECK_THROWS_AS(TransferDistribution(kLat, {0}, short_mass), std::invalid_argument);
  CHECK_THROWS_AS(dist.moment(1, 2), std::out_of_range);
}

TEST_CASE("localization transfer table matches the frozen reference") {
  const io::RawChannelData golden = io::load_channel_raw(COVDIFF_GOLDEN_TABLE);
  const BoxLattice& lat = golden.lattice;
  REQUIRE(lat.n_max() == 8);

  const CovariantChannel grw = build_grw(lat, 1.0);
  const TransferDistribution dist = transfer_distribution(grw, MomentumIndex::zero(1));

  const std::size_t source_flat = lat.flat_index(MomentumIndex::zero(1));
  for (const TransferBlock& block : golden.blocks) {
    const double expected = std::norm(block.gains(static_cast<Eigen::Index>(source_flat)));
    CHECK(close(dist.prob(block.transfer), expected, 1e-12));
  }
  CHECK(dist.moment(0, 1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(dist.variance(0) > 0.1);
}

TEST_CASE("transfer-sum diagnostics agree with applying the channel") {
  RandomStream rng(2026);

  std::vector<CovariantChannel> channels;
  channels.push_back(build_grw(kLat, 1.0));
  channels.push_back(build_grw(kLat, 2.0, 0.5));
  channels.push_back(build_identity(kLat));
  channels.push_back(build_boost_family(kLat, {1}, BoostMode::Constant, BoundaryPolicy::Wrap));
  channels.push_back(build_boost_family(kLat, MomentumIndex::zero(1), BoostMode::Reflecting));
  channels.push_back(random_momentum_diagonal_channel(kLat, 3, rng));
  for (int j = 0; j < 4; ++j) {
    DiffusiveChannelOptions opts;
    opts.max_transfer = 1 + j % 2;
    opts.momentum_conserving = (j % 2 == 0);
    channels.push_back(random_diffusive_channel(kLat, opts, rng));
  }

  std::vector<DensityMatrix> states;
  states.push_back(from_pure(PureState::plane_wave(kLat, {3})));
  states.push_back(from_pure(PureState::plane_wave(kLat, {-4})));
  const std::pair<Complex, MomentumIndex> terms[] = {{Complex(1.0, 0.0), {1}},
                                                     {Complex(0.0, 1.0), {2}}};
  states.push_back(from_pure(PureState::superposition(kLat, terms)));
  for (int i = 0; i < 3; ++i) states.push_back(random_density_matrix(kLat, rng));

  for (const CovariantChannel& channel : channels) {
    for (const DensityMatrix& rho : states) check_full_matches_direct(channel, rho);
  }
}

TEST_CASE("diagnostics agree in two dimensions") {
  const BoxLattice lat2(2, 2, 5.0);
  RandomStream rng(7);
  DiffusiveChannelOptions opts;
  opts.momentum_conserving = false;
  const CovariantChannel channel = random_diffusive_channel(lat2, opts, rng);
  for (int i = 0; i < 3; ++i) {
    check_full_matches_direct(channel, random_density_matrix(lat2, rng));
  }
}

TEST_CASE("classification matches construction") {
  CHECK(classify_channel(build_identity(kLat)) == ChannelClass::MomentumDiagonal);
  CHECK(classify_channel(build_free_evolution(kLat, 0.3, 1.0)) == ChannelClass::MomentumDiagonal);
  RandomStream rng(8);
  CHECK(classify_channel(random_momentum_diagonal_channel(kLat, 4, rng)) ==
        ChannelClass::MomentumDiagonal);
  CHECK(classify_channel(build_boost(kLat, {0.3, 0.0, 0.0})) == ChannelClass::MomentumDiagonal);

  CHECK(classify_channel(build_boost_family(kLat, {1}, BoostMode::Constant,
                                            BoundaryPolicy::Wrap)) == ChannelClass::PureBoost);
  CHECK(classify_channel(build_boost_family(kLat, MomentumIndex::zero(1),
                                            BoostMode::Reflecting)) == ChannelClass::PureBoost);

  CHECK(classify_channel(build_grw(kLat, 1.0)) == ChannelClass::Diffusive);
  DiffusiveChannelOptions opts;
  CHECK(classify_channel(random_diffusive_channel(kLat, opts, rng)) == ChannelClass::Diffusive);

  CHECK(to_string(ChannelClass::MomentumDiagonal) == "MomentumDiagonal");
  CHECK(to_string(ChannelClass::PureBoost) == "PureBoost");
  CHECK(to_string(ChannelClass::Diffusive) == "Diffusive");
}

TEST_CASE("diffusion report carries class and per-axis numbers") {
  const CovariantChannel grw = build_grw(kLat, 1.0);
  const DensityMatrix plane = from_pure(PureState::plane_wave(kLat, {0}));
  const DiffusionReport report = diffusion_report(grw, plane);
  REQUIRE(report.axes.size() == 1);
  CHECK(report.channel_class == ChannelClass::Diffusive);
  CHECK(report.axes[0].delta > 0.0);
  CHECK(std::abs(report.axes[0].d) < 1e-14);
}

TEST_CASE("probe suite covers planes, pairs and random states") {
  const auto probes = probe_suite(kLat, 99, 5);
  const std::size_t side = static_cast<std::size_t>(kLat.side());
  CHECK(probes.size() == side + (side - 1) + 5);
  std::set<std::string> ids;
  for (const auto& [id, rho] : probes) {
    ids.insert(id);
    CHECK(std::abs(rho.matrix().trace().real() - 1.0) < 1e-12);
  }
  CHECK(ids.size() == probes.size());

  // same seed reproduces the same states bitwise
  const auto again = probe_suite(kLat, 99, 5);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    CHECK((probes[i].second.matrix() - again[i].second.matrix()).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("populated sources force their transfer variance on every state") {
  const CovariantChannel grw = build_grw(kLat, 1.0);
  const auto probes = probe_suite(kLat, 5, 10);
  const InheritanceReport report = diffusion_inheritance(grw, MomentumIndex::zero(1), probes);
  CHECK(report.all_satisfied);
  CHECK(report.source_variance.size() == 1);
  CHECK(report.source_variance[0] > 0.0);
  for (const InheritanceEntry& entry : report.entries) {
    CHECK(entry.satisfied);
    CHECK(entry.inherited + 1e-12 >= entry.lower_bound);
  }

  // a source that never moves has nothing to inherit
  CHECK_THROWS_AS(
      diffusion_inheritance(build_identity(kLat), MomentumIndex::zero(1), probes),
      std::invalid_argument);
}

TEST_CASE("csv writer emits one row per diagnostic") {
  const std::filesystem::path path =
      std::filesystem::temp_directory_path() / "covdiff_diag_test.csv";
  std::vector<DiffusionCsvRow> rows(2);
  rows[0] = {"chan_a", "plane_0", 0, 0.0, 0.5, 0.5, ChannelClass::Diffusive};
  rows[1] = {"chan_b", "mix_1", 0, -0.125, 0.0625, 0.25, ChannelClass::PureBoost};
  write_diffusion_csv(path, rows);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "channel_id,state_id,axis,d,D,delta,class");
  std::getline(in, line);
  CHECK(line.find("chan_a,plane_0,0,") == 0);
  std::getline(in, line);
  CHECK(line.find("-0.125") != std::string::npos);
  CHECK(line.find("PureBoost") != std::string::npos);
  std::filesystem::remove(path);
}
