#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <numbers>
#include <stdexcept>

#include "covdiff/lattice.hpp"

using covdiff::BoxLattice;
using covdiff::MomentumIndex;

TEST_CASE("constructor rejects bad parameters") {
  CHECK_THROWS_AS(BoxLattice(0, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(BoxLattice(4, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(BoxLattice(1, 0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(BoxLattice(1, 4, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(BoxLattice(1, 4, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(BoxLattice(1, 4, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("sizes") {
  const BoxLattice lat1(1, 8, 2.0 * std::numbers::pi);
  CHECK(lat1.side() == 17);
  CHECK(lat1.basis_size() == 17);
  CHECK(lat1.transfer_side() == 33);
  CHECK(lat1.transfer_count() == 33);

  const BoxLattice lat2(2, 2, 1.0);
  CHECK(lat2.basis_size() == 25);
  CHECK(lat2.transfer_count() == 81);

  const BoxLattice lat3(3, 1, 1.0);
  CHECK(lat3.basis_size() == 27);
}

TEST_CASE("flat index is row major with -n_max first") {
  const BoxLattice lat(1, 2, 1.0);
  CHECK(lat.flat_index({-2}) == 0);
  CHECK(lat.flat_index({0}) == 2);
  CHECK(lat.flat_index({2}) == 4);

  const BoxLattice lat2(2, 1, 1.0);
  CHECK(lat2.flat_index({-1, -1}) == 0);
  CHECK(lat2.flat_index({-1, 0}) == 1);
  CHECK(lat2.flat_index({-1, 1}) == 2);
  CHECK(lat2.flat_index({0, -1}) == 3);
  CHECK(lat2.flat_index({1, 1}) == 8);
}

TEST_CASE("flatten and unflatten round trip") {
  const BoxLattice lat(2, 3, 5.0);
  for (std::size_t i = 0; i < lat.basis_size(); ++i) {
    const MomentumIndex n = lat.unflatten(i);
    CHECK(lat.contains(n));
    CHECK(lat.flat_index(n) == i);
  }
  for (std::size_t i = 0; i < lat.transfer_count(); ++i) {
    const MomentumIndex q = lat.transfer_unflatten(i);
    CHECK(lat.valid_transfer(q));
    CHECK(lat.transfer_flat_index(q) == i);
  }
}

TEST_CASE("contains and out-of-range access") {
  const BoxLattice lat(1, 3, 1.0);
  CHECK(lat.contains({3}));
  CHECK(!lat.contains({4}));
  CHECK(!lat.contains({-4}));
  CHECK_THROWS_AS(lat.flat_index({4}), std::out_of_range);

  CHECK(lat.valid_transfer({6}));
  CHECK(!lat.valid_transfer({7}));
  CHECK_THROWS_AS(lat.transfer_flat_index({7}), std::out_of_range);
}

TEST_CASE("momentum values scale with 2 pi hbar / L") {
  const double length = 3.0;
  const double hbar = 0.5;
  const BoxLattice lat(1, 4, length, hbar);
  const double unit = 2.0 * std::numbers::pi * hbar / length;
  CHECK(lat.momentum_quantum() == doctest::Approx(unit).epsilon(1e-15));
  CHECK(lat.momentum_component({3}, 0) == doctest::Approx(3.0 * unit).epsilon(1e-15));
  CHECK(lat.momentum_value({-2})[0] == doctest::Approx(-2.0 * unit).epsilon(1e-15));
}

TEST_CASE("index arithmetic") {
  const MomentumIndex a{1, -2};
  const MomentumIndex b{3, 5};
  CHECK((a + b) == MomentumIndex{4, 3});
  CHECK((b - a) == MomentumIndex{2, 7});
  CHECK(covdiff::to_string(a) == "(1,-2)");
  CHECK(MomentumIndex::zero(2).dim == 2);
}
