#include "covdiff/lattice.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace covdiff {

MomentumIndex::MomentumIndex(std::initializer_list<int> values) {
  if (values.size() < 1 || values.size() > 3) {
    throw std::invalid_argument("momentum index needs 1 to 3 components");
  }
  dim = static_cast<int>(values.size());
  int axis = 0;
  for (int v : values) c[static_cast<std::size_t>(axis++)] = v;
}

MomentumIndex MomentumIndex::from(std::span<const int> values) {
  if (values.size() < 1 || values.size() > 3) {
    throw std::invalid_argument("momentum index needs 1 to 3 components");
  }
  MomentumIndex n;
  n.dim = static_cast<int>(values.size());
  for (int a = 0; a < n.dim; ++a) n.c[static_cast<std::size_t>(a)] = values[static_cast<std::size_t>(a)];
  return n;
}

MomentumIndex MomentumIndex::zero(int dim) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("dim must be 1, 2 or 3");
  MomentumIndex n;
  n.dim = dim;
  return n;
}

MomentumIndex operator+(const MomentumIndex& a, const MomentumIndex& b) {
  if (a.dim != b.dim) throw std::invalid_argument("dimension mismatch");
  MomentumIndex r = a;
  for (int ax = 0; ax < a.dim; ++ax) r[ax] += b[ax];
  return r;
}

MomentumIndex operator-(const MomentumIndex& a, const MomentumIndex& b) {
  if (a.dim != b.dim) throw std::invalid_argument("dimension mismatch");
  MomentumIndex r = a;
  for (int ax = 0; ax < a.dim; ++ax) r[ax] -= b[ax];
  return r;
}

std::string to_string(const MomentumIndex& n) {
  std::string s = "(";
  for (int a = 0; a < n.dim; ++a) {
    if (a > 0) s += ",";
    s += std::to_string(n[a]);
  }
  return s + ")";
}

BoxLattice::BoxLattice(int dim, int n_max, double box_length, double hbar)
    : dim_(dim), n_max_(n_max), box_length_(box_length), hbar_(hbar) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("dim must be 1, 2 or 3");
  if (n_max < 1) throw std::invalid_argument("n_max must be positive");
  if (!(box_length > 0.0)) throw std::invalid_argument("box_length must be positive");
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
  basis_size_ = 1;
  transfer_count_ = 1;
  for (int a = 0; a < dim_; ++a) {
    basis_size_ *= static_cast<std::size_t>(side());
    transfer_count_ *= static_cast<std::size_t>(transfer_side());
  }
}

double BoxLattice::momentum_quantum() const {
  return 2.0 * std::numbers::pi * hbar_ / box_length_;
}

bool BoxLattice::contains(const MomentumIndex& n) const {
  if (n.dim != dim_) return false;
  for (int a = 0; a < dim_; ++a) {
    if (n[a] < -n_max_ || n[a] > n_max_) return false;
  }
  return true;
}

std::size_t BoxLattice::flat_index(const MomentumIndex& n) const {
  if (!contains(n)) {
    throw std::out_of_range("momentum index " + to_string(n) + " outside lattice window");
  }
  std::size_t index = 0;
  for (int a = 0; a < dim_; ++a) {
    index = index * static_cast<std::size_t>(side()) + static_cast<std::size_t>(n[a] + n_max_);
  }
  return index;
}

MomentumIndex BoxLattice::unflatten(std::size_t index) const {
  if (index >= basis_size_) throw std::out_of_range("flat index outside basis");
  MomentumIndex n = MomentumIndex::zero(dim_);
  for (int a = dim_ - 1; a >= 0; --a) {
    n[a] = static_cast<int>(index % static_cast<std::size_t>(side())) - n_max_;
    index /= static_cast<std::size_t>(side());
  }
  return n;
}

double BoxLattice::momentum_component(const MomentumIndex& n, int axis) const {
  if (axis < 0 || axis >= dim_) throw std::out_of_range("axis outside dimension");
  return momentum_quantum() * n[axis];
}

std::array<double, 3> BoxLattice::momentum_value(const MomentumIndex& n) const {
  if (n.dim != dim_) throw std::invalid_argument("dimension mismatch");
  std::array<double, 3> p{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) p[static_cast<std::size_t>(a)] = momentum_quantum() * n[a];
  return p;
}

bool BoxLattice::valid_transfer(const MomentumIndex& q) const {
  if (q.dim != dim_) return false;
  for (int a = 0; a < dim_; ++a) {
    if (q[a] < -2 * n_max_ || q[a] > 2 * n_max_) return false;
  }
  return true;
}

std::size_t BoxLattice::transfer_flat_index(const MomentumIndex& q) const {
  if (!valid_transfer(q)) {
    throw std::out_of_range("transfer " + to_string(q) + " outside transfer window");
  }
  std::size_t index = 0;
  for (int a = 0; a < dim_; ++a) {
    index = index * static_cast<std::size_t>(transfer_side()) +
            static_cast<std::size_t>(q[a] + 2 * n_max_);
  }
  return index;
}

MomentumIndex BoxLattice::transfer_unflatten(std::size_t index) const {
  if (index >= transfer_count_) throw std::out_of_range("flat index outside transfer window");
  MomentumIndex q = MomentumIndex::zero(dim_);
  for (int a = dim_ - 1; a >= 0; --a) {
    q[a] = static_cast<int>(index % static_cast<std::size_t>(transfer_side())) - 2 * n_max_;
    index /= static_cast<std::size_t>(transfer_side());
  }
  return q;
}

}  // namespace covdiff
