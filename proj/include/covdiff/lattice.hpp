#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>

namespace covdiff {

// Integer label of a momentum mode or of a momentum transfer.  Components
// beyond dim stay zero so defaulted comparison covers the whole array.
struct MomentumIndex {
  std::array<int, 3> c{0, 0, 0};
  int dim = 1;

  MomentumIndex() = default;
  MomentumIndex(std::initializer_list<int> values);
  static MomentumIndex from(std::span<const int> values);
  static MomentumIndex zero(int dim);

  int operator[](int axis) const { return c[static_cast<std::size_t>(axis)]; }
  int& operator[](int axis) { return c[static_cast<std::size_t>(axis)]; }

  friend bool operator==(const MomentumIndex&, const MomentumIndex&) = default;
};

MomentumIndex operator+(const MomentumIndex& a, const MomentumIndex& b);
MomentumIndex operator-(const MomentumIndex& a, const MomentumIndex& b);
std::string to_string(const MomentumIndex& n);

// Single particle in a periodic box of size box_length: momenta are
// quantized as (2 pi hbar / box_length) * n with each component of n
// truncated to [-n_max, n_max].  Flat indices run row-major with component
// 0 most significant and -n_max first, e.g. dim=1, n_max=2 maps n=(-2) to 0
// and n=(0) to 2.
class BoxLattice {
 public:
  BoxLattice(int dim, int n_max, double box_length, double hbar = 1.0);

  int dim() const { return dim_; }
  int n_max() const { return n_max_; }
  double box_length() const { return box_length_; }
  double hbar() const { return hbar_; }

  int side() const { return 2 * n_max_ + 1; }
  std::size_t basis_size() const { return basis_size_; }
  double momentum_quantum() const;  // 2 pi hbar / box_length

  bool contains(const MomentumIndex& n) const;
  std::size_t flat_index(const MomentumIndex& n) const;
  MomentumIndex unflatten(std::size_t index) const;

  double momentum_component(const MomentumIndex& n, int axis) const;
  std::array<double, 3> momentum_value(const MomentumIndex& n) const;

  // Transfers connect two window modes, so components live on
  // [-2 n_max, 2 n_max]; they get their own flat indexing.
  int transfer_side() const { return 4 * n_max_ + 1; }
  std::size_t transfer_count() const { return transfer_count_; }
  bool valid_transfer(const MomentumIndex& q) const;
  std::size_t transfer_flat_index(const MomentumIndex& q) const;
  MomentumIndex transfer_unflatten(std::size_t index) const;

  friend bool operator==(const BoxLattice&, const BoxLattice&) = default;

 private:
  int dim_;
  int n_max_;
  double box_length_;
  double hbar_;
  std::size_t basis_size_;
  std::size_t transfer_count_;
};

}  // namespace covdiff
