#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace jetlab {

class CounterRng;

/// Axis-aligned box [lo, hi]^n with a uniform grid of spacing h.
/// Per-axis node count is floor((hi-lo)/h) + 1; grid indices are row major
/// with the last axis fastest.
class Domain {
 public:
  Domain() = default;
  Domain(std::vector<double> lo, std::vector<double> hi, double h);

  int dim() const { return static_cast<int>(lo_.size()); }
  double h() const { return h_; }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  int extent(int axis) const { return ext_[axis]; }
  std::size_t node_count() const;
  double diameter() const;

  std::size_t flat(std::span<const int> idx) const;
  void unflat(std::size_t f, std::span<int> idx) const;
  void point(std::span<const int> idx, std::span<double> x) const;
  std::vector<double> point(std::span<const int> idx) const;

  bool is_boundary(std::span<const int> idx) const;
  /// True when idx is at least `ring` nodes away from every face.
  bool is_interior(std::span<const int> idx, int ring = 1) const;
  bool contains(std::span<const double> x) const;

  std::vector<double> sample_point(CounterRng& rng) const;

  bool operator==(const Domain& o) const;
  std::string str() const;

 private:
  std::vector<double> lo_, hi_;
  double h_ = 0.0;
  std::vector<int> ext_;
};

}  // namespace jetlab
