#pragma once

#include <span>
#include <string>
#include <vector>

#include "jetlab/sym_matrix.hpp"

namespace jetlab {

/// 2-jet (r, p, A): value, gradient, symmetric Hessian.
struct Jet {
  double r = 0.0;
  std::vector<double> p;
  SymMatrix a;

  Jet() = default;
  Jet(double r_, std::vector<double> p_, SymMatrix a_);
  static Jet zero(int dim);

  int dim() const { return static_cast<int>(p.size()); }
  bool operator==(const Jet& o) const = default;
  bool finite() const;
  std::string str() const;
};

/// ca*x + cb*y, combined component by component in a fixed order so that
/// repeated evaluations are bit-identical.
Jet jet_combine(double ca, const Jet& x, double cb, const Jet& y);

inline Jet operator+(const Jet& x, const Jet& y) {
  return jet_combine(1.0, x, 1.0, y);
}
inline Jet operator-(const Jet& x, const Jet& y) {
  return jet_combine(1.0, x, -1.0, y);
}
Jet operator-(const Jet& x);
inline Jet operator*(double s, const Jet& x) {
  return jet_combine(s, x, 0.0, Jet::zero(x.dim()));
}

/// Left fold in index order; the canonical summation order for jet lists.
Jet jet_sum(std::span<const Jet> js);

/// |r| + |p|_2 + |A|_F.
double jet_norm(const Jet& j);

}  // namespace jetlab
