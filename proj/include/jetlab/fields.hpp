#pragma once

#include <functional>
#include <string>
#include <vector>

#include "jetlab/expression.hpp"
#include "jetlab/grid_function.hpp"
#include "jetlab/sym_matrix.hpp"

namespace jetlab {

/// Scalar coefficient c(x) with a constancy flag (drives the automatic
/// fiberegularity shortcut) and a printable description for reports.
struct ScalarField {
  std::function<double(std::span<const double>)> eval;
  bool constant = false;
  std::string desc;

  double operator()(std::span<const double> x) const { return eval(x); }

  static ScalarField of_constant(double v);
  static ScalarField of_expression(const Expression& e);
  /// Multilinear interpolation of grid samples.
  static ScalarField of_grid(GridFunction g);
};

/// Matrix coefficient M(x), same conventions as ScalarField.
struct MatrixField {
  std::function<SymMatrix(std::span<const double>)> eval;
  bool constant = false;
  std::string desc;

  SymMatrix operator()(std::span<const double> x) const { return eval(x); }

  static MatrixField of_constant(SymMatrix m);
  /// Entries as expressions for the packed upper triangle, row by row:
  /// (0,0), (0,1), ..., (0,n-1), (1,1), ...
  static MatrixField of_expressions(int n, std::vector<Expression> upper);
};

/// Gradient factor g(p); the evaluation argument is the gradient.
struct GradientField {
  std::function<double(std::span<const double>)> eval;
  std::string desc;

  double operator()(std::span<const double> p) const { return eval(p); }

  static GradientField of_expression(const Expression& e);
};

}  // namespace jetlab
