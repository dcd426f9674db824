#pragma once

#include <span>
#include <string>
#include <vector>

namespace jetlab {

/// Dense symmetric n x n matrix with packed upper-triangle storage
/// (row major, i <= j).  Entry access is symmetric: at(i,j) == at(j,i).
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int n);
  static SymMatrix identity(int n);
  static SymMatrix diag(std::span<const double> d);
  /// Builds from a full row-major n x n array, averaging a_ij and a_ji.
  static SymMatrix symmetrized(int n, std::span<const double> full);
  /// Rank-one s * v v^T.
  static SymMatrix outer(std::span<const double> v, double s = 1.0);

  int dim() const { return n_; }
  bool empty() const { return n_ == 0; }

  double at(int i, int j) const { return u_[pack(i, j)]; }
  void set(int i, int j, double v) { u_[pack(i, j)] = v; }
  void add(int i, int j, double v) { u_[pack(i, j)] += v; }

  std::span<const double> packed() const { return u_; }
  std::span<double> packed() { return u_; }

  /// Exact elementwise comparison (bit-identity intent).
  bool operator==(const SymMatrix& o) const = default;

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }
  SymMatrix operator-() const;

  double trace() const;
  double frobenius() const;
  double max_abs() const;
  /// Determinant via LU with partial pivoting; independent of the
  /// eigenvalue path so the two can cross-check each other.
  double det() const;
  /// y = A x.
  void apply(std::span<const double> x, std::span<double> y) const;
  bool finite() const;
  std::string str() const;

 private:
  int pack(int i, int j) const;
  int n_ = 0;
  std::vector<double> u_;
};

/// Eigen decomposition of a symmetric matrix.  values are ascending;
/// vectors is a column-major orthonormal frame, column k paired with
/// values[k].
struct EigenResult {
  std::vector<double> values;
  std::vector<double> vectors;
  const double* vector(int k) const;
  int dim() const;
};

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
/// Throws InvalidInput on non-finite entries.
EigenResult sym_eigen(const SymMatrix& a);

double min_eigenvalue(const SymMatrix& a);
double max_eigenvalue(const SymMatrix& a);

}  // namespace jetlab
