#include "jetlab/sym_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "jetlab/errors.hpp"

namespace jetlab {

SymMatrix::SymMatrix(int n) : n_(n), u_(static_cast<size_t>(n) * (n + 1) / 2, 0.0) {
  if (n < 0) throw InvalidInput("SymMatrix: negative dimension");
}

SymMatrix SymMatrix::identity(int n) {
  SymMatrix m(n);
  for (int i = 0; i < n; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diag(std::span<const double> d) {
  SymMatrix m(static_cast<int>(d.size()));
  for (int i = 0; i < m.n_; ++i) m.set(i, i, d[i]);
  return m;
}

SymMatrix SymMatrix::symmetrized(int n, std::span<const double> full) {
  if (static_cast<int>(full.size()) != n * n)
    throw InvalidInput("SymMatrix::symmetrized: size mismatch");
  SymMatrix m(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      m.set(i, j, 0.5 * (full[i * n + j] + full[j * n + i]));
  return m;
}

SymMatrix SymMatrix::outer(std::span<const double> v, double s) {
  SymMatrix m(static_cast<int>(v.size()));
  for (int i = 0; i < m.n_; ++i)
    for (int j = i; j < m.n_; ++j) m.set(i, j, s * v[i] * v[j]);
  return m;
}

int SymMatrix::pack(int i, int j) const {
  if (i > j) std::swap(i, j);
  // row-major upper triangle: row i starts at i*n - i*(i-1)/2
  return i * n_ - i * (i - 1) / 2 + (j - i);
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  if (o.n_ != n_) throw InvalidInput("SymMatrix: dimension mismatch in +");
  for (size_t k = 0; k < u_.size(); ++k) u_[k] += o.u_[k];
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  if (o.n_ != n_) throw InvalidInput("SymMatrix: dimension mismatch in -");
  for (size_t k = 0; k < u_.size(); ++k) u_[k] -= o.u_[k];
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  for (double& v : u_) v *= s;
  return *this;
}

SymMatrix SymMatrix::operator-() const {
  SymMatrix m = *this;
  for (double& v : m.u_) v = -v;
  return m;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < n_; ++i) t += at(i, i);
  return t;
}

double SymMatrix::frobenius() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) {
    s += at(i, i) * at(i, i);
    for (int j = i + 1; j < n_; ++j) s += 2.0 * at(i, j) * at(i, j);
  }
  return std::sqrt(s);
}

double SymMatrix::max_abs() const {
  double m = 0.0;
  for (double v : u_) m = std::max(m, std::fabs(v));
  return m;
}

double SymMatrix::det() const {
  if (n_ == 0) return 1.0;
  if (n_ == 1) return at(0, 0);
  if (n_ == 2) return at(0, 0) * at(1, 1) - at(0, 1) * at(0, 1);
  // LU with partial pivoting on an unpacked copy
  std::vector<double> a(static_cast<size_t>(n_) * n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) a[i * n_ + j] = at(i, j);
  double d = 1.0;
  for (int c = 0; c < n_; ++c) {
    int piv = c;
    for (int r = c + 1; r < n_; ++r)
      if (std::fabs(a[r * n_ + c]) > std::fabs(a[piv * n_ + c])) piv = r;
    if (piv != c) {
      for (int j = 0; j < n_; ++j) std::swap(a[c * n_ + j], a[piv * n_ + j]);
      d = -d;
    }
    double p = a[c * n_ + c];
    if (p == 0.0) return 0.0;
    d *= p;
    for (int r = c + 1; r < n_; ++r) {
      double f = a[r * n_ + c] / p;
      for (int j = c; j < n_; ++j) a[r * n_ + j] -= f * a[c * n_ + j];
    }
  }
  return d;
}

void SymMatrix::apply(std::span<const double> x, std::span<double> y) const {
  if (static_cast<int>(x.size()) != n_ || static_cast<int>(y.size()) != n_)
    throw InvalidInput("SymMatrix::apply: size mismatch");
  for (int i = 0; i < n_; ++i) {
    double s = 0.0;
    for (int j = 0; j < n_; ++j) s += at(i, j) * x[j];
    y[i] = s;
  }
}

bool SymMatrix::finite() const {
  return std::all_of(u_.begin(), u_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string SymMatrix::str() const {
  std::ostringstream os;
  os << "[";
  for (int i = 0; i < n_; ++i) {
    if (i) os << "; ";
    for (int j = 0; j < n_; ++j) {
      if (j) os << " ";
      os << at(i, j);
    }
  }
  os << "]";
  return os.str();
}

const double* EigenResult::vector(int k) const {
  return vectors.data() + static_cast<size_t>(k) * values.size();
}

int EigenResult::dim() const { return static_cast<int>(values.size()); }

EigenResult sym_eigen(const SymMatrix& m) {
  if (!m.finite()) throw InvalidInput("sym_eigen: non-finite entry");
  const int n = m.dim();
  EigenResult out;
  out.values.resize(n);
  out.vectors.assign(static_cast<size_t>(n) * n, 0.0);
  if (n == 0) return out;

  std::vector<double> a(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * n + j] = m.at(i, j);
  std::vector<double> v(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) v[i * n + i] = 1.0;

  auto offdiag = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += a[i * n + j] * a[i * n + j];
    return std::sqrt(2.0 * s);
  };

  const double scale = std::max(1.0, m.frobenius());
  for (int sweep = 0; sweep < 64 && offdiag() > 1e-15 * scale; ++sweep) {
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a[p * n + q];
        if (std::fabs(apq) <= 1e-300) continue;
        double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        double t = (theta >= 0 ? 1.0 : -1.0) /
                   (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (int k = 0; k < n; ++k) {
          double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return a[i * n + i] < a[j * n + j]; });
  for (int k = 0; k < n; ++k) {
    out.values[k] = a[order[k] * n + order[k]];
    for (int i = 0; i < n; ++i)
      out.vectors[static_cast<size_t>(k) * n + i] = v[i * n + order[k]];
  }
  return out;
}

double min_eigenvalue(const SymMatrix& a) {
  if (a.dim() == 1) return a.at(0, 0);
  if (a.dim() == 2) {
    double mid = 0.5 * (a.at(0, 0) + a.at(1, 1));
    double d = 0.5 * (a.at(0, 0) - a.at(1, 1));
    return mid - std::sqrt(d * d + a.at(0, 1) * a.at(0, 1));
  }
  return sym_eigen(a).values.front();
}

double max_eigenvalue(const SymMatrix& a) {
  if (a.dim() == 1) return a.at(0, 0);
  if (a.dim() == 2) {
    double mid = 0.5 * (a.at(0, 0) + a.at(1, 1));
    double d = 0.5 * (a.at(0, 0) - a.at(1, 1));
    return mid + std::sqrt(d * d + a.at(0, 1) * a.at(0, 1));
  }
  return sym_eigen(a).values.back();
}

}  // namespace jetlab
