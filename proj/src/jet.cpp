#include "jetlab/jet.hpp"

#include <cmath>
#include <sstream>

#include "jetlab/errors.hpp"

namespace jetlab {

Jet::Jet(double r_, std::vector<double> p_, SymMatrix a_)
    : r(r_), p(std::move(p_)), a(std::move(a_)) {
  if (a.dim() != static_cast<int>(p.size()))
    throw InvalidInput("Jet: gradient and Hessian dimensions differ");
}

Jet Jet::zero(int dim) {
  return Jet(0.0, std::vector<double>(dim, 0.0), SymMatrix(dim));
}

bool Jet::finite() const {
  if (!std::isfinite(r)) return false;
  for (double v : p)
    if (!std::isfinite(v)) return false;
  return a.finite();
}

std::string Jet::str() const {
  std::ostringstream os;
  os << "(r=" << r << ", p=[";
  for (int i = 0; i < dim(); ++i) os << (i ? " " : "") << p[i];
  os << "], A=" << a.str() << ")";
  return os.str();
}

Jet jet_combine(double ca, const Jet& x, double cb, const Jet& y) {
  if (x.dim() != y.dim())
    throw InvalidInput("jet_combine: dimension mismatch");
  Jet out = Jet::zero(x.dim());
  out.r = ca * x.r + cb * y.r;
  for (int i = 0; i < x.dim(); ++i) out.p[i] = ca * x.p[i] + cb * y.p[i];
  auto xs = x.a.packed(), ys = y.a.packed();
  auto os = out.a.packed();
  for (size_t k = 0; k < os.size(); ++k) os[k] = ca * xs[k] + cb * ys[k];
  return out;
}

Jet operator-(const Jet& x) {
  Jet out = x;
  out.r = -out.r;
  for (double& v : out.p) v = -v;
  out.a = -out.a;
  return out;
}

Jet jet_sum(std::span<const Jet> js) {
  if (js.empty()) throw InvalidInput("jet_sum: empty list");
  Jet acc = js[0];
  for (size_t i = 1; i < js.size(); ++i) acc = acc + js[i];
  return acc;
}

double jet_norm(const Jet& j) {
  double pn = 0.0;
  for (double v : j.p) pn += v * v;
  return std::fabs(j.r) + std::sqrt(pn) + j.a.frobenius();
}

}  // namespace jetlab
