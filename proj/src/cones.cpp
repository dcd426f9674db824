#include "jetlab/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jetlab/errors.hpp"
#include "jetlab/rng.hpp"

namespace jetlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Margin of the {0} gradient factor: zero exactly at p = 0, else the
// (negative) distance to it.  Never positive, so the factor has no interior.
double zero_factor_margin(std::span<const double> p) {
  double n = norm2(p);
  return n == 0.0 ? 0.0 : -n;
}

}  // namespace

DirectionalCone DirectionalCone::full(int dim) {
  DirectionalCone d;
  d.dim_ = dim;
  return d;
}

DirectionalCone DirectionalCone::halfspaces(
    int dim, std::vector<std::vector<double>> normals) {
  DirectionalCone d;
  d.dim_ = dim;
  for (auto& a : normals) {
    if (static_cast<int>(a.size()) != dim)
      throw InvalidInput("DirectionalCone: normal of wrong dimension");
    double n = norm2(a);
    if (!(n > 0.0) || !std::isfinite(n))
      throw InvalidInput("DirectionalCone: normal must be nonzero and finite");
    for (double& x : a) x /= n;
  }
  d.normals_ = std::move(normals);
  return d;
}

double DirectionalCone::margin(std::span<const double> p) const {
  if (is_full()) return kInf;
  double m = kInf;
  for (const auto& a : normals_) m = std::min(m, dot(a, p));
  return m;
}

double DirectionalCone::dual_margin(std::span<const double> p) const {
  if (is_full()) return -kInf;
  double m = -kInf;
  for (const auto& a : normals_) m = std::max(m, dot(a, p));
  return m;
}

std::vector<double> DirectionalCone::interior_direction() const {
  if (is_full()) {
    std::vector<double> q(dim_, 0.0);
    if (dim_ > 0) q[0] = 1.0;
    return q;
  }
  // average of the unit normals works whenever the cone is acute
  std::vector<double> q(dim_, 0.0);
  for (const auto& a : normals_)
    for (int i = 0; i < dim_; ++i) q[i] += a[i];
  double n = norm2(q);
  if (n > 0.0) {
    for (double& x : q) x /= n;
    if (margin(q) > 1e-12) return q;
  }
  // random fallback for obtuse configurations
  CounterRng rng(12345, 77);
  for (int trial = 0; trial < 4096; ++trial) {
    for (double& x : q) x = rng.normal();
    double nn = norm2(q);
    if (nn == 0.0) continue;
    for (double& x : q) x /= nn;
    if (margin(q) > 1e-9) return q;
  }
  throw Unsupported("DirectionalCone: no interior direction found");
}

MonotonicityCone MonotonicityCone::minimal(int dim) {
  MonotonicityCone m;
  m.kind_ = Kind::Minimal;
  m.dim_ = dim;
  m.d_ = DirectionalCone::full(dim);
  return m;
}

MonotonicityCone MonotonicityCone::negativity_convexity(int dim) {
  MonotonicityCone m;
  m.kind_ = Kind::NegConv;
  m.dim_ = dim;
  m.d_ = DirectionalCone::full(dim);
  return m;
}

MonotonicityCone MonotonicityCone::convexity(int dim) {
  MonotonicityCone m;
  m.kind_ = Kind::Conv;
  m.dim_ = dim;
  m.d_ = DirectionalCone::full(dim);
  return m;
}

MonotonicityCone MonotonicityCone::directional_convexity(DirectionalCone d) {
  MonotonicityCone m;
  m.kind_ = Kind::DirConv;
  m.dim_ = d.dim();
  m.d_ = std::move(d);
  return m;
}

MonotonicityCone MonotonicityCone::negativity_directional_convexity(
    DirectionalCone d) {
  MonotonicityCone m;
  m.kind_ = Kind::NegDirConv;
  m.dim_ = d.dim();
  m.d_ = std::move(d);
  return m;
}

MonotonicityCone MonotonicityCone::generic(
    int dim, std::function<double(const Jet&)> margin, bool has_interior,
    std::optional<Jet> interior_point) {
  MonotonicityCone m;
  m.kind_ = Kind::Generic;
  m.dim_ = dim;
  m.d_ = DirectionalCone::full(dim);
  m.generic_margin_ = std::move(margin);
  m.generic_has_interior_ = has_interior;
  m.generic_interior_point_ = std::move(interior_point);
  return m;
}

bool MonotonicityCone::has_interior() const {
  switch (kind_) {
    case Kind::Minimal:
      return false;
    case Kind::Generic:
      return generic_has_interior_;
    case Kind::DirConv:
    case Kind::NegDirConv: {
      try {
        (void)d_.interior_direction();
        return true;
      } catch (const Unsupported&) {
        return false;
      }
    }
    default:
      return true;
  }
}

std::string MonotonicityCone::name() const {
  switch (kind_) {
    case Kind::Minimal:
      return "minimal";
    case Kind::NegConv:
      return "negativity-convexity";
    case Kind::Conv:
      return "convexity";
    case Kind::DirConv:
      return "directional-convexity";
    case Kind::NegDirConv:
      return "negativity-directional-convexity";
    case Kind::Generic:
      return "generic";
  }
  return "?";
}

double MonotonicityCone::margin(const Jet& j) const {
  if (j.dim() != dim_) throw InvalidInput("cone margin: dimension mismatch");
  switch (kind_) {
    case Kind::Minimal:
      return std::min({-j.r, zero_factor_margin(j.p), min_eigenvalue(j.a)});
    case Kind::NegConv:
      return std::min(-j.r, min_eigenvalue(j.a));
    case Kind::Conv:
      return min_eigenvalue(j.a);
    case Kind::DirConv:
      return std::min(d_.margin(j.p), min_eigenvalue(j.a));
    case Kind::NegDirConv:
      return std::min({-j.r, d_.margin(j.p), min_eigenvalue(j.a)});
    case Kind::Generic:
      return generic_margin_(j);
  }
  return -kInf;
}

Jet MonotonicityCone::default_probe() const {
  if (!has_interior())
    throw Unsupported("default_probe: cone has empty interior");
  if (kind_ == Kind::Generic) {
    if (generic_interior_point_) return *generic_interior_point_;
    throw Unsupported("default_probe: generic cone without interior point");
  }
  std::vector<double> q(dim_, 0.0);
  if (kind_ == Kind::DirConv || kind_ == Kind::NegDirConv)
    if (!d_.is_full()) q = d_.interior_direction();
  return Jet(-1.0, std::move(q), SymMatrix::identity(dim_));
}

MonotonicityConeDual MonotonicityCone::dual() const {
  return MonotonicityConeDual(*this);
}

MonotonicityConeDual::MonotonicityConeDual(MonotonicityCone src)
    : src_(std::move(src)) {}

double MonotonicityConeDual::margin(const Jet& j) const {
  // J is in the dual iff -J is not interior to the source.  For the product
  // cones the negation rule -source.margin(-J) expands to the max over the
  // dualized constraints written out below.
  switch (src_.kind()) {
    case MonotonicityCone::Kind::Minimal:
      // dual of an empty-interior cone is the whole jet space
      return std::max({-j.r, -zero_factor_margin(j.p), max_eigenvalue(j.a)});
    case MonotonicityCone::Kind::NegConv:
      return std::max(-j.r, max_eigenvalue(j.a));
    case MonotonicityCone::Kind::Conv:
      return max_eigenvalue(j.a);
    case MonotonicityCone::Kind::DirConv:
      return std::max(src_.directions().dual_margin(j.p),
                      max_eigenvalue(j.a));
    case MonotonicityCone::Kind::NegDirConv:
      return std::max({-j.r, src_.directions().dual_margin(j.p),
                       max_eigenvalue(j.a)});
    case MonotonicityCone::Kind::Generic:
      // sampled complement rule: interior of the source probed through its
      // own margin sign
      return -src_.margin(-j);
  }
  return kInf;
}

ConeMembership cone_member(const MonotonicityCone& m, const Jet& j) {
  double mg = m.margin(j);
  return {mg >= 0.0, mg};
}

ConeMembership cone_interior_member(const MonotonicityCone& m, const Jet& j) {
  double mg = m.margin(j);
  return {m.has_interior() && mg > 0.0, mg};
}

double Quadratic::value(std::span<const double> x) const {
  double v = c;
  for (size_t i = 0; i < b.size(); ++i) v += b[i] * x[i];
  std::vector<double> d(x.size()), qd(x.size());
  for (size_t i = 0; i < x.size(); ++i) d[i] = x[i] - x0[i];
  q.apply(d, qd);
  for (size_t i = 0; i < x.size(); ++i) v += 0.5 * qd[i] * d[i];
  return v;
}

Jet Quadratic::jet_at(std::span<const double> x) const {
  Jet j = Jet::zero(static_cast<int>(x.size()));
  j.r = value(x);
  std::vector<double> d(x.size()), qd(x.size());
  for (size_t i = 0; i < x.size(); ++i) d[i] = x[i] - x0[i];
  q.apply(d, qd);
  for (size_t i = 0; i < x.size(); ++i) j.p[i] = b[i] + qd[i];
  j.a = q;
  return j;
}

std::optional<Quadratic> strict_approximator(const MonotonicityCone& m,
                                             const Domain& omega) {
  if (!m.has_interior()) return std::nullopt;
  const int n = omega.dim();
  if (m.dim() != n)
    throw InvalidInput("strict_approximator: cone/domain dimension mismatch");

  const bool need_negative = m.kind() == MonotonicityCone::Kind::Minimal ||
                             m.kind() == MonotonicityCone::Kind::NegConv ||
                             m.kind() == MonotonicityCone::Kind::NegDirConv ||
                             m.kind() == MonotonicityCone::Kind::Generic;
  std::vector<double> shift_dir(n, 0.0);
  bool need_shift = false;
  if ((m.kind() == MonotonicityCone::Kind::DirConv ||
       m.kind() == MonotonicityCone::Kind::NegDirConv) &&
      !m.directions().is_full()) {
    shift_dir = m.directions().interior_direction();
    need_shift = true;
  }

  std::vector<double> center(n);
  for (int i = 0; i < n; ++i) center[i] = 0.5 * (omega.lo()[i] + omega.hi()[i]);

  std::vector<int> idx(n);
  std::vector<double> x(n);
  for (double t = need_shift ? 1.0 : 0.0; t <= 4096.0;
       t = (t == 0.0 ? 1.0 : 2.0 * t)) {
    Quadratic psi;
    psi.b.assign(n, 0.0);
    psi.x0.resize(n);
    for (int i = 0; i < n; ++i) psi.x0[i] = center[i] - t * shift_dir[i];
    psi.q = SymMatrix::identity(n);
    psi.c = 0.0;
    if (need_negative) {
      double worst = 0.0;
      for (std::size_t f = 0; f < omega.node_count(); ++f) {
        omega.unflat(f, idx);
        omega.point(idx, x);
        double s = 0.0;
        for (int i = 0; i < n; ++i)
          s += (x[i] - psi.x0[i]) * (x[i] - psi.x0[i]);
        worst = std::max(worst, 0.5 * s);
      }
      psi.c = -(worst + 1.0);
    }
    bool ok = true;
    for (std::size_t f = 0; f < omega.node_count() && ok; ++f) {
      omega.unflat(f, idx);
      omega.point(idx, x);
      ok = cone_interior_member(m, psi.jet_at(x)).member;
    }
    if (ok) return psi;
    if (!need_shift) break;
  }
  return std::nullopt;
}

}  // namespace jetlab
