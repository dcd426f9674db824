#include "jetlab/subequation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "jetlab/errors.hpp"

namespace jetlab {

std::string region_name(Region r) {
  switch (r) {
    case Region::Interior: return "interior";
    case Region::Shell: return "boundary-shell";
    case Region::Exterior: return "exterior";
  }
  return "?";
}

Subequation Subequation::from_defining(std::string name, int dim,
                                       DefiningFn margin,
                                       MonotonicityCone cone) {
  Subequation s;
  s.name_ = std::move(name);
  s.dim_ = dim;
  s.defining_ = std::move(margin);
  s.cone_ = std::move(cone);
  if (s.cone_.has_interior()) s.probe_ = s.cone_.default_probe();
  return s;
}

Subequation Subequation::from_oracle(std::string name, int dim,
                                     OracleFn contains,
                                     MonotonicityCone cone) {
  Subequation s;
  s.name_ = std::move(name);
  s.dim_ = dim;
  s.oracle_ = std::move(contains);
  s.cone_ = std::move(cone);
  if (s.cone_.has_interior()) s.probe_ = s.cone_.default_probe();
  return s;
}

const Jet& Subequation::probe() const {
  if (!probe_)
    throw Unsupported(name_ + ": no probe jet (cone interior is empty)");
  return *probe_;
}

Subequation Subequation::with_name(std::string name) const {
  Subequation s = *this;
  s.name_ = std::move(name);
  return s;
}

Subequation Subequation::with_probe(Jet j0) const {
  Subequation s = *this;
  s.probe_ = std::move(j0);
  return s;
}

Subequation Subequation::with_constant_fibers(bool flag) const {
  Subequation s = *this;
  s.constant_fibers_ = flag;
  return s;
}

Subequation Subequation::with_x_domain(Domain x) const {
  Subequation s = *this;
  s.x_domain_ = std::move(x);
  return s;
}

void Subequation::check_x(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_)
    throw InvalidInput(name_ + ": base point dimension mismatch");
  if (x_domain_ && !x_domain_->contains(x))
    throw InvalidInput(name_ + ": base point outside the declared domain");
}

double Subequation::defining(std::span<const double> x, const Jet& j) const {
  if (!defining_) throw Unsupported(name_ + ": oracle-only set");
  check_x(x);
  return defining_(x, j);
}

bool Subequation::contains(std::span<const double> x, const Jet& j) const {
  check_x(x);
  if (defining_) return defining_(x, j) >= 0.0;
  return oracle_(x, j);
}

Region Subequation::classify(std::span<const double> x, const Jet& j,
                             const Tolerances& tol) const {
  check_x(x);
  const double eps = tol.interior_eps_scale * (1.0 + jet_norm(j));
  if (defining_) {
    double m = defining_(x, j);
    if (m > eps) return Region::Interior;
    if (m < -eps) return Region::Exterior;
    return Region::Shell;
  }
  const Jet& j0 = probe();
  const double step = eps / jet_norm(j0);
  if (oracle_(x, j)) {
    return oracle_(x, jet_combine(1.0, j, -step, j0)) ? Region::Interior
                                                      : Region::Shell;
  }
  return oracle_(x, jet_combine(1.0, j, step, j0)) ? Region::Shell
                                                   : Region::Exterior;
}

Membership Subequation::member(std::span<const double> x, const Jet& j,
                               const Tolerances& tol) const {
  Region reg = classify(x, j, tol);
  if (defining_) return {reg, defining_(x, j)};

  // Ray distance along the probe direction: double until the membership
  // state flips, then bisect.
  const Jet& j0 = probe();
  const double j0n = jet_norm(j0);
  const bool inside = oracle_(x, j);
  const double sign = inside ? -1.0 : 1.0;  // walk -J0 from inside, +J0 from
                                            // outside
  const double t_cap = 4.0 * (tol.jet_radius + jet_norm(j)) / j0n;
  double t_lo = 0.0;
  double t_hi = 1e-9 * (1.0 + jet_norm(j)) / j0n;
  bool flipped = false;
  while (t_hi <= t_cap) {
    if (oracle_(x, jet_combine(1.0, j, sign * t_hi, j0)) != inside) {
      flipped = true;
      break;
    }
    t_lo = t_hi;
    t_hi *= 2.0;
  }
  if (!flipped) {
    double m = t_cap * j0n;
    return {reg, inside ? m : -m};
  }
  for (int it = 0; it < 50; ++it) {
    double mid = 0.5 * (t_lo + t_hi);
    if (oracle_(x, jet_combine(1.0, j, sign * mid, j0)) == inside)
      t_lo = mid;
    else
      t_hi = mid;
  }
  double m = 0.5 * (t_lo + t_hi) * j0n;
  return {reg, inside ? m : -m};
}

Subequation Subequation::dual() const {
  Subequation d;
  d.name_ = name_ + "~";
  d.dim_ = dim_;
  d.cone_ = cone_;
  d.probe_ = probe_;
  d.constant_fibers_ = constant_fibers_;
  d.x_domain_ = x_domain_;
  if (defining_) {
    d.defining_ = [src = defining_](std::span<const double> x, const Jet& j) {
      return -src(x, -j);
    };
  } else {
    d.oracle_ = [src = *this](std::span<const double> x, const Jet& j) {
      return src.classify(x, -j, Tolerances{}) != Region::Interior;
    };
  }
  return d;
}

Subequation cone_subequation(const MonotonicityCone& m) {
  auto s = Subequation::from_defining(
      "cone " + m.name(), m.dim(),
      [m]([[maybe_unused]] std::span<const double> x, const Jet& j) {
        return m.margin(j);
      },
      m);
  return s.with_constant_fibers(true);
}

Subequation cone_dual_subequation(const MonotonicityCone& m) {
  MonotonicityConeDual d = m.dual();
  auto s = Subequation::from_defining(
      "dual cone " + m.name() + "~", m.dim(),
      [d = std::move(d)]([[maybe_unused]] std::span<const double> x,
                         const Jet& j) { return d.margin(j); },
      m);
  return s.with_constant_fibers(true);
}

bool ProperEllipticPair::constant_fibers() const {
  bool c = op.constant_coefficients;
  if (constraint) c = c && constraint->constant_fibers();
  return c;
}

double ProperEllipticPair::constraint_margin(std::span<const double> x,
                                             const Jet& j) const {
  if (!constraint) return std::numeric_limits<double>::infinity();
  if (constraint->has_defining()) return constraint->defining(x, j);
  return constraint->member(x, j).margin;
}

bool ProperEllipticPair::in_constraint(std::span<const double> x,
                                       const Jet& j) const {
  if (!constraint) return true;
  return constraint->contains(x, j);
}

const Jet& ProperEllipticPair::probe_jet() const {
  if (!probe) throw Unsupported(name + ": pair declares no probe jet");
  return *probe;
}

Subequation induce(const ProperEllipticPair& pair) {
  Subequation s = [&] {
    if (!pair.constrained()) {
      return Subequation::from_defining(
          pair.name + "-induced", pair.cone.dim(),
          [op = pair.op](std::span<const double> x, const Jet& j) {
            return op.eval(x, j);
          },
          pair.cone);
    }
    if (pair.constraint->has_defining()) {
      return Subequation::from_defining(
          pair.name + "-induced", pair.cone.dim(),
          [g = *pair.constraint, op = pair.op](std::span<const double> x,
                                               const Jet& j) {
            return std::min(g.defining(x, j), op.eval(x, j));
          },
          pair.cone);
    }
    return Subequation::from_oracle(
        pair.name + "-induced", pair.cone.dim(),
        [g = *pair.constraint, op = pair.op](std::span<const double> x,
                                             const Jet& j) {
          return g.contains(x, j) && op.eval(x, j) >= 0.0;
        },
        pair.cone);
  }();
  if (pair.probe) s = s.with_probe(*pair.probe);
  if (pair.x_domain) s = s.with_x_domain(*pair.x_domain);
  return s.with_constant_fibers(pair.constant_fibers());
}

Jet boundary_probe(const Subequation& f, std::span<const double> x,
                   const Jet& j_in, const Jet& j_out, int steps) {
  if (!f.contains(x, j_in))
    throw PreconditionError(f.name() + ": probe start is not a member");
  if (f.contains(x, j_out))
    throw PreconditionError(f.name() + ": probe end is a member");
  double t_in = 0.0, t_out = 1.0;
  for (int it = 0; it < steps; ++it) {
    double mid = 0.5 * (t_in + t_out);
    if (f.contains(x, jet_combine(1.0 - mid, j_in, mid, j_out)))
      t_in = mid;
    else
      t_out = mid;
  }
  return jet_combine(1.0 - t_in, j_in, t_in, j_out);
}

namespace {

// Dual norm of the jet norm |r| + |p|_2 + |A|_F: the max of the block norms
// of the margin gradient, estimated by central differences.
double margin_gradient_dual_norm(const Subequation& f,
                                 std::span<const double> x, const Jet& j,
                                 double delta) {
  const int n = j.dim();
  auto val = [&](const Jet& k) { return f.defining(x, k); };
  Jet probe = j;
  probe.r = j.r + delta;
  double gr = val(probe);
  probe.r = j.r - delta;
  gr = (gr - val(probe)) / (2.0 * delta);
  probe.r = j.r;

  double gp2 = 0.0;
  for (int i = 0; i < n; ++i) {
    probe.p[i] = j.p[i] + delta;
    double hi = val(probe);
    probe.p[i] = j.p[i] - delta;
    double lo = val(probe);
    probe.p[i] = j.p[i];
    double g = (hi - lo) / (2.0 * delta);
    gp2 += g * g;
  }

  // Perturbing a packed off-diagonal entry moves both mirror entries, so the
  // Frobenius-gradient component is half the finite difference.
  double ga2 = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int k = i; k < n; ++k) {
      double save = j.a.at(i, k);
      probe.a.set(i, k, save + delta);
      double hi = val(probe);
      probe.a.set(i, k, save - delta);
      double lo = val(probe);
      probe.a.set(i, k, save);
      double g = (hi - lo) / (2.0 * delta);
      if (i == k)
        ga2 += g * g;
      else
        ga2 += 2.0 * (0.5 * g) * (0.5 * g);
    }
  }
  return std::max({std::abs(gr), std::sqrt(gp2), std::sqrt(ga2)});
}

}  // namespace

double signed_fiber_distance(const Subequation& f, std::span<const double> x,
                             const Jet& j, const Tolerances& tol) {
  const Jet& j0 = f.probe();
  const double j0n = jet_norm(j0);
  const bool inside = f.contains(x, j);
  const double sign = inside ? -1.0 : 1.0;
  const double t_cap = 4.0 * (tol.jet_radius + jet_norm(j)) / j0n;
  double t_lo = 0.0;
  double t_hi = 1e-9 * (1.0 + jet_norm(j)) / j0n;
  bool flipped = false;
  while (t_hi <= t_cap) {
    if (f.contains(x, jet_combine(1.0, j, sign * t_hi, j0)) != inside) {
      flipped = true;
      break;
    }
    t_lo = t_hi;
    t_hi *= 2.0;
  }
  if (!flipped)
    throw FiberDegenerate(f.name() +
                          ": no boundary crossing along the probe ray");
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (t_lo + t_hi);
    if (f.contains(x, jet_combine(1.0, j, sign * mid, j0)) == inside)
      t_lo = mid;
    else
      t_hi = mid;
  }
  double dist = 0.5 * (t_lo + t_hi) * j0n;

  if (f.has_defining()) {
    double m = f.defining(x, j);
    double g = margin_gradient_dual_norm(f, x, j, 1e-6 * (1.0 + jet_norm(j)));
    if (g > 1e-12) dist = std::min(dist, std::abs(m) / g);
  }
  return inside ? dist : -dist;
}

ProperEllipticPair signed_distance_pair(const Subequation& f) {
  OperatorSpec op;
  op.name = "signed-distance(" + f.name() + ")";
  op.reduction = Reduction::General;
  op.constant_coefficients = f.constant_fibers();
  op.eval = [f](std::span<const double> x, const Jet& j) {
    return signed_fiber_distance(f, x, j);
  };
  ProperEllipticPair pair;
  pair.name = op.name;
  pair.op = std::move(op);
  pair.constraint = f;
  pair.cone = f.cone();
  if (f.has_probe()) pair.probe = f.probe();
  if (f.x_domain()) pair.x_domain = *f.x_domain();
  return pair;
}

}  // namespace jetlab
