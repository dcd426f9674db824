#include "jetlab/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "jetlab/errors.hpp"
#include "jetlab/parallel.hpp"

namespace jetlab {

namespace {

constexpr int kIterationCap = 1000000;

std::vector<std::size_t> interior_flats(const Domain& dom) {
  std::vector<std::size_t> flats;
  std::vector<int> idx(dom.dim());
  for (std::size_t f = 0; f < dom.node_count(); ++f) {
    dom.unflat(f, idx);
    if (dom.is_interior(idx)) flats.push_back(f);
  }
  return flats;
}

/// Primitive lattice directions with |components| <= radius, up to sign.
std::vector<std::vector<int>> lattice_directions(int dim, int radius) {
  std::vector<std::vector<int>> dirs;
  if (dim == 1) {
    dirs.push_back({1});
    return dirs;
  }
  for (int a = -radius; a <= radius; ++a) {
    for (int b = -radius; b <= radius; ++b) {
      if (a == 0 && b == 0) continue;
      if (a < 0 || (a == 0 && b < 0)) continue;
      if (std::gcd(std::abs(a), std::abs(b)) != 1) continue;
      dirs.push_back({a, b});
    }
  }
  return dirs;
}

bool offset_in_grid(const Domain& dom, std::span<const int> node,
                    std::span<const int> e, int scale, std::vector<int>& out) {
  for (std::size_t i = 0; i < node.size(); ++i) {
    out[i] = node[i] + scale * e[i];
    if (out[i] < 0 || out[i] >= dom.extent(static_cast<int>(i))) return false;
  }
  return true;
}

/// The orthogonal direction pairs of the determinant scheme; radius 3.
const std::vector<std::pair<std::vector<int>, std::vector<int>>>&
ma_direction_pairs() {
  static const std::vector<std::pair<std::vector<int>, std::vector<int>>>
      pairs = {
          {{1, 0}, {0, 1}},   {{1, 1}, {-1, 1}},  {{1, 2}, {-2, 1}},
          {{2, 1}, {-1, 2}},  {{1, 3}, {-3, 1}},  {{3, 1}, {-1, 3}},
          {{2, 3}, {-3, 2}},  {{3, 2}, {-2, 3}},
      };
  return pairs;
}

/// Second difference quotient along e, an estimate of <D^2u ebar, ebar>.
double curvature_along(const GridFunction& u, std::span<const int> node,
                       std::span<const int> e, std::vector<int>& scratch) {
  const Domain& dom = u.domain();
  const double h = dom.h();
  double e2 = 0.0;
  for (int c : e) e2 += static_cast<double>(c) * c;
  offset_in_grid(dom, node, e, +1, scratch);
  const double up = u.at(scratch);
  offset_in_grid(dom, node, e, -1, scratch);
  const double um = u.at(scratch);
  return (up - 2.0 * u.at(node) + um) / (h * h * e2);
}

struct SweepState {
  GridFunction a;
  GridFunction b;
};

/// Jacobi iteration driver: updates every interior node of `a` into `b`,
/// swaps, and repeats until the sup-norm step is at most `stop`.  Node
/// order is fixed, so the result does not depend on the worker count.
template <typename UpdateFn>
SolveResult sweep_to_convergence(GridFunction init, double stop,
                                 std::string scheme, const UpdateFn& update,
                                 double residual_scale = 1.0,
                                 int stall_window = 0) {
  const Domain& dom = init.domain();
  const std::vector<std::size_t> flats = interior_flats(dom);
  SweepState st{init, init};

  double best = std::numeric_limits<double>::infinity();
  int last_improve = 0;
  int iter = 0;
  double residual = 0.0;
  while (true) {
    ++iter;
    if (iter > kIterationCap)
      throw NotAdmissibleData(scheme + ": iteration cap exceeded");
    const GridFunction& a = st.a;
    GridFunction& b = st.b;
    parallel_for(flats.size(), [&](std::size_t i) {
      std::vector<int> idx(dom.dim());
      dom.unflat(flats[i], idx);
      b[flats[i]] = update(a, idx);
    });
    double step = 0.0;
    for (std::size_t f : flats) step = std::max(step, std::abs(b[f] - a[f]));
    residual = step / residual_scale;
    if (!std::isfinite(residual))
      throw NotAdmissibleData(scheme + ": iteration diverged");
    std::swap(st.a, st.b);
    if (residual <= stop) break;
    if (stall_window > 0) {
      if (residual < best) {
        best = residual;
        last_improve = iter;
      } else if (residual > 2.0 * best && iter - last_improve >= stall_window) {
        // Plateaus are normal while value corrections propagate; only
        // sustained growth beyond the best residual counts as divergence.
        throw NotAdmissibleData(scheme + ": residual grew to " +
                                std::to_string(residual) +
                                " without improving");
      }
    }
  }
  return SolveResult{std::move(st.a), iter, residual, std::move(scheme)};
}

}  // namespace

BoundaryData::BoundaryData(Domain d, std::vector<double> full)
    : dom_(std::move(d)), full_(std::move(full)) {}

BoundaryData BoundaryData::from_function(
    const Domain& d, const std::function<double(std::span<const double>)>& f) {
  std::vector<double> full(d.node_count(), 0.0);
  std::vector<int> idx(d.dim());
  for (std::size_t fl = 0; fl < d.node_count(); ++fl) {
    d.unflat(fl, idx);
    if (!d.is_boundary(idx)) continue;
    full[fl] = f(d.point(idx));
    if (!std::isfinite(full[fl]))
      throw InvalidInput("BoundaryData: non-finite boundary value");
  }
  return BoundaryData(d, std::move(full));
}

BoundaryData BoundaryData::from_expression(const Domain& d,
                                           const Expression& e) {
  return from_function(d, [&](std::span<const double> x) {
    return e.eval(EvalContext{x, {}, {}});
  });
}

BoundaryData BoundaryData::from_grid(const GridFunction& g) {
  const Domain& d = g.domain();
  std::vector<double> full(d.node_count(), 0.0);
  std::vector<int> idx(d.dim());
  for (std::size_t fl = 0; fl < d.node_count(); ++fl) {
    d.unflat(fl, idx);
    if (!d.is_boundary(idx)) continue;
    full[fl] = g[fl];
    if (!std::isfinite(full[fl]))
      throw InvalidInput("BoundaryData: non-finite boundary value");
  }
  return BoundaryData(d, std::move(full));
}

double BoundaryData::at(std::span<const int> idx) const {
  if (!dom_.is_boundary(idx))
    throw InvalidInput("BoundaryData: not a boundary node");
  return full_[dom_.flat(idx)];
}

void BoundaryData::impose(GridFunction& g) const {
  if (!(g.domain() == dom_))
    throw InvalidInput("BoundaryData: domain mismatch");
  std::vector<int> idx(dom_.dim());
  for (std::size_t fl = 0; fl < dom_.node_count(); ++fl) {
    dom_.unflat(fl, idx);
    if (dom_.is_boundary(idx)) g[fl] = full_[fl];
  }
}

double BoundaryData::max_value() const {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> idx(dom_.dim());
  for (std::size_t fl = 0; fl < dom_.node_count(); ++fl) {
    dom_.unflat(fl, idx);
    if (dom_.is_boundary(idx)) best = std::max(best, full_[fl]);
  }
  return best;
}

nlohmann::ordered_json SolveResult::metadata() const {
  nlohmann::ordered_json j;
  j["scheme"] = scheme;
  j["iterations"] = iterations;
  j["residual"] = residual;
  return j;
}

double laplace_update(const GridFunction& u, std::span<const int> node) {
  const Domain& dom = u.domain();
  std::vector<int> nb(node.begin(), node.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < node.size(); ++i) {
    nb[i] = node[i] + 1;
    sum += u.at(nb);
    nb[i] = node[i] - 1;
    sum += u.at(nb);
    nb[i] = node[i];
  }
  (void)dom;
  return sum / (2.0 * static_cast<double>(node.size()));
}

double envelope_update(const GridFunction& u, std::span<const int> node,
                       int radius) {
  const Domain& dom = u.domain();
  static thread_local std::vector<std::vector<int>> cache;
  static thread_local int cache_dim = 0;
  static thread_local int cache_radius = 0;
  if (cache_dim != dom.dim() || cache_radius != radius) {
    cache = lattice_directions(dom.dim(), radius);
    cache_dim = dom.dim();
    cache_radius = radius;
  }
  double best = u.at(node);
  std::vector<int> plus(node.size());
  std::vector<int> minus(node.size());
  for (const std::vector<int>& e : cache) {
    if (!offset_in_grid(dom, node, e, +1, plus)) continue;
    if (!offset_in_grid(dom, node, e, -1, minus)) continue;
    best = std::min(best, 0.5 * (u.at(plus) + u.at(minus)));
  }
  return best;
}

double monge_ampere_update(const GridFunction& u, std::span<const int> node,
                           double f_value, double tau, const SymMatrix* m) {
  const Domain& dom = u.domain();
  const int n = dom.dim();
  std::vector<int> scratch(n);
  double s = std::numeric_limits<double>::infinity();
  for (const auto& [e1, e2] : ma_direction_pairs()) {
    bool fits = true;
    for (const std::vector<int>* e : {&e1, &e2}) {
      fits = fits && offset_in_grid(dom, node, *e, +1, scratch) &&
             offset_in_grid(dom, node, *e, -1, scratch);
    }
    if (!fits) continue;
    double prod = 1.0;
    for (const std::vector<int>* e : {&e1, &e2}) {
      double curv = curvature_along(u, node, *e, scratch);
      if (m != nullptr) {
        double e2n = 0.0;
        double me = 0.0;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j)
            me += m->at(i, j) * (*e)[i] * (*e)[j];
          e2n += static_cast<double>((*e)[i]) * (*e)[i];
        }
        curv += me / e2n;
      }
      prod *= std::max(curv, 0.0);
    }
    s = std::min(s, prod - f_value);
  }
  return u.at(node) + tau * s;
}

SolveResult solve_laplace(const Domain& omega, const BoundaryData& g) {
  if (omega.dim() != 2 && omega.dim() != 3)
    throw InvalidInput("solve_laplace: 2D or 3D boxes only");
  if (!(g.domain() == omega))
    throw InvalidInput("solve_laplace: boundary data domain mismatch");
  GridFunction u(omega, 0.0);
  g.impose(u);
  return sweep_to_convergence(
      std::move(u), 1e-10, "laplace_jacobi",
      [](const GridFunction& a, std::span<const int> idx) {
        return laplace_update(a, idx);
      });
}

SolveResult solve_convex_envelope(const Domain& omega, const BoundaryData& g,
                                  const GridFunction* obstacle) {
  if (omega.dim() != 1 && omega.dim() != 2)
    throw InvalidInput("solve_convex_envelope: 1D or 2D boxes only");
  if (!(g.domain() == omega))
    throw InvalidInput("solve_convex_envelope: boundary data domain mismatch");
  GridFunction u(omega, g.max_value());
  if (obstacle != nullptr) {
    if (!(obstacle->domain() == omega))
      throw InvalidInput("solve_convex_envelope: obstacle domain mismatch");
    for (double v : obstacle->values())
      if (!std::isfinite(v))
        throw InvalidInput("solve_convex_envelope: obstacle must be finite");
    u = *obstacle;
  }
  g.impose(u);
  return sweep_to_convergence(
      std::move(u), 1e-9, "convex_envelope_wide_stencil",
      [](const GridFunction& a, std::span<const int> idx) {
        return envelope_update(a, idx, 3);
      });
}

SolveResult solve_monge_ampere(const Domain& omega, const ScalarField& f,
                               const BoundaryData& g, const MatrixField* m) {
  if (omega.dim() != 2)
    throw InvalidInput("solve_monge_ampere: 2D boxes only");
  if (!(g.domain() == omega))
    throw InvalidInput("solve_monge_ampere: boundary data domain mismatch");

  // Coefficients are frozen per node up front; f must be nonnegative.
  const std::size_t count = omega.node_count();
  std::vector<double> fv(count, 0.0);
  std::vector<SymMatrix> mv;
  if (m != nullptr) mv.assign(count, SymMatrix(omega.dim()));
  std::vector<int> idx(omega.dim());
  for (std::size_t fl = 0; fl < count; ++fl) {
    omega.unflat(fl, idx);
    const std::vector<double> x = omega.point(idx);
    fv[fl] = f(x);
    if (!(fv[fl] >= 0.0))
      throw InvalidCoefficient("solve_monge_ampere: f must be nonnegative");
    if (m != nullptr) mv[fl] = (*m)(x);
  }

  const double h = omega.h();
  const double tau = h * h / 4.0;
  // Start from the convex envelope of the boundary data.  It lies above the
  // solution and is free of spare concave directions, which matters when f
  // vanishes: the residual is then nonnegative and cannot undo concavity left
  // over from a generic initial guess.
  GridFunction init = solve_convex_envelope(omega, g).u;
  SolveResult res = sweep_to_convergence(
      std::move(init), h * h / 2.0, "monge_ampere_wide_stencil",
      [&](const GridFunction& a, std::span<const int> node) {
        const std::size_t fl = a.domain().flat(node);
        return monge_ampere_update(a, node, fv[fl], tau,
                                   m != nullptr ? &mv[fl] : nullptr);
      },
      tau, 1000);
  return res;
}

CheckReport check_comparison(const Subequation& f, const GridFunction& u,
                             const GridFunction& w, const Tolerances& tol) {
  if (!(u.domain() == w.domain()))
    throw InvalidInput("check_comparison: domains differ");
  if (f.dim() != u.domain().dim())
    throw InvalidInput("check_comparison: dimension mismatch");

  const Verdict su = is_subharmonic(f, u, tol);
  if (!su.holds)
    throw PreconditionError("check_comparison: u is not subharmonic for " +
                            f.name());
  const Verdict sw = is_superharmonic(f, w, tol);
  if (!sw.holds)
    throw PreconditionError("check_comparison: w is not superharmonic for " +
                            f.name());

  const Domain& dom = u.domain();
  const double tau = tol.contact_slack * dom.h();
  std::vector<int> idx(dom.dim());
  for (std::size_t fl = 0; fl < dom.node_count(); ++fl) {
    dom.unflat(fl, idx);
    if (dom.is_boundary(idx) && u[fl] > w[fl] + tau)
      throw PreconditionError(
          "check_comparison: boundary data is not ordered");
  }

  CheckReport rep;
  rep.check = "comparison";
  rep.subject = f.name();
  rep.seed = 0;
  rep.tol = tol;

  int interior = 0;
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<int> worst_idx;
  for (std::size_t fl = 0; fl < dom.node_count(); ++fl) {
    dom.unflat(fl, idx);
    if (!dom.is_interior(idx)) continue;
    ++interior;
    const double excess = u[fl] - w[fl] - tau;
    if (excess > worst) {
      worst = excess;
      worst_idx = idx;
    }
  }
  rep.samples = interior;
  rep.pass = worst <= 0.0;
  rep.details["tau"] = tau;
  rep.details["max_excess"] = worst;
  if (!rep.pass) {
    Counterexample ce;
    ce.x = dom.point(worst_idx);
    ce.margins.emplace_back("u", u.at(worst_idx));
    ce.margins.emplace_back("w", w.at(worst_idx));
    ce.margins.emplace_back("excess", worst);
    ce.note = "interior node where u exceeds w beyond tau";
    rep.counterexamples.push_back(std::move(ce));
  }
  return rep;
}

CheckReport check_zmp(const MonotonicityCone& m, const GridFunction& z,
                      const Tolerances& tol) {
  const Domain& dom = z.domain();
  if (m.dim() != dom.dim())
    throw InvalidInput("check_zmp: dimension mismatch");

  const std::optional<Quadratic> psi = strict_approximator(m, dom);
  if (!psi.has_value())
    throw Unsupported("check_zmp: no strict approximator for " + m.name() +
                      " on this box");

  const Subequation dual_set = cone_dual_subequation(m);
  const Verdict vz = is_subharmonic(dual_set, z, tol);
  if (!vz.holds)
    throw PreconditionError(
        "check_zmp: z is not subharmonic for the dual cone set of " +
        m.name());

  const double tau = tol.contact_slack * dom.h();
  std::vector<int> idx(dom.dim());
  for (std::size_t fl = 0; fl < dom.node_count(); ++fl) {
    dom.unflat(fl, idx);
    if (dom.is_boundary(idx) && z[fl] > tau)
      throw PreconditionError("check_zmp: z is positive on the boundary");
  }

  CheckReport rep;
  rep.check = "zmp";
  rep.subject = m.name();
  rep.seed = 0;
  rep.tol = tol;

  int interior = 0;
  double worst = -std::numeric_limits<double>::infinity();
  std::vector<int> worst_idx;
  for (std::size_t fl = 0; fl < dom.node_count(); ++fl) {
    dom.unflat(fl, idx);
    if (!dom.is_interior(idx)) continue;
    ++interior;
    const double excess = z[fl] - tau;
    if (excess > worst) {
      worst = excess;
      worst_idx = idx;
    }
  }
  rep.samples = interior;
  rep.pass = worst <= 0.0;
  rep.details["tau"] = tau;
  rep.details["max_excess"] = worst;
  rep.details["approximator_found"] = true;
  if (!rep.pass) {
    Counterexample ce;
    ce.x = dom.point(worst_idx);
    ce.margins.emplace_back("z", z.at(worst_idx));
    ce.margins.emplace_back("excess", worst);
    ce.note = "interior node where z exceeds tau";
    rep.counterexamples.push_back(std::move(ce));
  }
  return rep;
}

}  // namespace jetlab
