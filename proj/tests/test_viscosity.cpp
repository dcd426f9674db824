#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "jetlab/builtins.hpp"
#include "jetlab/errors.hpp"
#include "jetlab/rng.hpp"
#include "jetlab/viscosity.hpp"

using namespace jetlab;

// Independent oracles, written before the checks that consume them.

// In one dimension the touching-quadratic family admits direct enumeration:
// gradients phat + h*s and curvatures ahat + h*t with s, t in {-1, 0, 1},
// kept when the quadratic anchored at the node value stays on the correct
// side of u over both neighbors within slack c*h^2.  On dyadic grids every
// quantity below is exact in binary floating point, so the comparison with
// the library can be bitwise.
struct Quad1 {
  double p = 0.0;
  double a = 0.0;
};

static std::vector<Quad1> enumerate_touching_1d(double um, double u0,
                                                double up, double h,
                                                bool upper, double c) {
  const double phat = (up - um) / (2.0 * h);
  const double ahat = (up - 2.0 * u0 + um) / (h * h);
  const double slack = c * h * h;
  std::vector<Quad1> keep;
  for (int s = -1; s <= 1; ++s) {
    for (int t = -1; t <= 1; ++t) {
      const double p = phat + h * s;
      const double a = ahat + h * t;
      bool ok = true;
      for (double d : {-h, h}) {
        const double ad = a * d;
        double q = 0.0;
        q += p * d + 0.5 * ad * d;
        const double phi = u0 + q;
        const double uv = d < 0.0 ? um : up;
        if (upper ? !(phi >= uv - slack) : !(phi <= uv + slack)) ok = false;
      }
      if (ok) keep.push_back({p, a});
    }
  }
  return keep;
}

// At a kink of u(x) = |x| the difference curvature is +2/h, so every kept
// upper quadratic keeps a large positive curvature; for -|x| it is -2/h and
// every kept upper quadratic keeps a large negative curvature.  These two
// facts drive the subharmonicity examples below.
static double kink_curvature(double h) { return 2.0 / h; }

namespace {

Domain line(double h) { return Domain({-1.0}, {1.0}, h); }

Domain square(double lo, double hi, double h) {
  return Domain({lo, lo}, {hi, hi}, h);
}

GridFunction sample(const Domain& d,
                    const std::function<double(std::span<const double>)>& f) {
  return GridFunction::from_function(d, f);
}

double abs_sum(std::span<const double> x) {
  double s = 0.0;
  for (double c : x) s += std::abs(c);
  return s;
}

double half_sq(std::span<const double> x) {
  double s = 0.0;
  for (double c : x) s += c * c;
  return 0.5 * s;
}

double margin_value(const Counterexample& ce, const std::string& name) {
  for (const auto& [k, v] : ce.margins)
    if (k == name) return v;
  FAIL("missing margin ", name);
  return 0.0;
}

const NodeStatus& status_at(const Verdict& v, std::vector<int> node) {
  for (const NodeStatus& st : v.nodes)
    if (st.node == node) return st;
  FAIL("missing node status");
  static NodeStatus dummy;
  return dummy;
}

GridFunction max_affine(const Domain& d, CounterRng& rng, int pieces) {
  std::vector<std::vector<double>> slopes;
  std::vector<double> offsets;
  for (int k = 0; k < pieces; ++k) {
    std::vector<double> a(d.dim());
    for (double& c : a) c = rng.uniform(-1.0, 1.0);
    slopes.push_back(std::move(a));
    offsets.push_back(rng.uniform(-0.5, 0.5));
  }
  return GridFunction::from_function(d, [&](std::span<const double> x) {
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < pieces; ++k) {
      double v = offsets[k];
      for (int i = 0; i < d.dim(); ++i) v += slopes[k][i] * x[i];
      best = std::max(best, v);
    }
    return best;
  });
}

}  // namespace

TEST_CASE("one-dimensional contact jets match direct enumeration") {
  const Domain dom = line(1.0 / 16.0);
  const double h = dom.h();
  const GridFunction u = sample(dom, abs_sum);
  const GridFunction nu = sample(
      dom, [](std::span<const double> x) { return -std::abs(x[0]); });
  const Tolerances tol;

  for (const GridFunction* g : {&u, &nu}) {
    for (int i = 1; i < dom.extent(0) - 1; ++i) {
      const std::vector<int> node{i};
      std::vector<int> nb{i - 1};
      const double um = g->at(nb);
      nb[0] = i + 1;
      const double up = g->at(nb);
      for (ContactSide side : {ContactSide::Upper, ContactSide::Lower}) {
        const ContactJetSet jets = contact_jets(*g, node, side);
        const std::vector<Quad1> want = enumerate_touching_1d(
            um, g->at(node), up, h, side == ContactSide::Upper,
            tol.contact_slack);
        REQUIRE(jets.jets.size() == want.size());
        for (std::size_t k = 0; k < want.size(); ++k) {
          CHECK(jets.jets[k].r == g->at(node));
          CHECK(jets.jets[k].p[0] == want[k].p);
          CHECK(jets.jets[k].a.at(0, 0) == want[k].a);
        }
      }
    }
  }

  // The kink at the origin: upper jets of |x| all keep curvature near +2/h,
  // upper jets of -|x| all keep curvature near -2/h.
  const std::vector<int> kink{dom.extent(0) / 2};
  REQUIRE(dom.point(kink)[0] == 0.0);
  const ContactJetSet up_abs = contact_jets(u, kink, ContactSide::Upper);
  REQUIRE(!up_abs.jets.empty());
  for (const Jet& j : up_abs.jets)
    CHECK(j.a.at(0, 0) >= kink_curvature(h) - h);
  const ContactJetSet up_neg = contact_jets(nu, kink, ContactSide::Upper);
  REQUIRE(!up_neg.jets.empty());
  for (const Jet& j : up_neg.jets)
    CHECK(j.a.at(0, 0) <= -kink_curvature(h) + h);
}

TEST_CASE("contact jet preconditions and sentinels") {
  const Domain dom = square(0.0, 1.0, 0.125);
  GridFunction u = sample(dom, half_sq);

  CHECK_THROWS_AS(contact_jets(u, std::vector<int>{0, 4}, ContactSide::Upper),
                  PreconditionError);
  CHECK_THROWS_AS(
      contact_jets(u, std::vector<int>{1, 1}, ContactSide::Upper, 2),
      PreconditionError);
  CHECK_THROWS_AS(contact_jets(u, std::vector<int>{4}, ContactSide::Upper),
                  InvalidInput);
  CHECK_THROWS_AS(
      contact_jets(u, std::vector<int>{4, 99}, ContactSide::Upper),
      InvalidInput);
  CHECK_THROWS_AS(
      contact_jets(u, std::vector<int>{4, 4}, ContactSide::Upper, 0),
      InvalidInput);

  // A node at -inf has no finite touching quadratic; a non-finite neighbor
  // empties the difference stencil.
  const double inf = std::numeric_limits<double>::infinity();
  u.set(std::vector<int>{4, 4}, -inf);
  CHECK(contact_jets(u, std::vector<int>{4, 4}, ContactSide::Upper)
            .jets.empty());
  CHECK(contact_jets(u, std::vector<int>{4, 3}, ContactSide::Lower)
            .jets.empty());
  u.set(std::vector<int>{4, 4}, inf);
  CHECK(contact_jets(u, std::vector<int>{4, 4}, ContactSide::Upper)
            .jets.empty());
}

TEST_CASE("smooth functions keep their classical jets") {
  const Domain dom = square(0.0, 1.0, 0.125);
  const GridFunction u = sample(dom, half_sq);
  const std::vector<int> node{4, 4};
  const std::vector<double> x = dom.point(node);

  // Central differences are exact on quadratics, so the classical jet
  // (u(x), x, I) is the s = 0 lattice candidate and touches exactly.
  Jet classical(half_sq(x), x, SymMatrix::identity(2));
  for (ContactSide side : {ContactSide::Upper, ContactSide::Lower}) {
    const ContactJetSet jets = contact_jets(u, node, side);
    CHECK(std::find(jets.jets.begin(), jets.jets.end(), classical) !=
          jets.jets.end());
  }

  // Same with a radius-2 stencil: the wider touch test keeps the exact jet.
  const ContactJetSet wide = contact_jets(u, node, ContactSide::Upper, 2);
  CHECK(std::find(wide.jets.begin(), wide.jets.end(), classical) !=
        wide.jets.end());
}

TEST_CASE("absolute value is subharmonic for the trace set, its negative is not") {
  const Domain dom = line(1.0 / 16.0);
  const double h = dom.h();
  const Subequation f = induce(make_laplace(1));
  const GridFunction u = sample(dom, abs_sum);
  const GridFunction nu = grid_negate(u);
  const Tolerances tol;

  const Verdict pos = is_subharmonic(f, u, tol);
  CHECK(pos.holds);
  CHECK(pos.violations.empty());
  CHECK(pos.tau == tol.contact_slack * h);
  CHECK(pos.nodes.size() == static_cast<std::size_t>(dom.extent(0) - 2));

  const Verdict neg = is_subharmonic(f, nu, tol);
  CHECK(!neg.holds);
  REQUIRE(!neg.violations.empty());
  for (const Violation& w : neg.violations) {
    // Only the kink can fail, and it fails with the large negative
    // curvature the enumeration oracle predicts.
    CHECK(w.node == std::vector<int>{dom.extent(0) / 2});
    CHECK(w.jet.a.at(0, 0) <= -kink_curvature(h) + h);
    CHECK(w.margin == f.defining(dom.point(w.node), w.jet));
    CHECK(w.margin < -neg.tau);
  }
  const NodeStatus& kink = status_at(neg, {dom.extent(0) / 2});
  CHECK(!kink.ok);

  // The negative is superharmonic; a -inf node passes vacuously.
  CHECK(is_superharmonic(f, nu, tol).holds);
  GridFunction punct = u;
  punct.set(std::vector<int>{5}, -std::numeric_limits<double>::infinity());
  const Verdict vac = is_subharmonic(f, punct, tol);
  CHECK(vac.holds);
  CHECK(status_at(vac, {5}).jets_tested == 0);
  CHECK(status_at(vac, {6}).jets_tested == 0);

  CHECK_THROWS_AS(is_subharmonic(induce(make_laplace(2)), u, tol),
                  InvalidInput);
}

TEST_CASE("verdicts match the classical sign away from the margin band") {
  const Domain dom = square(-1.0, 1.0, 1.0 / 32.0);
  const double h = dom.h();
  const Tolerances tol;
  const Subequation f = induce(make_laplace(2));
  const GridFunction u = sample(dom, [](std::span<const double> x) {
    return std::sin(2.0 * x[0]) + x[1] * x[1];
  });

  const Verdict vd = is_subharmonic(f, u, tol);
  int decided = 0;
  for (const NodeStatus& st : vd.nodes) {
    const std::vector<double> x = dom.point(st.node);
    const double classical = 2.0 - 4.0 * std::sin(2.0 * x[0]);
    if (std::abs(classical) <= tol.contact_slack * h) continue;
    ++decided;
    CHECK(st.ok == (classical >= 0.0));
  }
  // The band is thin, so nearly every node is decided.
  CHECK(decided > static_cast<int>(vd.nodes.size()) / 2);
  CHECK(!vd.holds);
}

TEST_CASE("superharmonicity is literally the dual reduction") {
  const Domain dom = square(0.0, 1.0, 0.125);
  const Tolerances tol;
  const GridFunction w = sample(dom, half_sq);

  const Subequation lap = induce(make_laplace(2));
  const Subequation ma =
      induce(make_monge_ampere(2, ScalarField::of_constant(1.0), dom));
  for (const Subequation* f : {&lap, &ma}) {
    const Verdict via_super = is_superharmonic(*f, w, tol);
    const Verdict via_dual = is_subharmonic(f->dual(), grid_negate(w), tol);
    CHECK(via_super == via_dual);
  }
  // The equality is payload-literal also when the verdict fails.
  CHECK(!is_superharmonic(lap, w, tol).holds);
}

TEST_CASE("admissibility of quadratics for the builtin operators") {
  const Domain dom = square(0.0, 1.0, 0.125);
  const Tolerances tol;
  const GridFunction up = sample(dom, half_sq);
  const GridFunction dn = grid_negate(up);

  const ProperEllipticPair ma =
      make_monge_ampere(2, ScalarField::of_constant(1.0), dom);
  CHECK(admissible_subsolution(ma, up, tol).holds);
  const Verdict bad = admissible_subsolution(ma, dn, tol);
  CHECK(!bad.holds);
  REQUIRE(!bad.violations.empty());
  // The concave function leaves the convexity constraint by about -1.
  CHECK(bad.violations.front().margin < -0.5);

  const ProperEllipticPair lap = make_laplace(2);
  CHECK(!admissible_supersolution(lap, up, tol).holds);
  CHECK(admissible_supersolution(lap, dn, tol).holds);
  CHECK(admissible_subsolution(lap, up, tol).holds);

  CHECK_THROWS_AS(admissible_subsolution(make_laplace(3), up, tol),
                  InvalidInput);
  CHECK_THROWS_AS(admissible_supersolution(make_laplace(3), up, tol),
                  InvalidInput);
}

TEST_CASE("correspondence agrees for verified pairs") {
  const Tolerances tol;

  const Domain dom2 = square(0.0, 1.0, 0.125);
  const GridFunction up2 = sample(dom2, half_sq);
  const GridFunction dn2 = grid_negate(up2);
  const GridFunction ridge = sample(
      dom2, [](std::span<const double> x) { return std::abs(x[0] - 0.5); });

  struct Case {
    ProperEllipticPair pair;
    const GridFunction* u;
    SolutionSide side;
  };
  const Case cases[] = {
      {make_laplace(2), &up2, SolutionSide::Sub},
      {make_laplace(2), &dn2, SolutionSide::Super},
      {make_laplace(2), &ridge, SolutionSide::Sub},
      {make_min_eigenvalue(2), &ridge, SolutionSide::Sub},
      {make_monge_ampere(2, ScalarField::of_constant(1.0), dom2), &up2,
       SolutionSide::Sub},
  };
  for (const Case& c : cases) {
    const CheckReport rep =
        check_correspondence(c.pair, *c.u, c.side, true, tol);
    CAPTURE(c.pair.name);
    CHECK(rep.pass);
    CHECK(rep.check == "correspondence");
    CHECK(rep.counterexamples.empty());
    CHECK(rep.details.at("disagreements") == 0);
    CHECK(rep.details.at("hypotheses_verified") == true);
    CHECK(!rep.details.contains("flag"));
    CHECK(rep.samples == static_cast<int>((dom2.extent(0) - 2) *
                                          (dom2.extent(1) - 2)));
  }

  const Domain dom1 = line(1.0 / 16.0);
  const GridFunction vee = sample(dom1, abs_sum);
  const CheckReport rep = check_correspondence(make_laplace(1), vee,
                                               SolutionSide::Sub, true, tol);
  CHECK(rep.pass);
  CHECK(rep.details.at("set_verdict") == "HOLDS");
  CHECK(rep.details.at("operator_verdict") == "HOLDS");
}

TEST_CASE("det minus r breaks the correspondence on the supersolution side") {
  const Domain dom = square(0.0, 1.0, 0.125);
  const double h = dom.h();
  const Tolerances tol;
  const ProperEllipticPair pair = make_det_minus_r(2, DetMinusRVariant::G2);
  const GridFunction u(dom, -1.0);

  // Operator side: u = -1 is an admissible subsolution but not an
  // admissible supersolution, since every lower jet keeps det - r near 1.
  // The recorded witness is the jet of least excess in the family, the
  // mixed tilt with det = -h^2.
  CHECK(admissible_subsolution(pair, u, tol).holds);
  const Verdict super = admissible_supersolution(pair, u, tol);
  CHECK(!super.holds);
  for (const NodeStatus& st : super.nodes) CHECK(!st.ok);
  REQUIRE(!super.violations.empty());
  const Violation& first = super.violations.front();
  CHECK(first.node == std::vector<int>{1, 1});
  const Jet expected(-1.0, {-h, -h}, SymMatrix::diag(std::vector<double>{-h, h}));
  CHECK(first.jet == expected);
  CHECK(first.margin == 1.0 - h * h);

  // Set side: the same function is dual-subharmonic, so the correspondence
  // report disagrees at every interior node.
  CHECK(is_superharmonic(induce(pair), u, tol).holds);
  const CheckReport rep =
      check_correspondence(pair, u, SolutionSide::Super, false, tol);
  CHECK(!rep.pass);
  CHECK(rep.details.at("set_verdict") == "HOLDS");
  CHECK(rep.details.at("operator_verdict") == "FAILS");
  CHECK(rep.details.at("disagreements") == rep.samples);
  CHECK(rep.details.at("flag") == "UNVERIFIED-HYPOTHESES");
  REQUIRE(!rep.counterexamples.empty());
  const Counterexample& ce = rep.counterexamples.front();
  CHECK(ce.jet == expected);
  CHECK(margin_value(ce, "failing_margin") == 1.0 - h * h);
  CHECK(margin_value(ce, "operator_value") == 1.0 - h * h);
  CHECK(margin_value(ce, "constraint_margin") == -h);

  // The subsolution side agrees; the hypotheses flag is orthogonal to pass.
  const CheckReport sub =
      check_correspondence(pair, u, SolutionSide::Sub, false, tol);
  CHECK(sub.pass);
  CHECK(sub.details.at("flag") == "UNVERIFIED-HYPOTHESES");
}

TEST_CASE("subharmonic addition lands in the dual cone set") {
  const Domain dom = square(0.0, 1.0, 0.125);
  const Tolerances tol;
  const Subequation lap = induce(make_laplace(2));
  const MonotonicityCone conv = MonotonicityCone::convexity(2);

  const GridFunction u = sample(dom, half_sq);
  const GridFunction harm = sample(dom, [](std::span<const double> x) {
    return x[0] * x[0] - x[1] * x[1];
  });
  const CheckReport rep = check_subharmonic_addition(lap, u, harm, conv, tol);
  CHECK(rep.pass);
  CHECK(rep.check == "subharmonic_addition");
  CHECK(rep.details.at("violations") == 0);

  // Concave summands fail the dual-side precondition, honestly: -half_sq
  // is not subharmonic for the self-dual trace set.
  CHECK_THROWS_AS(
      check_subharmonic_addition(lap, u, grid_negate(u), conv, tol),
      PreconditionError);
  CHECK_THROWS_AS(check_subharmonic_addition(
                      lap, u, GridFunction(square(0.0, 1.0, 0.25)), conv, tol),
                  InvalidInput);
  CHECK_THROWS_AS(
      check_subharmonic_addition(induce(make_laplace(3)), u, harm, conv, tol),
      InvalidInput);

  // Convexity cone set: convex plus ridge-subaffine stays subaffine.
  const Subequation pset = cone_subequation(conv);
  const GridFunction ridge = sample(
      dom, [](std::span<const double> x) { return -std::abs(x[0] - 0.5); });
  const CheckReport prep =
      check_subharmonic_addition(pset, u, ridge, conv, tol);
  CHECK(prep.pass);

  // Random max-affine pairs: convex functions work on both sides of the
  // trace set, and their sum stays in the dual cone set.
  for (std::uint64_t stream = 0; stream < 20; ++stream) {
    CounterRng rng(7, stream);
    const GridFunction a = max_affine(dom, rng, 3);
    const GridFunction b = max_affine(dom, rng, 3);
    const CheckReport r = check_subharmonic_addition(lap, a, b, conv, tol);
    CAPTURE(stream);
    CHECK(r.pass);
  }
}

TEST_CASE("axis-sphere mean value bound") {
  const Tolerances tol;

  const Domain dom1 = line(1.0 / 16.0);
  const double h = dom1.h();
  CHECK(mean_value_check(sample(dom1, half_sq), tol).pass);

  // Exactly harmonic polynomial: the axis averages match to the bit.
  const Domain dom2 = square(-1.0, 1.0, 1.0 / 16.0);
  const CheckReport harm = mean_value_check(
      sample(dom2,
             [](std::span<const double> x) {
               return x[0] * x[0] - x[1] * x[1];
             }),
      tol);
  CHECK(harm.pass);
  CHECK(harm.details.at("violations") == 0);

  // Strictly concave: the radius-2h sphere sits exactly on the slack, the
  // radius-4h sphere is over it.
  const CheckReport bad = mean_value_check(
      sample(dom1,
             [](std::span<const double> x) { return -x[0] * x[0]; }),
      tol);
  CHECK(!bad.pass);
  REQUIRE(!bad.counterexamples.empty());
  for (const Counterexample& ce : bad.counterexamples) {
    CHECK(margin_value(ce, "radius") == 4.0 * h);
    CHECK(margin_value(ce, "excess") == 16.0 * h * h);
  }

  GridFunction holed = sample(dom1, half_sq);
  holed.set(std::vector<int>{3}, std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(mean_value_check(holed, tol), InvalidInput);
}

TEST_CASE("verdicts are stable under grid refinement") {
  const Tolerances tol;
  const Subequation lap1 = induce(make_laplace(1));

  for (double h : {1.0 / 16.0, 1.0 / 32.0}) {
    const Domain dom = line(h);
    CHECK(is_subharmonic(lap1, sample(dom, abs_sum), tol).holds);
    CHECK(!is_subharmonic(lap1, grid_negate(sample(dom, abs_sum)), tol)
               .holds);
    CHECK(!mean_value_check(
               sample(dom,
                      [](std::span<const double> x) { return -x[0] * x[0]; }),
               tol)
               .pass);
  }

  const ProperEllipticPair ma =
      make_monge_ampere(2, ScalarField::of_constant(1.0),
                        square(0.0, 1.0, 0.0625));
  const ProperEllipticPair detr = make_det_minus_r(2, DetMinusRVariant::G2);
  for (double h : {0.125, 0.0625}) {
    const Domain dom = square(0.0, 1.0, h);
    const GridFunction up = sample(dom, half_sq);
    CHECK(admissible_subsolution(ma, up, tol).holds);
    CHECK(!admissible_subsolution(ma, grid_negate(up), tol).holds);
    const CheckReport rep = check_correspondence(
        detr, GridFunction(dom, -1.0), SolutionSide::Super, false, tol);
    CHECK(!rep.pass);
    CHECK(rep.details.at("disagreements") == rep.samples);
  }
}
