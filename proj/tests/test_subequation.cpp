#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "jetlab/builtins.hpp"
#include "jetlab/errors.hpp"
#include "jetlab/rng.hpp"
#include "jetlab/subequation.hpp"

using namespace jetlab;

// Independent oracles, written before the checks that consume them.

// Distance from A to the half-space {tr >= 0} in the Frobenius norm: the
// boundary is a hyperplane with unit normal I/sqrt(n), so the signed
// distance is tr(A)/sqrt(n).
static double halfspace_distance_oracle(const SymMatrix& a) {
  return a.trace() / std::sqrt(static_cast<double>(a.dim()));
}

// Membership crossing along A(t) = ((1-t)*a_in + t*a_out) * I for the fiber
// {A >= 0, det A >= f}: the active constraint on this ray is the scalar
// scale(t) = (1-t)a_in + t*a_out hitting f^(1/n).
static double ma_ray_crossing_oracle(double a_in, double a_out, int n,
                                     double f) {
  double target = std::pow(f, 1.0 / n);
  return (a_in - target) / (a_in - a_out);
}

namespace {

Domain unit_box(int dim, double h = 0.25) {
  return Domain(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0),
                h);
}

struct NamedPair {
  std::string label;
  ProperEllipticPair pair;
};

std::vector<NamedPair> builtin_zoo(int dim) {
  Domain om = unit_box(dim);
  std::vector<NamedPair> out;
  out.push_back({"laplace", make_laplace(dim)});
  out.push_back({"min_eigenvalue", make_min_eigenvalue(dim)});
  out.push_back(
      {"monge_ampere", make_monge_ampere(dim, ScalarField::of_constant(1.0),
                                         om)});
  {
    std::vector<Expression> entries;
    for (int i = 0; i < dim; ++i)
      for (int j = i; j < dim; ++j)
        entries.push_back(i == 0 && j == 0 ? Expression::parse("x1")
                                           : Expression::constant(0.0));
    out.push_back({"perturbed_monge_ampere",
                   make_perturbed_monge_ampere(
                       dim, MatrixField::of_expressions(dim, entries),
                       ScalarField::of_constant(1.0), om)});
  }
  {
    std::vector<double> e1(dim, 0.0);
    e1[0] = 1.0;
    out.push_back(
        {"transport",
         make_transport(dim,
                        GradientField::of_expression(
                            Expression::parse("max(p1, 0)")),
                        DirectionalCone::halfspaces(dim, {e1}),
                        ScalarField::of_constant(1.0), om, 1.0)});
  }
  out.push_back({"det_minus_r_G1", make_det_minus_r(dim, DetMinusRVariant::G1)});
  out.push_back({"det_minus_r_G2", make_det_minus_r(dim, DetMinusRVariant::G2)});
  return out;
}

// Structured sample from the constraint of a builtin (by construction, not
// through the membership oracle).
Jet constraint_sample(const NamedPair& np, std::span<const double> x,
                      CounterRng& rng) {
  int dim = np.pair.cone.dim();
  Jet j = sample_jet(dim, rng, 2.0);
  if (np.label == "monge_ampere") {
    j.a = sample_psd(dim, rng, 2.0);
  } else if (np.label == "perturbed_monge_ampere") {
    j.a = sample_psd(dim, rng, 2.0);
    j.a -= np.pair.constraint->has_defining()
               ? SymMatrix::diag(std::vector<double>{x[0], 0.0})
               : SymMatrix(dim);
  } else if (np.label == "transport") {
    j.a = sample_psd(dim, rng, 2.0);
    j.p[0] = std::abs(j.p[0]);
  } else if (np.label == "det_minus_r_G1") {
    j.a = sample_psd(dim, rng, 2.0);
    j.r = -std::abs(j.r);
  } else if (np.label == "det_minus_r_G2") {
    j.a = sample_psd(dim, rng, 2.0);
  }
  return j;
}

std::vector<double> sample_x(const ProperEllipticPair& p, int dim,
                             CounterRng& rng) {
  if (p.x_domain) return p.x_domain->sample_point(rng);
  std::vector<double> x(dim);
  for (auto& v : x) v = rng.uniform();
  return x;
}

}  // namespace

TEST_CASE("membership tri-state on the classic fibers") {
  auto h = induce(make_laplace(2));
  auto p = induce(make_min_eigenvalue(2));
  std::vector<double> x{0.3, 0.4};

  Jet bad(0.0, {0.0, 0.0}, SymMatrix::diag(std::vector<double>{1.0, -2.0}));
  auto m = h.member(x, bad);
  CHECK(m.region == Region::Exterior);
  CHECK(m.margin == doctest::Approx(-1.0).epsilon(1e-12));

  Jet good(0.0, {0.0, 0.0}, SymMatrix::diag(std::vector<double>{2.0, 3.0}));
  m = p.member(x, good);
  CHECK(m.region == Region::Interior);
  CHECK(m.margin == doctest::Approx(2.0).epsilon(1e-12));

  Jet edge(0.0, {0.0, 0.0}, SymMatrix::diag(std::vector<double>{0.0, 3.0}));
  m = p.member(x, edge);
  CHECK(m.region == Region::Shell);
  CHECK(std::abs(m.margin) <= 1e-9 * (1 + jet_norm(edge)));
}

TEST_CASE("the subharmonicity constraint is exactly self-dual") {
  auto h = induce(make_laplace(2));
  auto hd = h.dual();
  CounterRng rng(11, 0);
  std::vector<double> x{0.5, 0.5};
  int mismatches = 0;
  for (int i = 0; i < 100000; ++i) {
    Jet j = sample_jet(2, rng, 3.0);
    double m = h.defining(x, j);
    // The dual margin -(-tr) must match bitwise, not just approximately.
    CHECK(hd.defining(x, j) == m);
    if (std::abs(m) > 1e-8 && hd.contains(x, j) != h.contains(x, j))
      ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("dual of the convexity constraint is the subaffine half test") {
  auto p = induce(make_min_eigenvalue(2));
  auto pd = p.dual();
  CounterRng rng(12, 0);
  std::vector<double> x{0.5, 0.5};
  int mismatches = 0;
  for (int i = 0; i < 100000; ++i) {
    Jet j = sample_jet(2, rng, 3.0);
    double lmax = max_eigenvalue(j.a);
    CHECK(pd.defining(x, j) == doctest::Approx(lmax).epsilon(1e-9));
    if (std::abs(lmax) > 1e-8 && pd.contains(x, j) != (lmax >= 0.0))
      ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("biduality holds for every builtin off the boundary shell") {
  for (auto& np : builtin_zoo(2)) {
    CAPTURE(np.label);
    auto f = induce(np.pair);
    auto ff = f.dual().dual();
    CounterRng rng(13, 0);
    int mismatches = 0;
    for (int i = 0; i < 100000; ++i) {
      auto x = sample_x(np.pair, 2, rng);
      Jet j = sample_jet(2, rng, 3.0);
      double m = f.defining(x, j);
      // Double negation is exact, so the margins must be identical.
      CHECK(ff.defining(x, j) == m);
      if (std::abs(m) > 1e-8 && ff.contains(x, j) != f.contains(x, j))
        ++mismatches;
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("oracle-path dual of dual recovers the set by probing") {
  auto cone = MonotonicityCone::convexity(2);
  auto h_oracle = Subequation::from_oracle(
      "half-space", 2,
      [](std::span<const double>, const Jet& j) { return j.a.trace() >= 0.0; },
      cone);
  auto dd = h_oracle.dual().dual();
  CounterRng rng(14, 0);
  std::vector<double> x{0.5, 0.5};
  int mismatches = 0;
  for (int i = 0; i < 2000; ++i) {
    Jet j = sample_jet(2, rng, 3.0);
    if (std::abs(j.a.trace()) < 1e-8) continue;
    if (dd.contains(x, j) != h_oracle.contains(x, j)) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("proper ellipticity of every builtin on constraint samples") {
  for (auto& np : builtin_zoo(2)) {
    CAPTURE(np.label);
    CounterRng rng(15, 0);
    for (int i = 0; i < 10000; ++i) {
      auto x = sample_x(np.pair, 2, rng);
      Jet j = constraint_sample(np, x, rng);
      if (!np.pair.in_constraint(x, j)) continue;
      double base = np.pair.op(x, j);
      Jet shifted = j;
      shifted.r += -std::abs(rng.normal());
      shifted.a += sample_psd(2, rng, 1.0);
      REQUIRE(np.pair.op(x, shifted) >= base - 1e-12);
    }
  }
}

TEST_CASE("induced fibers match their closed forms") {
  std::vector<double> x{0.7, 0.2};
  CounterRng rng(16, 0);

  auto h = induce(make_laplace(2));
  auto pma = [&] {
    std::vector<Expression> entries = {Expression::parse("x1"),
                                       Expression::constant(0.0),
                                       Expression::constant(0.0)};
    return induce(make_perturbed_monge_ampere(
        2, MatrixField::of_expressions(2, entries),
        ScalarField::of_constant(1.0), unit_box(2)));
  }();
  auto dr = induce(make_det_minus_r(2, DetMinusRVariant::G2));

  for (int i = 0; i < 5000; ++i) {
    Jet j = sample_jet(2, rng, 2.0);
    CHECK(h.defining(x, j) == j.a.trace());

    SymMatrix shifted = j.a + SymMatrix::diag(std::vector<double>{x[0], 0.0});
    double expected = std::min(min_eigenvalue(shifted), shifted.det() - 1.0);
    CHECK(std::abs(pma.defining(x, j) - expected) <=
          1e-12 * (1.0 + std::abs(expected)));

    bool in_dr = min_eigenvalue(j.a) >= 0.0 && j.a.det() - j.r >= 0.0;
    CHECK(dr.contains(x, j) == in_dr);

    Jet psd = j;
    psd.a = sample_psd(2, rng, 2.0);
    bool in_dr2 = psd.a.det() - psd.r >= 0.0 && min_eigenvalue(psd.a) >= -1e-15;
    if (min_eigenvalue(psd.a) > 1e-12)
      CHECK(dr.contains(x, psd) == in_dr2);
  }
}

TEST_CASE("positive operator value on the constraint edge is not interior") {
  for (auto variant : {DetMinusRVariant::G1, DetMinusRVariant::G2}) {
    auto pair = make_det_minus_r(2, variant);
    auto f = induce(pair);
    std::vector<double> x{0.5, 0.5};
    Jet witness(-1.0, {0.0, 0.0}, SymMatrix(2));
    CHECK(pair.in_constraint(x, witness));
    CHECK(pair.op(x, witness) == 1.0);
    CHECK(f.contains(x, witness));
    CHECK(f.classify(x, witness) != Region::Interior);
  }
}

TEST_CASE("boundary probe lands on the crossing") {
  std::vector<double> x{0.5, 0.5};

  auto h = induce(make_laplace(2));
  Jet in(0.0, {0.0, 0.0}, SymMatrix::identity(2));
  Jet out(0.0, {0.0, 0.0}, -1.0 * SymMatrix::identity(2));
  Jet cross = boundary_probe(h, x, in, out);
  CHECK(std::abs(cross.a.trace()) <= 1e-12);

  auto p = induce(make_min_eigenvalue(2));
  Jet pin(0.0, {0.0, 0.0}, SymMatrix::diag(std::vector<double>{1.0, 1.0}));
  Jet pout(0.0, {0.0, 0.0}, SymMatrix::diag(std::vector<double>{-1.0, 1.0}));
  cross = boundary_probe(p, x, pin, pout);
  CHECK(cross.a.at(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cross.a.at(1, 1) == doctest::Approx(1.0).epsilon(1e-12));

  auto ma = induce(
      make_monge_ampere(2, ScalarField::of_constant(1.0), unit_box(2)));
  Jet min(0.0, {0.0, 0.0}, 2.0 * SymMatrix::identity(2));
  Jet mout(0.0, {0.0, 0.0}, -1.0 * SymMatrix::identity(2));
  cross = boundary_probe(ma, x, min, mout);
  double t_star = ma_ray_crossing_oracle(2.0, -1.0, 2, 1.0);
  CHECK(t_star == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  double scale = (1.0 - t_star) * 2.0 + t_star * (-1.0);
  CHECK(cross.a.at(0, 0) == doctest::Approx(scale).epsilon(1e-9));
  CHECK(cross.a.at(1, 1) == doctest::Approx(scale).epsilon(1e-9));
  CHECK(std::abs(cross.a.at(0, 1)) <= 1e-12);
}

TEST_CASE("boundary probe rejects bad brackets") {
  auto h = induce(make_laplace(2));
  std::vector<double> x{0.5, 0.5};
  Jet in(0.0, {0.0, 0.0}, SymMatrix::identity(2));
  Jet out(0.0, {0.0, 0.0}, -1.0 * SymMatrix::identity(2));
  CHECK_THROWS_AS(boundary_probe(h, x, out, in), PreconditionError);
  CHECK_THROWS_AS(boundary_probe(h, x, in, in), PreconditionError);
}

TEST_CASE("signed distance against the half-space closed form") {
  auto h = induce(make_laplace(2));
  std::vector<double> x{0.5, 0.5};

  Jet j(0.0, {0.0, 0.0}, SymMatrix::diag(std::vector<double>{1.0, 2.0}));
  double d = signed_fiber_distance(h, x, j);
  CHECK(d == doctest::Approx(halfspace_distance_oracle(j.a)).epsilon(1e-9));
  CHECK(d == doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-9));

  Jet shell(0.0, {0.0, 0.0}, SymMatrix::diag(std::vector<double>{-1.0, 1.0}));
  CHECK(std::abs(signed_fiber_distance(h, x, shell)) <= 1e-6);

  Jet neg(0.0, {0.0, 0.0}, SymMatrix::diag(std::vector<double>{-3.0, 1.0}));
  d = signed_fiber_distance(h, x, neg);
  CHECK(d < 0.0);
  CHECK(d == doctest::Approx(halfspace_distance_oracle(neg.a)).epsilon(1e-9));
}

TEST_CASE("degenerate fibers are reported, not silently measured") {
  auto cone = MonotonicityCone::convexity(2);
  auto all = Subequation::from_defining(
      "everything", 2,
      [](std::span<const double>, const Jet&) { return 1.0; }, cone);
  auto none = Subequation::from_defining(
      "nothing", 2, [](std::span<const double>, const Jet&) { return -1.0; },
      cone);
  std::vector<double> x{0.5, 0.5};
  Jet j = Jet::zero(2);
  CHECK_THROWS_AS(signed_fiber_distance(all, x, j), FiberDegenerate);
  CHECK_THROWS_AS(signed_fiber_distance(none, x, j), FiberDegenerate);
}

TEST_CASE("signed distance pair induces the base set back") {
  auto base = induce(make_min_eigenvalue(2));
  auto pair = signed_distance_pair(base);
  auto again = induce(pair);
  CounterRng rng(18, 0);
  std::vector<double> x{0.5, 0.5};
  for (int i = 0; i < 300; ++i) {
    Jet j = sample_jet(2, rng, 3.0);
    if (std::abs(base.defining(x, j)) < 1e-6) continue;
    CHECK(again.contains(x, j) == base.contains(x, j));
  }
}

TEST_CASE("base points outside the declared domain are rejected") {
  auto ma = induce(
      make_monge_ampere(2, ScalarField::of_constant(1.0), unit_box(2)));
  std::vector<double> outside{2.0, 2.0};
  Jet j = Jet::zero(2);
  CHECK_THROWS_AS(ma.member(outside, j), InvalidInput);
  CHECK_THROWS_AS(ma.defining(outside, j), InvalidInput);
}

TEST_CASE("cone subequation duals agree with the closed-form cone duals") {
  std::vector<double> e1{1.0, 0.0};
  std::vector<MonotonicityCone> zoo = {
      MonotonicityCone::minimal(2),
      MonotonicityCone::negativity_convexity(2),
      MonotonicityCone::convexity(2),
      MonotonicityCone::directional_convexity(
          DirectionalCone::halfspaces(2, {e1})),
      MonotonicityCone::negativity_directional_convexity(
          DirectionalCone::halfspaces(2, {e1})),
  };
  std::vector<double> x{0.5, 0.5};
  for (auto& m : zoo) {
    CAPTURE(m.name());
    auto via_negation = cone_subequation(m).dual();
    auto closed = cone_dual_subequation(m);
    CounterRng rng(19, 0);
    int mismatches = 0;
    for (int i = 0; i < 2000; ++i) {
      Jet j = sample_jet(2, rng, 3.0);
      if (std::abs(closed.defining(x, j)) < 1e-8) continue;
      if (via_negation.contains(x, j) != closed.contains(x, j)) ++mismatches;
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("builtin dispatcher builds from problem params") {
  Domain om = unit_box(2);
  using nlohmann::json;

  CHECK(builtin_pair("laplace", json::object(), 2, om).name == "laplace");
  CHECK(builtin_pair("monge_ampere", json{{"f", "1"}}, 2, om).constrained());
  CHECK(builtin_pair("monge_ampere", json{{"f", 2.5}}, 2, om)
            .op.constant_coefficients);
  auto pma = builtin_pair("perturbed_monge_ampere",
                          json{{"m", {"x1", "0", "0"}}, {"f", "1"}}, 2, om);
  CHECK_FALSE(pma.constant_fibers());
  auto tr = builtin_pair(
      "transport",
      json{{"g", "max(p1, 0)"}, {"d_normals", {{1.0, 0.0}}}, {"f", "1"}}, 2,
      om);
  CHECK(tr.cone.name() == MonotonicityCone::directional_convexity(
                              DirectionalCone::halfspaces(2, {{1.0, 0.0}}))
                              .name());
  CHECK(builtin_pair("det_minus_r", json{{"variant", "G1"}}, 2, om).name ==
        "det_minus_r(G1)");
  auto sd = builtin_pair("signed_distance", json{{"base", "laplace"}}, 2, om);
  CHECK(sd.constrained());

  CHECK_THROWS_AS(builtin_pair("frobnicate", json::object(), 2, om),
                  InvalidInput);
  CHECK_THROWS_AS(builtin_pair("monge_ampere", json::object(), 2, om),
                  InvalidInput);
  CHECK_THROWS_AS(builtin_pair("monge_ampere", json{{"f", "0 - 1"}}, 2, om),
                  InvalidCoefficient);
  CHECK_THROWS_AS(
      builtin_pair("monge_ampere", json{{"f", "x1 - 2"}}, 2, om),
      InvalidCoefficient);
  CHECK(builtin_pair("monge_ampere", json{{"f", "x1"}}, 2, om).constrained());
}
