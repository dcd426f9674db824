#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "jetlab/builtins.hpp"
#include "jetlab/errors.hpp"
#include "jetlab/rng.hpp"
#include "jetlab/verifier.hpp"

using namespace jetlab;

// Independent oracles, written before the checks that consume them.

// det(A) - r at the jet (r, p, A) = (-1, 0, 0): the determinant of the zero
// matrix is 0, so the operator value is exactly 1, while lambda_min(0) = 0
// puts the jet on the constraint boundary.  This is the expected
// compatibility witness for the det-r pairs.
static double det_minus_r_witness_value() { return 0.0 - (-1.0); }

// Weyl bound |lambda_min(S + E) - lambda_min(S)| <= |E|_2.  For the shifted
// hessian fiber {A + diag(x1, 0) >= 0}, replacing x1 by y1 perturbs the
// matrix by |x1 - y1| in the spectral norm, so a jet shifted by eta*I stays
// a member until |x1 - y1| exceeds eta: the modulus obeys delta(eta) >= eta.
static double shifted_fiber_modulus_lower_bound(double eta) { return eta; }

namespace {

Domain unit_box(int dim, double h = 0.25) {
  return Domain(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0),
                h);
}

struct NamedPair {
  std::string label;
  ProperEllipticPair pair;
};

std::vector<NamedPair> well_posed_zoo(int dim) {
  Domain om = unit_box(dim);
  std::vector<NamedPair> out;
  out.push_back({"laplace", make_laplace(dim)});
  out.push_back({"min_eigenvalue", make_min_eigenvalue(dim)});
  out.push_back(
      {"monge_ampere",
       make_monge_ampere(dim, ScalarField::of_constant(1.0), om)});
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
  return out;
}

bool jet_is_exact_witness(const Jet& j) {
  if (j.r != -1.0) return false;
  for (double v : j.p)
    if (v != 0.0) return false;
  for (double v : j.a.packed())
    if (v != 0.0) return false;
  return true;
}

double margin_value(const Counterexample& ce, const std::string& key) {
  for (const auto& [k, v] : ce.margins)
    if (k == key) return v;
  FAIL("missing margin ", key);
  return 0.0;
}

}  // namespace

TEST_CASE("full battery passes for the well-posed builtins") {
  for (const auto& np : well_posed_zoo(2)) {
    CAPTURE(np.label);
    auto reports = verify_battery(np.pair, 1200, 1);
    REQUIRE(reports.size() == 7);
    CHECK(reports[0].check == "P");
    CHECK(reports[1].check == "N");
    CHECK(reports[2].check == "T");
    CHECK(reports[3].check == "monotonicity");
    CHECK(reports[4].check == "pair_monotonicity");
    CHECK(reports[5].check == "biduality");
    CHECK(reports[6].check == "compatibility");
    for (const auto& rep : reports) {
      const std::string dump = rep.to_json().dump();
      CAPTURE(rep.check);
      CAPTURE(dump);
      CHECK(rep.pass);
      CHECK(rep.samples > 0);
      CHECK(rep.counterexamples.empty());
    }
  }
}

TEST_CASE("det minus r fails compatibility and nothing else") {
  for (auto variant : {DetMinusRVariant::G1, DetMinusRVariant::G2}) {
    auto pair = make_det_minus_r(2, variant);
    CAPTURE(pair.name);
    auto reports = verify_battery(pair, 1200, 1);
    for (const auto& rep : reports) {
      CAPTURE(rep.check);
      if (rep.check == "compatibility") {
        CHECK_FALSE(rep.pass);
        REQUIRE_FALSE(rep.counterexamples.empty());
        // Stream 0 starts its segment sweep at r = -1, p = 0, A0 = 0, so
        // the first counterexample is the exact witness jet.
        const Counterexample& ce = rep.counterexamples.front();
        CHECK(jet_is_exact_witness(ce.jet));
        CHECK(margin_value(ce, "operator_value") == det_minus_r_witness_value());
        CHECK(margin_value(ce, "constraint_margin") == 0.0);
        // The witness re-evaluates: operator value 1 on the constraint
        // boundary, and the induced set does not see it as interior.
        CHECK(pair.op(ce.x, ce.jet) == 1.0);
        CHECK(pair.in_constraint(ce.x, ce.jet));
        CHECK(induce(pair).classify(ce.x, ce.jet) != Region::Interior);
      } else {
        CHECK(rep.pass);
      }
    }
  }
}

TEST_CASE("positivity check fails a set that caps the trace") {
  auto bad = Subequation::from_defining(
      "upper trace bound", 2,
      [](std::span<const double>, const Jet& j) { return -j.a.trace(); },
      MonotonicityCone::convexity(2));
  auto rep = check_P(bad, 800, 3);
  CHECK_FALSE(rep.pass);
  REQUIRE_FALSE(rep.counterexamples.empty());
  for (const auto& ce : rep.counterexamples) {
    // Recorded margins reproduce on re-evaluation and the violation is
    // macroscopic, far beyond the membership slack.
    const double margin = bad.defining(ce.x, ce.jet);
    CHECK(margin == margin_value(ce, "margin_after"));
    CHECK(margin < -1e-3);
  }
}

TEST_CASE("negativity check fails a set with a value floor") {
  auto bad = Subequation::from_defining(
      "nonnegative value", 2,
      [](std::span<const double>, const Jet& j) { return j.r; },
      MonotonicityCone::convexity(2));
  auto rep = check_N(bad, 800, 3);
  CHECK_FALSE(rep.pass);
  REQUIRE_FALSE(rep.counterexamples.empty());
  for (const auto& ce : rep.counterexamples) {
    const double margin = bad.defining(ce.x, ce.jet);
    CHECK(margin == margin_value(ce, "margin_after"));
    CHECK(margin < -1e-3);
  }
}

TEST_CASE("stability check flags a detached slab") {
  // {tr A >= 0} union {tr A = -1}: the slab member has no interior approach.
  auto slab = Subequation::from_oracle(
      "trace slab", 2,
      [](std::span<const double>, const Jet& j) {
        const double t = j.a.trace();
        return t >= 0.0 || std::abs(t + 1.0) <= 1e-9;
      },
      MonotonicityCone::convexity(2));
  std::vector<Jet> extras;
  extras.emplace_back(0.0, std::vector<double>{0.0, 0.0},
                      SymMatrix::diag(std::vector<double>{-0.5, -0.5}));
  extras.emplace_back(0.3, std::vector<double>{0.1, -0.2},
                      SymMatrix::diag(std::vector<double>{-1.0, 0.0}));
  auto rep = check_T(slab, 600, 5, Tolerances{}, extras);
  CHECK_FALSE(rep.pass);
  CHECK_FALSE(rep.counterexamples.empty());

  // The same check without the slab points passes on the honest half-space.
  auto h = induce(make_laplace(2));
  CHECK(check_T(h, 600, 5).pass);

  // No cone interior, no probe direction: the check is unanswerable.
  auto flat = Subequation::from_defining(
      "minimal cone fiber", 2,
      [](std::span<const double>, const Jet& j) { return j.a.trace(); },
      MonotonicityCone::minimal(2));
  CHECK_THROWS_AS(check_T(flat, 100, 1), Unsupported);
}

TEST_CASE("monotonicity check separates the matching cone from a mismatch") {
  Domain om = unit_box(2);
  std::vector<double> e1{1.0, 0.0};
  auto transport = make_transport(
      2, GradientField::of_expression(Expression::parse("max(p1, 0)")),
      DirectionalCone::halfspaces(2, {e1}), ScalarField::of_constant(1.0), om,
      1.0);
  auto find = induce(transport);

  auto good = check_monotonicity(find, transport.cone, 800, 7);
  CHECK(good.pass);

  // Full gradient invariance is too much to ask of a directional operator.
  auto bad = check_monotonicity(find, MonotonicityCone::negativity_convexity(2),
                                800, 7);
  CHECK_FALSE(bad.pass);
  CHECK(bad.details["direct"]["verdict"] == "FAIL");
  REQUIRE_FALSE(bad.counterexamples.empty());

  CHECK_THROWS_AS(
      check_monotonicity(find, MonotonicityCone::convexity(3), 100, 1),
      InvalidInput);
}

TEST_CASE("compatibility populates the equation boundary") {
  auto laplace = make_laplace(2);
  EquationBoundary gamma;
  auto rep = check_compatibility(laplace, 1200, 11, Tolerances{}, &gamma);
  CHECK(rep.pass);
  CHECK(rep.details["gamma_nonempty"] == true);
  REQUIRE_FALSE(gamma.entries.empty());
  for (const auto& e : gamma.entries) {
    CHECK(std::abs(e.op_value) <= 1e-6);
    CHECK(std::abs(laplace.op(e.x, e.jet)) <= 1e-6);
  }

  Domain om = unit_box(2);
  auto ma = make_monge_ampere(2, ScalarField::of_constant(1.0), om);
  EquationBoundary ma_gamma;
  auto ma_rep = check_compatibility(ma, 1200, 11, Tolerances{}, &ma_gamma);
  CHECK(ma_rep.pass);
  REQUIRE_FALSE(ma_gamma.entries.empty());
  for (const auto& e : ma_gamma.entries) {
    CHECK(std::abs(e.op_value) <= 1e-6);
    CHECK(ma.in_constraint(e.x, e.jet));
  }
}

TEST_CASE("set-form fiber modulus tracks the coefficient shift") {
  Domain om = unit_box(2);
  std::vector<Expression> entries{Expression::parse("x1"),
                                  Expression::constant(0.0),
                                  Expression::constant(0.0)};
  auto pma = make_perturbed_monge_ampere(
      2, MatrixField::of_expressions(2, entries), ScalarField::of_constant(0.0),
      om);
  auto find = induce(pma);
  const std::vector<double> etas{0.05, 0.1, 0.2};
  auto table = fiber_modulus(find, om, etas, 13);
  REQUIRE(table.rows.size() == 3);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    CAPTURE(i);
    const auto& row = table.rows[i];
    CHECK_FALSE(row.infinite);
    CHECK(std::isfinite(row.delta));
    CHECK(row.delta > 0.0);
    CHECK(row.delta >= shifted_fiber_modulus_lower_bound(row.eta) - 1e-6);
    if (i > 0) CHECK(row.delta >= table.rows[i - 1].delta);
  }
  CHECK(table.rows.back().delta > table.rows.front().delta);
  // Sharpness evidence: the reported distance fails once inflated by 5%.
  CHECK_FALSE(table.failures_above.empty());
}

TEST_CASE("fiber modulus sentinels and operator form") {
  Domain om = unit_box(2);
  const std::vector<double> etas{0.1, 0.2};

  // Constant fibers never need a modulus.
  auto cone_set = cone_subequation(MonotonicityCone::convexity(2));
  auto t1 = fiber_modulus(cone_set, om, etas, 3);
  for (const auto& row : t1.rows) {
    CHECK(row.infinite);
    CHECK(std::isinf(row.delta));
  }

  // Constant-coefficient operators likewise.
  auto t2 = fiber_modulus(make_laplace(2), om, etas, 3);
  for (const auto& row : t2.rows) CHECK(row.infinite);

  // A genuine x-dependence produces finite nondecreasing entries.
  std::vector<double> e1{1.0, 0.0};
  auto transport = make_transport(
      2, GradientField::of_expression(Expression::parse("max(p1, 0)")),
      DirectionalCone::halfspaces(2, {e1}),
      ScalarField::of_expression(Expression::parse("0.5 + 0.5 * x1")), om,
      1.0);
  auto t3 = fiber_modulus(transport, om, etas, 3);
  REQUIRE(t3.rows.size() == 2);
  for (const auto& row : t3.rows) {
    CHECK_FALSE(row.infinite);
    CHECK(row.delta > 0.0);
  }
  CHECK(t3.rows[0].delta <= t3.rows[1].delta);
}

TEST_CASE("reports serialize deterministically") {
  auto pair = make_det_minus_r(2, DetMinusRVariant::G2);
  auto r1 = check_compatibility(pair, 600, 21);
  auto r2 = check_compatibility(pair, 600, 21);
  CHECK(r1.to_json().dump() == r2.to_json().dump());

  Domain om = unit_box(2);
  std::vector<Expression> entries{Expression::parse("x1"),
                                  Expression::constant(0.0),
                                  Expression::constant(0.0)};
  auto pma = make_perturbed_monge_ampere(
      2, MatrixField::of_expressions(2, entries), ScalarField::of_constant(0.0),
      om);
  const std::vector<double> etas{0.1};
  auto f1 = fiber_modulus(induce(pma), om, etas, 21);
  auto f2 = fiber_modulus(induce(pma), om, etas, 21);
  CHECK(f1.to_json().dump() == f2.to_json().dump());
}

TEST_CASE("verifier input validation") {
  auto h = induce(make_laplace(2));
  CHECK_THROWS_AS(check_P(h, 0, 1), InvalidInput);
  Domain om = unit_box(2);
  const std::vector<double> bad_etas{0.1, -0.5};
  CHECK_THROWS_AS(fiber_modulus(h, om, bad_etas, 1), InvalidInput);
  auto flat = Subequation::from_defining(
      "minimal cone fiber", 2,
      [](std::span<const double>, const Jet& j) { return j.a.trace(); },
      MonotonicityCone::minimal(2));
  const std::vector<double> etas{0.1};
  CHECK_THROWS_AS(fiber_modulus(flat, om, etas, 1), Unsupported);
}
