#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "jetlab/expression.hpp"
#include "jetlab/rng.hpp"

using namespace jetlab;

TEST_CASE("parse and evaluate basics") {
  std::vector<double> x = {0.5, 2.0};
  EvalContext ctx{x, std::nullopt, {}};

  CHECK(Expression::parse("1 + 2*3").eval(ctx) == doctest::Approx(7.0));
  CHECK(Expression::parse("2^3^2").eval(ctx) == doctest::Approx(512.0));
  CHECK(Expression::parse("-x1 + x2").eval(ctx) == doctest::Approx(1.5));
  CHECK(Expression::parse("max(x1, x2) * min(1, x1)").eval(ctx) ==
        doctest::Approx(1.0));
  CHECK(Expression::parse("abs(-3) + sqrt(4)").eval(ctx) ==
        doctest::Approx(5.0));
  CHECK(Expression::parse("exp(0) + sin(0) + cos(0)").eval(ctx) ==
        doctest::Approx(2.0));
  CHECK(Expression::parse("(1 - 2) * (3 - 4)").eval(ctx) ==
        doctest::Approx(1.0));
}

TEST_CASE("gradient and value variables") {
  std::vector<double> x = {1.0};
  std::vector<double> p = {3.0, -1.0};
  EvalContext ctx{x, -2.0, p};
  CHECK(Expression::parse("max(p1, 0) + r").eval(ctx) == doctest::Approx(1.0));
  CHECK(Expression::parse("p2 * r").eval(ctx) == doctest::Approx(2.0));
}

TEST_CASE("eval errors") {
  std::vector<double> x = {1.0};
  EvalContext ctx{x, std::nullopt, {}};
  CHECK_THROWS_AS(Expression::parse("1/(x1 - 1)").eval(ctx), EvalError);
  CHECK_THROWS_AS(Expression::parse("sqrt(0 - x1)").eval(ctx), EvalError);
  CHECK_THROWS_AS(Expression::parse("x2").eval(ctx), EvalError);
  CHECK_THROWS_AS(Expression::parse("r").eval(ctx), EvalError);
}

TEST_CASE("syntax errors carry position and expectations") {
  try {
    Expression::parse("1 + * 2");
    FAIL("no error raised");
  } catch (const SyntaxError& e) {
    CHECK(e.line == 1);
    CHECK(e.col == 5);
    CHECK_FALSE(e.expected.empty());
  }
  try {
    Expression::parse("min(1)");
    FAIL("no error raised");
  } catch (const SyntaxError& e) {
    CHECK(e.col == 6);
  }
  try {
    Expression::parse("foo(1)");
    FAIL("no error raised");
  } catch (const SyntaxError& e) {
    CHECK(e.col == 1);
  }
  CHECK_THROWS_AS(Expression::parse("(1 + 2"), SyntaxError);
  CHECK_THROWS_AS(Expression::parse("1 + \n 2 +"), SyntaxError);
}

TEST_CASE("print-parse fixpoint on handwritten forms") {
  for (const char* src :
       {"1 + 2*x1", "-(x1^2) + max(p1, 0)", "sin(x1)*cos(x2) - 1/(2 + x1)",
        "sqrt(abs(x1 - x2))", "2^x1^2", "min(r, -1) * exp(x1)"}) {
    Expression e = Expression::parse(src);
    std::string once = e.str();
    std::string twice = Expression::parse(once).str();
    CHECK(once == twice);
  }
}

// Independent oracle: the test builds its own random trees, evaluates them
// directly, prints them, and requires the parsed expression to agree.
namespace {

struct RefNode {
  int kind;  // 0 num, 1 x-var, 2 add, 3 sub, 4 mul, 5 neg, 6 min, 7 max,
             // 8 abs, 9 sin, 10 cos
  double num = 0.0;
  int index = 1;
  std::unique_ptr<RefNode> a, b;
};

std::unique_ptr<RefNode> gen(CounterRng& rng, int depth) {
  auto n = std::make_unique<RefNode>();
  int maxKind = depth >= 4 ? 1 : 10;
  n->kind = rng.uniform_int(0, maxKind);
  switch (n->kind) {
    case 0:
      n->num = std::round(rng.uniform(-8.0, 8.0) * 16.0) / 16.0;
      break;
    case 1:
      n->index = rng.uniform_int(1, 3);
      break;
    case 2:
    case 3:
    case 4:
    case 6:
    case 7:
      n->a = gen(rng, depth + 1);
      n->b = gen(rng, depth + 1);
      break;
    default:
      n->a = gen(rng, depth + 1);
      break;
  }
  return n;
}

double ref_eval(const RefNode& n, const std::vector<double>& x) {
  switch (n.kind) {
    case 0:
      return n.num;
    case 1:
      return x[n.index - 1];
    case 2:
      return ref_eval(*n.a, x) + ref_eval(*n.b, x);
    case 3:
      return ref_eval(*n.a, x) - ref_eval(*n.b, x);
    case 4:
      return ref_eval(*n.a, x) * ref_eval(*n.b, x);
    case 5:
      return -ref_eval(*n.a, x);
    case 6:
      return std::min(ref_eval(*n.a, x), ref_eval(*n.b, x));
    case 7:
      return std::max(ref_eval(*n.a, x), ref_eval(*n.b, x));
    case 8:
      return std::fabs(ref_eval(*n.a, x));
    case 9:
      return std::sin(ref_eval(*n.a, x));
    case 10:
      return std::cos(ref_eval(*n.a, x));
  }
  return 0.0;
}

void ref_print(const RefNode& n, std::string& out) {
  switch (n.kind) {
    case 0: {
      char buf[64];
      snprintf(buf, sizeof buf, "%.17g", n.num);
      if (n.num < 0) {
        out += "(";
        out += buf;
        out += ")";
      } else {
        out += buf;
      }
      return;
    }
    case 1:
      out += "x" + std::to_string(n.index);
      return;
    case 2:
    case 3:
    case 4: {
      const char* sym = n.kind == 2 ? "+" : n.kind == 3 ? "-" : "*";
      out += "(";
      ref_print(*n.a, out);
      out += sym;
      ref_print(*n.b, out);
      out += ")";
      return;
    }
    case 5:
      out += "(-";
      ref_print(*n.a, out);
      out += ")";
      return;
    case 6:
    case 7:
      out += n.kind == 6 ? "min(" : "max(";
      ref_print(*n.a, out);
      out += ",";
      ref_print(*n.b, out);
      out += ")";
      return;
    case 8:
      out += "abs(";
      ref_print(*n.a, out);
      out += ")";
      return;
    case 9:
      out += "sin(";
      ref_print(*n.a, out);
      out += ")";
      return;
    case 10:
      out += "cos(";
      ref_print(*n.a, out);
      out += ")";
      return;
  }
}

}  // namespace

TEST_CASE("random trees: parsed evaluation matches direct evaluation") {
  CounterRng rng(1234, 0);
  int done = 0;
  while (done < 1000) {
    auto tree = gen(rng, 0);
    std::string src;
    ref_print(*tree, src);
    std::vector<double> x = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0),
                             rng.uniform(-2.0, 2.0)};
    double want = ref_eval(*tree, x);
    if (!std::isfinite(want)) continue;
    Expression e = Expression::parse(src);
    double got = e.eval({x, std::nullopt, {}});
    double tol = 1e-12 * std::max(1.0, std::fabs(want));
    REQUIRE(std::fabs(got - want) <= tol);
    // printing is a fixpoint through a second parse
    REQUIRE(Expression::parse(e.str()).str() == e.str());
    ++done;
  }
}
