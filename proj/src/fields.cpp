#include "jetlab/fields.hpp"

#include <memory>
#include <utility>

#include "jetlab/errors.hpp"

namespace jetlab {

namespace {

std::string trimmed_number(double v) {
  std::string s = Expression::constant(v).str();
  return s;
}

}  // namespace

ScalarField ScalarField::of_constant(double v) {
  ScalarField f;
  f.eval = [v](std::span<const double>) { return v; };
  f.constant = true;
  f.desc = trimmed_number(v);
  return f;
}

ScalarField ScalarField::of_expression(const Expression& e) {
  ScalarField f;
  f.eval = [e](std::span<const double> x) {
    return e.eval({x, std::nullopt, {}});
  };
  f.constant = e.max_x_index() == 0 && e.max_p_index() == 0 && !e.uses_r();
  f.desc = e.str();
  return f;
}

ScalarField ScalarField::of_grid(GridFunction g) {
  ScalarField f;
  auto shared = std::make_shared<GridFunction>(std::move(g));
  f.eval = [shared](std::span<const double> x) {
    return shared->interpolate(x);
  };
  f.constant = false;
  f.desc = "grid samples on " + shared->domain().str();
  return f;
}

MatrixField MatrixField::of_constant(SymMatrix m) {
  MatrixField f;
  f.desc = m.str();
  f.constant = true;
  f.eval = [m = std::move(m)](std::span<const double>) { return m; };
  return f;
}

MatrixField MatrixField::of_expressions(int n, std::vector<Expression> upper) {
  if (static_cast<int>(upper.size()) != n * (n + 1) / 2)
    throw InvalidInput("matrix field needs n(n+1)/2 upper-triangle entries");
  MatrixField f;
  f.constant = true;
  f.desc = "[";
  for (std::size_t k = 0; k < upper.size(); ++k) {
    if (!(upper[k].max_x_index() == 0 && upper[k].max_p_index() == 0 &&
          !upper[k].uses_r()))
      f.constant = false;
    f.desc += (k ? ", " : "") + upper[k].str();
  }
  f.desc += "]";
  f.eval = [n, entries = std::move(upper)](std::span<const double> x) {
    SymMatrix m(n);
    std::size_t k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        m.set(i, j, entries[k++].eval({x, std::nullopt, {}}));
    return m;
  };
  return f;
}

GradientField GradientField::of_expression(const Expression& e) {
  GradientField f;
  f.eval = [e](std::span<const double> p) {
    return e.eval({{}, std::nullopt, p});
  };
  f.desc = e.str();
  return f;
}

}  // namespace jetlab
