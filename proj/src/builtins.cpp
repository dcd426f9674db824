#include "jetlab/builtins.hpp"

#include <utility>

#include "jetlab/errors.hpp"

namespace jetlab {

namespace {

void require_nonnegative(const ScalarField& f, const Domain& omega,
                         const std::string& who) {
  if (f.constant) {
    std::vector<double> c(omega.dim(), 0.0);
    if (f(c) < 0.0)
      throw InvalidCoefficient(who + ": right-hand side " + f.desc +
                               " is negative");
    return;
  }
  std::vector<int> idx(omega.dim());
  std::vector<double> x(omega.dim());
  for (std::size_t i = 0; i < omega.node_count(); ++i) {
    omega.unflat(i, idx);
    omega.point(idx, x);
    if (f(x) < 0.0)
      throw InvalidCoefficient(who + ": right-hand side " + f.desc +
                               " is negative at a grid node");
  }
}

}  // namespace

ProperEllipticPair make_laplace(int dim) {
  ProperEllipticPair pair;
  pair.name = "laplace";
  pair.op.name = "trace";
  pair.op.reduction = Reduction::PureSecondOrder;
  pair.op.constant_coefficients = true;
  pair.op.eval = []([[maybe_unused]] std::span<const double> x, const Jet& j) {
    return j.a.trace();
  };
  pair.cone = MonotonicityCone::convexity(dim);
  pair.probe = pair.cone.default_probe();
  return pair;
}

ProperEllipticPair make_min_eigenvalue(int dim) {
  ProperEllipticPair pair;
  pair.name = "min_eigenvalue";
  pair.op.name = "min-eigenvalue";
  pair.op.reduction = Reduction::PureSecondOrder;
  pair.op.constant_coefficients = true;
  pair.op.eval = []([[maybe_unused]] std::span<const double> x, const Jet& j) {
    return min_eigenvalue(j.a);
  };
  pair.cone = MonotonicityCone::convexity(dim);
  pair.probe = pair.cone.default_probe();
  return pair;
}

ProperEllipticPair make_monge_ampere(int dim, ScalarField f,
                                     const Domain& omega) {
  require_nonnegative(f, omega, "monge_ampere");
  ProperEllipticPair pair;
  pair.name = "monge_ampere";
  pair.op.name = "det - f";
  pair.op.reduction = Reduction::GradientFree;
  pair.op.constant_coefficients = f.constant;
  pair.op.eval = [f](std::span<const double> x, const Jet& j) {
    return j.a.det() - f(x);
  };
  pair.cone = MonotonicityCone::convexity(dim);
  pair.probe = pair.cone.default_probe();
  pair.constraint =
      cone_subequation(pair.cone).with_name("psd-hessian constraint");
  pair.x_domain = omega;
  return pair;
}

ProperEllipticPair make_perturbed_monge_ampere(int dim, MatrixField m,
                                               ScalarField f,
                                               const Domain& omega) {
  require_nonnegative(f, omega, "perturbed_monge_ampere");
  ProperEllipticPair pair;
  pair.name = "perturbed_monge_ampere";
  pair.op.name = "det(A + M(x)) - f";
  pair.op.reduction = Reduction::GradientFree;
  pair.op.constant_coefficients = f.constant && m.constant;
  pair.op.eval = [m, f](std::span<const double> x, const Jet& j) {
    return (j.a + m(x)).det() - f(x);
  };
  pair.cone = MonotonicityCone::convexity(dim);
  pair.probe = pair.cone.default_probe();
  pair.constraint =
      Subequation::from_defining(
          "shifted-psd constraint", dim,
          [m](std::span<const double> x, const Jet& j) {
            return min_eigenvalue(j.a + m(x));
          },
          pair.cone)
          .with_constant_fibers(m.constant);
  pair.x_domain = omega;
  return pair;
}

ProperEllipticPair make_transport(int dim, GradientField g, DirectionalCone d,
                                  ScalarField f, const Domain& omega,
                                  std::optional<double> omega_coeff) {
  require_nonnegative(f, omega, "transport");
  if (d.dim() != dim)
    throw InvalidInput("transport: direction cone dimension mismatch");
  ProperEllipticPair pair;
  pair.name = "transport";
  pair.op.name = "g(p) det(A) - f";
  pair.op.reduction = Reduction::General;
  pair.op.constant_coefficients = f.constant;
  pair.op.omega_coeff = omega_coeff;
  pair.op.eval = [g, f](std::span<const double> x, const Jet& j) {
    return g(j.p) * j.a.det() - f(x);
  };
  pair.cone = MonotonicityCone::directional_convexity(std::move(d));
  pair.probe = pair.cone.default_probe();
  pair.constraint =
      cone_subequation(pair.cone).with_name("directional constraint");
  pair.x_domain = omega;
  return pair;
}

ProperEllipticPair make_det_minus_r(int dim, DetMinusRVariant variant) {
  ProperEllipticPair pair;
  pair.name = variant == DetMinusRVariant::G1 ? "det_minus_r(G1)"
                                              : "det_minus_r(G2)";
  pair.op.name = "det - r";
  pair.op.reduction = Reduction::GradientFree;
  pair.op.constant_coefficients = true;
  pair.op.eval = []([[maybe_unused]] std::span<const double> x, const Jet& j) {
    return j.a.det() - j.r;
  };
  pair.cone = MonotonicityCone::negativity_convexity(dim);
  pair.probe = pair.cone.default_probe();
  MonotonicityCone g = variant == DetMinusRVariant::G1
                           ? MonotonicityCone::negativity_convexity(dim)
                           : MonotonicityCone::convexity(dim);
  pair.constraint = cone_subequation(g).with_name(
      variant == DetMinusRVariant::G1 ? "G1" : "G2");
  return pair;
}

namespace {

ScalarField scalar_param(const nlohmann::json& params, const std::string& key,
                         const std::string& who) {
  if (params.contains(key + "_grid")) {
    const auto& path = params.at(key + "_grid");
    if (!path.is_string())
      throw InvalidInput(who + ": param \"" + key +
                         "_grid\" must be a CSV path");
    return ScalarField::of_grid(
        GridFunction::load_csv(path.get<std::string>()));
  }
  if (!params.contains(key))
    throw InvalidInput(who + ": missing param \"" + key + "\"");
  const auto& v = params.at(key);
  if (v.is_number()) return ScalarField::of_constant(v.get<double>());
  if (v.is_string())
    return ScalarField::of_expression(Expression::parse(v.get<std::string>()));
  throw InvalidInput(who + ": param \"" + key +
                     "\" must be a number or an expression string");
}

}  // namespace

ProperEllipticPair builtin_pair(const std::string& name,
                                const nlohmann::json& params, int dim,
                                const Domain& omega) {
  if (dim < 1 || dim > 16) throw InvalidInput("dimension must be in [1, 16]");
  if (omega.dim() != dim)
    throw InvalidInput("domain dimension does not match the problem");
  if (name == "laplace") {
    auto p = make_laplace(dim);
    p.x_domain = omega;
    return p;
  }
  if (name == "min_eigenvalue") {
    auto p = make_min_eigenvalue(dim);
    p.x_domain = omega;
    return p;
  }
  if (name == "monge_ampere")
    return make_monge_ampere(dim, scalar_param(params, "f", name), omega);
  if (name == "perturbed_monge_ampere") {
    if (!params.contains("m") || !params.at("m").is_array())
      throw InvalidInput(
          "perturbed_monge_ampere: param \"m\" must list the upper-triangle "
          "entries");
    std::vector<Expression> entries;
    for (const auto& e : params.at("m")) {
      if (e.is_number())
        entries.push_back(Expression::constant(e.get<double>()));
      else if (e.is_string())
        entries.push_back(Expression::parse(e.get<std::string>()));
      else
        throw InvalidInput(
            "perturbed_monge_ampere: matrix entries must be numbers or "
            "expression strings");
    }
    return make_perturbed_monge_ampere(
        dim, MatrixField::of_expressions(dim, std::move(entries)),
        scalar_param(params, "f", name), omega);
  }
  if (name == "transport") {
    if (!params.contains("g") || !params.at("g").is_string())
      throw InvalidInput("transport: param \"g\" must be an expression in p");
    GradientField g = GradientField::of_expression(
        Expression::parse(params.at("g").get<std::string>()));
    DirectionalCone d = DirectionalCone::full(dim);
    if (params.contains("d_normals")) {
      std::vector<std::vector<double>> normals;
      for (const auto& row : params.at("d_normals"))
        normals.push_back(row.get<std::vector<double>>());
      d = DirectionalCone::halfspaces(dim, std::move(normals));
    }
    std::optional<double> oc;
    if (params.contains("omega_coeff"))
      oc = params.at("omega_coeff").get<double>();
    return make_transport(dim, std::move(g), std::move(d),
                          scalar_param(params, "f", name), omega, oc);
  }
  if (name == "det_minus_r") {
    std::string variant = params.value("variant", "G2");
    if (variant != "G1" && variant != "G2")
      throw InvalidInput("det_minus_r: variant must be G1 or G2");
    auto p = make_det_minus_r(
        dim, variant == "G1" ? DetMinusRVariant::G1 : DetMinusRVariant::G2);
    p.x_domain = omega;
    return p;
  }
  if (name == "signed_distance") {
    if (!params.contains("base") || !params.at("base").is_string())
      throw InvalidInput("signed_distance: param \"base\" names the builtin");
    std::string base = params.at("base").get<std::string>();
    if (base == "signed_distance")
      throw InvalidInput("signed_distance: base cannot be signed_distance");
    nlohmann::json base_params = params.value("base_params", nlohmann::json::object());
    ProperEllipticPair base_pair = builtin_pair(base, base_params, dim, omega);
    return signed_distance_pair(induce(base_pair));
  }
  throw InvalidInput("unknown operator \"" + name + "\"");
}

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {
      "laplace",   "min_eigenvalue", "monge_ampere",   "perturbed_monge_ampere",
      "transport", "det_minus_r",    "signed_distance"};
  return names;
}

}  // namespace jetlab
