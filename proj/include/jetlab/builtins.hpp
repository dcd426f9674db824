#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "jetlab/fields.hpp"
#include "jetlab/subequation.hpp"

namespace jetlab {

/// tr(A) = 0, unconstrained; induces the subharmonicity constraint
/// {tr A >= 0}.
ProperEllipticPair make_laplace(int dim);

/// lambda_min(A) = 0, unconstrained; induces the convexity constraint
/// {A >= 0}.
ProperEllipticPair make_min_eigenvalue(int dim);

/// det(A) = f(x) on the constraint {A >= 0}; f must be nonnegative on the
/// nodes of omega.
ProperEllipticPair make_monge_ampere(int dim, ScalarField f,
                                     const Domain& omega);

/// det(A + M(x)) = f(x) on the constraint {A + M(x) >= 0}.
ProperEllipticPair make_perturbed_monge_ampere(int dim, MatrixField m,
                                               ScalarField f,
                                               const Domain& omega);

/// g(p) det(A) = f(x) on the cone constraint R x D x {A >= 0}; directional
/// gradient factor g.  omega_coeff, when given, declares the regularity
/// lower bound g(p + eta*qbar) >= g(p) + omega_coeff*eta along the interior
/// direction qbar of D.
ProperEllipticPair make_transport(int dim, GradientField g, DirectionalCone d,
                                  ScalarField f, const Domain& omega,
                                  std::optional<double> omega_coeff = {});

/// det(A) - r = 0 on G1 = {r <= 0, A >= 0} or G2 = {A >= 0}; the stock
/// compatibility counterexample.
enum class DetMinusRVariant { G1, G2 };
ProperEllipticPair make_det_minus_r(int dim, DetMinusRVariant variant);

/// Problem-file dispatch: operator name plus its JSON params.  Throws
/// InvalidInput for unknown names or malformed params, InvalidCoefficient
/// for coefficient sign violations.
ProperEllipticPair builtin_pair(const std::string& name,
                                const nlohmann::json& params, int dim,
                                const Domain& omega);

/// Names accepted by builtin_pair.
const std::vector<std::string>& builtin_names();

}  // namespace jetlab
