#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "jetlab/fields.hpp"
#include "jetlab/grid_function.hpp"
#include "jetlab/verifier.hpp"
#include "jetlab/viscosity.hpp"

namespace jetlab {

/// Dirichlet data: finite values on the boundary nodes of a grid.
class BoundaryData {
 public:
  static BoundaryData from_function(
      const Domain& d, const std::function<double(std::span<const double>)>& f);
  static BoundaryData from_expression(const Domain& d, const Expression& e);
  /// Copies the boundary values of an existing grid function.
  static BoundaryData from_grid(const GridFunction& g);

  const Domain& domain() const { return dom_; }
  /// Value at a boundary node; InvalidInput for interior nodes.
  double at(std::span<const int> idx) const;
  /// Writes the boundary values into the boundary nodes of g.
  void impose(GridFunction& g) const;
  double max_value() const;

 private:
  BoundaryData(Domain d, std::vector<double> full);

  Domain dom_;
  std::vector<double> full_;
};

struct SolveResult {
  GridFunction u;
  int iterations = 0;
  double residual = 0.0;
  std::string scheme;

  /// Sidecar contents: scheme, residual, iterations.
  nlohmann::ordered_json metadata() const;
};

// Single-node update rules.  The solvers sweep these Jacobi style with
// double buffering; they are exposed so the monotonicity of each scheme in
// its neighbor values can be tested directly.

/// Average of the 2n axis neighbors.
double laplace_update(const GridFunction& u, std::span<const int> node);

/// Current value capped by the smallest midpoint average over the lattice
/// directions of the given stencil radius (directions clipped at the grid
/// edge are skipped).
double envelope_update(const GridFunction& u, std::span<const int> node,
                       int radius = 3);

/// Damped step u + tau * S with
///   S = min over orthogonal direction pairs (e, e_perp) of
///       prod max(second difference quotient + <M ebar, ebar>, 0) - f,
/// the determinant scheme with negative directional curvature clamped to
/// keep the step inside the admissibility constraint.
double monge_ampere_update(const GridFunction& u, std::span<const int> node,
                           double f_value, double tau,
                           const SymMatrix* m = nullptr);

/// 5/7-point Jacobi iteration to residual 1e-10; 2D or 3D boxes.
/// Exact on affine data; second order on smooth data.  Throws
/// NotAdmissibleData if the iteration cap (1e6) is exceeded.
SolveResult solve_laplace(const Domain& omega, const BoundaryData& g);

/// Largest discretely convex function below the obstacle (when given) and
/// matching g on the boundary; without an obstacle, the envelope of the
/// boundary data alone, started from its maximum.  Wide-stencil midpoint
/// scheme with lattice directions of radius 3, iterated to residual 1e-9.
/// 1D or 2D boxes.
SolveResult solve_convex_envelope(const Domain& omega, const BoundaryData& g,
                                  const GridFunction* obstacle = nullptr);

/// Monotone wide-stencil scheme for det(D^2 u + M(x)) = f(x) on a 2D box,
/// f >= 0, advanced by the damped fixed point with tau = h^2/4 from the
/// convex envelope of g, stopped at scheme residual <= h^2/2.  Throws
/// InvalidCoefficient for negative f values, NotAdmissibleData when the
/// residual stops decreasing (no admissible discrete solution in reach).
SolveResult solve_monge_ampere(const Domain& omega, const ScalarField& f,
                               const BoundaryData& g,
                               const MatrixField* m = nullptr);

/// Comparison harness: with u F-subharmonic, w F-superharmonic (verified,
/// else PreconditionError) and u <= w + tau on the boundary (else
/// PreconditionError), PASS iff u <= w + tau at every interior node.  The
/// counterexample on FAIL carries the maximum violation.
CheckReport check_comparison(const Subequation& f, const GridFunction& u,
                             const GridFunction& w, const Tolerances& tol = {});

/// Zero maximum principle harness for dual-cone subharmonics: requires a
/// strict approximator for M on the grid box (else Unsupported), z
/// subharmonic for the dual-cone set (else PreconditionError) and z <= tau
/// on the boundary (else PreconditionError); PASS iff z <= tau inside.
CheckReport check_zmp(const MonotonicityCone& m, const GridFunction& z,
                      const Tolerances& tol = {});

}  // namespace jetlab
