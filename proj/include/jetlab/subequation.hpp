#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jetlab/cones.hpp"
#include "jetlab/domain.hpp"
#include "jetlab/jet.hpp"

namespace jetlab {

/// Tri-state fiber classification.
enum class Region { Interior, Shell, Exterior };

std::string region_name(Region r);

struct Membership {
  Region region = Region::Exterior;
  /// Defining-function value when the set carries one; otherwise a signed
  /// ray-distance estimate along the probe direction.
  double margin = 0.0;
};

/// Numeric conventions shared by membership tests, verifier checks and grid
/// verdicts; echoed verbatim in every report.
struct Tolerances {
  /// Shell half-width around a fiber boundary: eps = scale * (1 + |J|).
  double interior_eps_scale = 1e-9;
  /// Set-equality claims are asserted only where |margin| exceeds this.
  double shell = 1e-8;
  /// c in the grid tolerance tau(h) = c*h and the touching slack c*h^2.
  double contact_slack = 4.0;
  /// Radius of the jet ball used for fiber sampling and comparisons.
  double jet_radius = 10.0;
};

/// Closed constraint set in jet space, one fiber per base point.  Carries
/// either a defining function (fiber = {margin >= 0}, preferred: duals and
/// boundaries stay in closed form) or a plain membership oracle, plus the
/// declared monotonicity cone and a probe jet from the cone interior.
///
/// The defining path assumes the margin is topologically faithful,
/// i.e. {margin > 0} is exactly the fiber interior; the verifier's biduality
/// check validates that assumption on samples.
class Subequation {
 public:
  using DefiningFn = std::function<double(std::span<const double>, const Jet&)>;
  using OracleFn = std::function<bool(std::span<const double>, const Jet&)>;

  static Subequation from_defining(std::string name, int dim, DefiningFn margin,
                                   MonotonicityCone cone);
  static Subequation from_oracle(std::string name, int dim, OracleFn contains,
                                 MonotonicityCone cone);

  const std::string& name() const { return name_; }
  int dim() const { return dim_; }
  const MonotonicityCone& cone() const { return cone_; }
  bool has_defining() const { return static_cast<bool>(defining_); }
  bool constant_fibers() const { return constant_fibers_; }
  bool has_probe() const { return probe_.has_value(); }
  /// Declared jet in Int M; throws Unsupported when the cone interior is
  /// empty and no explicit probe was supplied.
  const Jet& probe() const;
  /// Base-point validity region; unset means all of R^n.
  const std::optional<Domain>& x_domain() const { return x_domain_; }

  Subequation with_name(std::string name) const;
  Subequation with_probe(Jet j0) const;
  Subequation with_constant_fibers(bool flag) const;
  Subequation with_x_domain(Domain x) const;

  /// Defining-function value; throws Unsupported on oracle-only sets.
  double defining(std::span<const double> x, const Jet& j) const;

  /// Closed membership J in F_x.
  bool contains(std::span<const double> x, const Jet& j) const;

  /// Tri-state with margin.  Defining path: compare the margin against
  /// eps = interior_eps_scale * (1 + |J|).  Oracle path: membership plus a
  /// probe step J -+ t*J0 decides interior vs shell (M-monotonicity pushes
  /// along Int M into the interior); the margin is a bisected ray distance.
  Membership member(std::span<const double> x, const Jet& j,
                    const Tolerances& tol = {}) const;

  /// Cheap tri-state without the margin refinement; same classification as
  /// member().
  Region classify(std::span<const double> x, const Jet& j,
                  const Tolerances& tol = {}) const;

  /// Dirichlet dual, fiberwise {J : -J not in Int F_x}.  Defining path:
  /// closed form margin(x, J) = -margin_F(x, -J); oracle path: interior test
  /// of F by probing.  Shares M and the probe jet (duals of M-monotone sets
  /// are M-monotone).
  Subequation dual() const;

 private:
  Subequation() = default;

  std::string name_;
  int dim_ = 0;
  DefiningFn defining_;
  OracleFn oracle_;
  MonotonicityCone cone_;
  std::optional<Jet> probe_;
  bool constant_fibers_ = false;
  std::optional<Domain> x_domain_;

  void check_x(std::span<const double> x) const;
};

/// The cone itself as a constant-coefficient subequation (margin =
/// cone margin); monotone with respect to itself.
Subequation cone_subequation(const MonotonicityCone& m);

/// The Dirichlet dual of a cone as a subequation, via the closed-form dual
/// margin.  These are the M-tilde sets of the zero maximum principle and the
/// subharmonic addition target.
Subequation cone_dual_subequation(const MonotonicityCone& m);

/// Operator F over a constraint: the evaluator, how much of the jet it
/// reads, the coefficient descriptions, and an optional linear lower bound
/// coefficient for the gradient-factor regularity g(p + eta*qbar) >=
/// g(p) + omega_coeff*eta.
enum class Reduction { PureSecondOrder, GradientFree, General };

struct OperatorSpec {
  std::string name;
  Reduction reduction = Reduction::General;
  std::function<double(std::span<const double>, const Jet&)> eval;
  bool constant_coefficients = false;
  std::optional<double> omega_coeff;

  double operator()(std::span<const double> x, const Jet& j) const {
    return eval(x, j);
  }
};

/// Operator plus constraint; the unconstrained case has no constraint set.
/// Declares the monotonicity cone and probe the correspondence machinery
/// should use.
struct ProperEllipticPair {
  std::string name;
  OperatorSpec op;
  std::optional<Subequation> constraint;
  MonotonicityCone cone;
  std::optional<Jet> probe;
  std::optional<Domain> x_domain;

  bool constrained() const { return constraint.has_value(); }
  bool constant_fibers() const;
  /// Constraint margin; +infinity-like large value when unconstrained is
  /// never produced: unconstrained returns +infinity.
  double constraint_margin(std::span<const double> x, const Jet& j) const;
  bool in_constraint(std::span<const double> x, const Jet& j) const;
  const Jet& probe_jet() const;
};

/// Candidate constraint set {(x, J) in G : F(x, J) >= 0} with defining
/// margin min(G-margin, F-value).  Inherits the cone, probe and base domain.
/// Whether it is a genuine subequation is the verifier's question, not
/// asserted here.
Subequation induce(const ProperEllipticPair& pair);

/// Jets on the zero set of the operator within a fiber:
/// {J in G_x : |F(x,J)| <= eps}, collected per base point.
struct EquationBoundary {
  struct Entry {
    std::vector<double> x;
    Jet jet;
    double op_value = 0.0;
  };
  std::vector<Entry> entries;
};

/// Bisects the membership crossing on the segment [j_in, j_out]; the
/// returned jet is the inside endpoint after `steps` halvings.  Throws
/// PreconditionError unless j_in is a member and j_out is not.
Jet boundary_probe(const Subequation& f, std::span<const double> x,
                   const Jet& j_in, const Jet& j_out, int steps = 60);

/// Signed distance from J to the fiber boundary in the jet norm, positive
/// inside.  Ray bisection along the probe direction, then a first-order
/// margin/gradient refinement in the dual norm when a defining function is
/// available (exact for affine margins).  Throws FiberDegenerate when no
/// crossing brackets within the search range.
double signed_fiber_distance(const Subequation& f, std::span<const double> x,
                             const Jet& j, const Tolerances& tol = {});

/// The signed distance operator of F paired with F itself; compatible by
/// construction.
ProperEllipticPair signed_distance_pair(const Subequation& f);

}  // namespace jetlab
