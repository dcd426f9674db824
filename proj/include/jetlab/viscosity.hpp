#pragma once

#include <span>
#include <string>
#include <vector>

#include "jetlab/grid_function.hpp"
#include "jetlab/jet.hpp"
#include "jetlab/subequation.hpp"
#include "jetlab/verifier.hpp"

namespace jetlab {

// Discrete viscosity layer: grid functions stand in for USC/LSC functions,
// and a finite family of touching quadratics at each node stands in for the
// upper/lower test jets.  Every predicate here is a surrogate with an O(h)
// verdict tolerance, never an exact envelope computation.

enum class ContactSide { Upper, Lower };
enum class SolutionSide { Sub, Super };

/// Finite surrogate for the upper (lower) contact jets of u at a grid node.
/// Jets are ordered deterministically by construction.
struct ContactJetSet {
  std::vector<int> node;
  ContactSide side = ContactSide::Upper;
  std::vector<Jet> jets;
};

/// One failing (node, jet) pair together with the margin that failed.
struct Violation {
  std::vector<int> node;
  Jet jet;
  double margin = 0.0;

  bool operator==(const Violation& o) const = default;
};

/// Per-node outcome of a grid-wide jet test.
struct NodeStatus {
  std::vector<int> node;
  bool ok = true;
  int jets_tested = 0;

  bool operator==(const NodeStatus& o) const = default;
};

/// Grid-wide verdict with the tolerance convention pinned into the payload:
/// a jet margin worse than -tau, tau = c*h, counts as a violation.  Nodes
/// appear in flat-index order; violations are capped per node but counted
/// exactly in the node status.
struct Verdict {
  bool holds = true;
  double h = 0.0;
  double c = 0.0;
  double tau = 0.0;
  std::vector<NodeStatus> nodes;
  std::vector<Violation> violations;

  bool operator==(const Verdict& o) const = default;
  std::string str() const;
};

/// Touching quadratics of u at an interior node, as jets.  Candidates are a
/// lattice around the central-difference jet: gradients p_hat + h*s with
/// s in {-1,0,1}^n, Hessians A_hat + h * sum_k s_k v_k v_k^T over the
/// eigendirections v_k of A_hat.  A candidate is kept if its quadratic,
/// anchored exactly at the node value, stays on the correct side of u on the
/// (2k+1)^n stencil within slack c*h^2 (c = tol.contact_slack).
///
/// A node value of +-inf (or a non-finite difference stencil) yields an
/// empty set.  Throws PreconditionError if the node is not interior with
/// ring k, InvalidInput on a malformed node index.
ContactJetSet contact_jets(const GridFunction& u, std::span<const int> node,
                           ContactSide side, int k = 1,
                           const Tolerances& tol = {});

/// u is F-subharmonic in the discrete sense: at every ring-1 interior node,
/// every upper contact jet J satisfies margin_F(x, J) >= -tau.  Nodes where
/// u = -inf (or where the jet family is empty) pass vacuously.
Verdict is_subharmonic(const Subequation& f, const GridFunction& u,
                       const Tolerances& tol = {});

/// Literal dual reduction: is_subharmonic(f.dual(), -w).  Kept as a one-line
/// delegation so the duality identity holds by construction, payload
/// equality included.
Verdict is_superharmonic(const Subequation& f, const GridFunction& w,
                         const Tolerances& tol = {});

/// Operator-side admissibility for a constrained pair (G, F):
/// a subsolution needs, for every upper jet, constraint margin >= -tau and
/// operator value >= -tau.
Verdict admissible_subsolution(const ProperEllipticPair& pair,
                               const GridFunction& u,
                               const Tolerances& tol = {});

/// A supersolution fails at a node when some lower jet strictly inside the
/// constraint set has operator value above tau, or when every admissible
/// jet of the contact family keeps its excess above tau.  Jets in the tau
/// band around the constraint boundary only count through the family rule:
/// a lone tilted jet there can carry an excess that is lattice noise
/// amplified by kink-scale curvature.
Verdict admissible_supersolution(const ProperEllipticPair& pair,
                                 const GridFunction& w,
                                 const Tolerances& tol = {});

/// Correspondence principle, one side at a time: the set-side verdict
/// (is_subharmonic of the induced subequation, or is_superharmonic) must
/// agree node by node with the operator-side admissibility verdict.
/// Disagreeing nodes become counterexamples carrying a witness jet from the
/// failing side.  `hypotheses_verified` records whether the pair previously
/// passed the axiom battery; when false the report is flagged
/// UNVERIFIED-HYPOTHESES but the comparison still runs.
CheckReport check_correspondence(const ProperEllipticPair& pair,
                                 const GridFunction& u, SolutionSide side,
                                 bool hypotheses_verified,
                                 const Tolerances& tol = {});

/// Jet-addition theorem on grids: if u is F-subharmonic and v is
/// dual(F)-subharmonic, u + v must be subharmonic for the dual of the
/// monotonicity cone m.  Throws InvalidInput on domain mismatch and
/// PreconditionError when either precondition verdict fails.
CheckReport check_subharmonic_addition(const Subequation& f,
                                       const GridFunction& u,
                                       const GridFunction& v,
                                       const MonotonicityCone& m,
                                       const Tolerances& tol = {});

/// Sub-mean-value surrogate for convexity-monotone subharmonics: at every
/// interior node and axis-sphere radius rho in {2h, 4h} (spheres that fit),
/// the node value may exceed the average of the 2n axis points by at most
/// c*h^2.  Throws InvalidInput if u has non-finite values.
CheckReport mean_value_check(const GridFunction& u,
                             const Tolerances& tol = {});

/// Nodewise sum / negation; InvalidInput if domains differ.
GridFunction grid_add(const GridFunction& a, const GridFunction& b);
GridFunction grid_negate(const GridFunction& a);

}  // namespace jetlab
