#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "jetlab/subequation.hpp"

namespace jetlab {

/// A concrete violation: the base point, the jet, the margins that witness
/// the failure, and what was being tested.  Re-evaluating the named margins
/// at (x, jet) reproduces the violation.
struct Counterexample {
  std::vector<double> x;
  Jet jet;
  std::vector<std::pair<std::string, double>> margins;
  std::string note;

  nlohmann::ordered_json to_json() const;
};

nlohmann::ordered_json jet_to_json(const Jet& j);
nlohmann::ordered_json tolerances_to_json(const Tolerances& t);

/// Result of one randomized structural check.  Serialization is schema
/// version "1" with a fixed field order; identical (seed, samples,
/// tolerances) reproduce identical bytes.
struct CheckReport {
  std::string check;
  std::string subject;
  std::uint64_t seed = 0;
  int samples = 0;
  bool pass = true;
  Tolerances tol;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();
  std::vector<Counterexample> counterexamples;

  nlohmann::ordered_json to_json() const;
};

/// Positivity: members stay members when any P >= 0 is added to the Hessian
/// slot.  The first probe at every sample is P = I, then seeded psd draws.
CheckReport check_P(const Subequation& f, int samples, std::uint64_t seed,
                    const Tolerances& tol = {});

/// Negativity: members stay members when the value slot decreases.  The
/// first probe is s = -1, then seeded negative draws.
CheckReport check_N(const Subequation& f, int samples, std::uint64_t seed,
                    const Tolerances& tol = {});

/// Topological stability via the probe surrogates: every member becomes
/// interior when pushed along +t*J0 for a ladder of small t (this covers
/// closure(Int F) = F and interior points in every epsilon-ball), and
/// interior verdicts survive joint (x, J) perturbations at a radius found by
/// probing.  extra_jets are appended to the sampled members (they must be
/// members).  Throws Unsupported when the cone interior is empty.
CheckReport check_T(const Subequation& f, int samples, std::uint64_t seed,
                    const Tolerances& tol = {},
                    std::span<const Jet> extra_jets = {});

/// Cone monotonicity of a set: the direct form F_x + M in F_x and the jet
/// addition form F_x + dual(F)_x in dual-cone(M), reported separately in
/// details.
CheckReport check_monotonicity(const Subequation& f, const MonotonicityCone& m,
                               int samples, std::uint64_t seed,
                               const Tolerances& tol = {});

/// Pair monotonicity: the constraint absorbs the cone and the operator is
/// nondecreasing along it.
CheckReport check_pair_monotonicity(const ProperEllipticPair& pair,
                                    int samples, std::uint64_t seed,
                                    const Tolerances& tol = {});

/// Compatibility of the operator with its induced set: every constraint jet
/// with operator value above epsilon must classify as interior, and
/// membership-boundary jets found by segment bisection must carry operator
/// values within epsilon of zero.  Populates gamma (jets with |F| <= eps in
/// the constraint) when given.
CheckReport check_compatibility(const ProperEllipticPair& pair, int samples,
                                std::uint64_t seed, const Tolerances& tol = {},
                                EquationBoundary* gamma = nullptr);

/// Membership agreement of F and dual(dual(F)) off the shell, with the dual
/// computed through the oracle route (interior decided by probing), so the
/// closed-form margins are cross-validated rather than assumed.
CheckReport check_biduality(const Subequation& f, int samples,
                            std::uint64_t seed, const Tolerances& tol = {});

/// One row per requested eta of the empirical fiberegularity table.
struct FiberModulusRow {
  double eta = 0.0;
  double delta = 0.0;
  bool infinite = false;
};

struct FiberModulusTable {
  std::string subject;
  /// "set" for the fiber-map inclusion, "operator" for the monotone
  /// inequality form.
  std::string form;
  std::uint64_t seed = 0;
  Tolerances tol;
  std::vector<FiberModulusRow> rows;
  /// Failure pairs observed at delta * 1.05, as evidence the reported delta
  /// is sharp; empty when the search hit the domain diameter.
  std::vector<Counterexample> failures_above;

  nlohmann::ordered_json to_json() const;
};

/// Set form: largest delta such that J in F_x and |x - y| < delta imply
/// J + eta*J0 in F_y, searched by bisection over sampled pairs.  Constant
/// fibers short-circuit to the infinity sentinel.
FiberModulusTable fiber_modulus(const Subequation& f, const Domain& omega,
                                std::span<const double> etas,
                                std::uint64_t seed, const Tolerances& tol = {});

/// Operator form: F(y, J + eta*J0) >= F(x, J) for constraint jets.
FiberModulusTable fiber_modulus(const ProperEllipticPair& pair,
                                const Domain& omega,
                                std::span<const double> etas,
                                std::uint64_t seed, const Tolerances& tol = {});

/// The full structural battery on a pair: P, N, T, set and pair
/// monotonicity, biduality, compatibility, in that order.
std::vector<CheckReport> verify_battery(const ProperEllipticPair& pair,
                                        int samples, std::uint64_t seed,
                                        const Tolerances& tol = {});

}  // namespace jetlab
