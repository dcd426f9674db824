#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jetlab/domain.hpp"
#include "jetlab/jet.hpp"

namespace jetlab {

/// Closed convex cone of gradient directions cut out by finitely many
/// half-spaces {p : <a_i, p> >= 0}, or the full space.  Normals are stored
/// unit length so the margin is distance-like.
class DirectionalCone {
 public:
  static DirectionalCone full(int dim);
  static DirectionalCone halfspaces(int dim,
                                    std::vector<std::vector<double>> normals);

  int dim() const { return dim_; }
  bool is_full() const { return normals_.empty(); }
  const std::vector<std::vector<double>>& normals() const { return normals_; }

  /// min_i <a_i, p>; +infinity for the full space.
  double margin(std::span<const double> p) const;
  /// max_i <a_i, p>; -infinity for the full space (no constraint survives
  /// dualization).
  double dual_margin(std::span<const double> p) const;
  /// A direction with strictly positive margin.  Throws Unsupported when the
  /// search fails (empty interior).
  std::vector<double> interior_direction() const;

 private:
  int dim_ = 0;
  std::vector<std::vector<double>> normals_;
};

class MonotonicityConeDual;

/// Product cones in jet space used as monotonicity sets: combinations of the
/// negativity half-line in r, a directional cone (or {0}, or everything) in
/// p, and the positive semidefinite cone in A.
class MonotonicityCone {
 public:
  enum class Kind {
    Minimal,      // {r <= 0} x {0} x {A >= 0}; empty interior
    NegConv,      // {r <= 0} x R^n x {A >= 0}
    Conv,         // R x R^n x {A >= 0}
    DirConv,      // R x D x {A >= 0}
    NegDirConv,   // {r <= 0} x D x {A >= 0}
    Generic,      // user-supplied margin oracle
  };

  static MonotonicityCone minimal(int dim);
  static MonotonicityCone negativity_convexity(int dim);
  static MonotonicityCone convexity(int dim);
  static MonotonicityCone directional_convexity(DirectionalCone d);
  static MonotonicityCone negativity_directional_convexity(DirectionalCone d);
  static MonotonicityCone generic(int dim,
                                  std::function<double(const Jet&)> margin,
                                  bool has_interior,
                                  std::optional<Jet> interior_point = {});

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  bool has_interior() const;
  const DirectionalCone& directions() const { return d_; }
  std::string name() const;

  /// Signed membership margin: minimum over the active constraints.
  double margin(const Jet& j) const;

  /// Default probe jet (-1, q, I) with q an interior direction of the
  /// gradient factor (zero when the factor is the full space).  Lies in the
  /// cone interior; throws Unsupported when the interior is empty.
  Jet default_probe() const;

  MonotonicityConeDual dual() const;

 private:
  Kind kind_ = Kind::Conv;
  int dim_ = 0;
  DirectionalCone d_;
  std::function<double(const Jet&)> generic_margin_;
  bool generic_has_interior_ = false;
  std::optional<Jet> generic_interior_point_;
};

/// Membership oracle for the Dirichlet dual of a monotonicity cone.  The
/// margin is the closed form obtained by negating the source margin at -J;
/// for product cones this reduces to max over the dualized constraints.
class MonotonicityConeDual {
 public:
  explicit MonotonicityConeDual(MonotonicityCone src);

  const MonotonicityCone& source() const { return src_; }
  double margin(const Jet& j) const;
  /// Margin of the dual of the dual; agrees with source().margin by the
  /// involution property.
  double bidual_margin(const Jet& j) const { return -margin(-j); }

 private:
  MonotonicityCone src_;
};

struct ConeMembership {
  bool member = false;
  double margin = 0.0;
};

ConeMembership cone_member(const MonotonicityCone& m, const Jet& j);
/// Strict margins; cones with empty interior never report an interior point.
ConeMembership cone_interior_member(const MonotonicityCone& m, const Jet& j);

/// psi(x) = c + <b, x> + 0.5 <Q (x - x0), x - x0>.
struct Quadratic {
  double c = 0.0;
  std::vector<double> b;
  std::vector<double> x0;
  SymMatrix q;

  double value(std::span<const double> x) const;
  Jet jet_at(std::span<const double> x) const;
};

/// Searches the family 0.5|x - z|^2 + shift (z translated along an interior
/// gradient direction, shift keeping values negative when r is constrained)
/// for a quadratic whose 2-jet lies in Int M at every grid node of omega.
/// Returns nullopt when the family fails, in particular for cones with empty
/// interior.
std::optional<Quadratic> strict_approximator(const MonotonicityCone& m,
                                             const Domain& omega);

}  // namespace jetlab
