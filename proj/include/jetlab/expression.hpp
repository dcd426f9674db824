#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace jetlab {

/// Parse failure with 1-based position and the token classes that would have
/// been accepted there.
class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(int line, int col, std::vector<std::string> expected,
              const std::string& found);
  int line;
  int col;
  std::vector<std::string> expected;
};

/// Runtime evaluation failure: division by zero, sqrt of a negative number,
/// or a variable the context does not provide.
class EvalError : public std::runtime_error {
 public:
  explicit EvalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Values bound to the variables: x1..xn always, r and p1..pn optionally.
struct EvalContext {
  std::span<const double> x;
  std::optional<double> r;
  std::span<const double> p;
};

/// Arithmetic over numbers and the variables x1..xn, r, p1..pn with
/// + - * / ^, unary minus, exp, sin, cos, abs, min, max, sqrt, and
/// parentheses.  Immutable value type; copies share the tree.
class Expression {
 public:
  struct Node;

  static Expression parse(const std::string& src);
  static Expression constant(double v);

  double eval(const EvalContext& ctx) const;
  /// Deterministic fully-parenthesized form; parse(str()) rebuilds the same
  /// tree and prints identically.
  std::string str() const;

  /// Largest x / p index referenced (0 when none) and whether r appears.
  int max_x_index() const;
  int max_p_index() const;
  bool uses_r() const;

 private:
  explicit Expression(std::shared_ptr<const Node> root);
  std::shared_ptr<const Node> root_;
};

}  // namespace jetlab
