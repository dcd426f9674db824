#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "jetlab/domain.hpp"
#include "jetlab/expression.hpp"

namespace jetlab {

/// Node values over a Domain grid, row major with the last axis fastest.
/// +/-infinity entries act as one-sided sentinels (absent value from the
/// respective side); arithmetic on them follows IEEE rules.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(Domain d, double fill = 0.0);
  static GridFunction from_function(
      const Domain& d,
      const std::function<double(std::span<const double>)>& f);
  static GridFunction from_expression(const Domain& d, const Expression& e);

  const Domain& domain() const { return dom_; }
  std::size_t size() const { return v_.size(); }
  double operator[](std::size_t f) const { return v_[f]; }
  double& operator[](std::size_t f) { return v_[f]; }
  double at(std::span<const int> idx) const { return v_[dom_.flat(idx)]; }
  void set(std::span<const int> idx, double val) { v_[dom_.flat(idx)] = val; }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  /// Multilinear interpolation; x is clamped onto the box first.
  double interpolate(std::span<const double> x) const;

  /// Header rows dim / lo / hi / h, then the values row major with 17
  /// significant digits, one line per final-axis run.
  void write_csv(std::ostream& out) const;
  static GridFunction read_csv(std::istream& in);
  void save_csv(const std::string& path) const;
  static GridFunction load_csv(const std::string& path);

 private:
  Domain dom_;
  std::vector<double> v_;
};

}  // namespace jetlab
