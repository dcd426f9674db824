#include "jetlab/grid_function.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "jetlab/errors.hpp"

namespace jetlab {

GridFunction::GridFunction(Domain d, double fill)
    : dom_(std::move(d)), v_(dom_.node_count(), fill) {}

GridFunction GridFunction::from_function(
    const Domain& d, const std::function<double(std::span<const double>)>& f) {
  GridFunction g(d);
  std::vector<int> idx(d.dim());
  std::vector<double> x(d.dim());
  for (std::size_t i = 0; i < g.size(); ++i) {
    d.unflat(i, idx);
    d.point(idx, x);
    g.v_[i] = f(x);
  }
  return g;
}

GridFunction GridFunction::from_expression(const Domain& d,
                                           const Expression& e) {
  return from_function(d, [&](std::span<const double> x) {
    return e.eval({x, std::nullopt, {}});
  });
}

double GridFunction::interpolate(std::span<const double> x) const {
  const int n = dom_.dim();
  if (static_cast<int>(x.size()) != n)
    throw InvalidInput("interpolate: dimension mismatch");
  std::vector<int> base(n);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    double t = (std::clamp(x[i], dom_.lo()[i], dom_.hi()[i]) - dom_.lo()[i]) /
               dom_.h();
    int b = std::min(static_cast<int>(std::floor(t)), dom_.extent(i) - 1);
    if (b == dom_.extent(i) - 1 && dom_.extent(i) > 1) b -= 1;
    base[i] = b;
    w[i] = std::clamp(t - b, 0.0, 1.0);
  }
  double acc = 0.0;
  std::vector<int> idx(n);
  for (int corner = 0; corner < (1 << n); ++corner) {
    double weight = 1.0;
    for (int i = 0; i < n; ++i) {
      bool high = corner & (1 << i);
      weight *= high ? w[i] : 1.0 - w[i];
      idx[i] = std::min(base[i] + (high ? 1 : 0), dom_.extent(i) - 1);
    }
    if (weight != 0.0) acc += weight * at(idx);
  }
  return acc;
}

namespace {

void print_value(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

void GridFunction::write_csv(std::ostream& out) const {
  const int n = dom_.dim();
  out << "dim," << n << "\n";
  out << "lo";
  for (double v : dom_.lo()) {
    out << ",";
    print_value(out, v);
  }
  out << "\nhi";
  for (double v : dom_.hi()) {
    out << ",";
    print_value(out, v);
  }
  out << "\nh,";
  print_value(out, dom_.h());
  out << "\n";
  const int run = dom_.extent(n - 1);
  for (std::size_t i = 0; i < v_.size(); ++i) {
    print_value(out, v_[i]);
    out << ((static_cast<int>(i % run) == run - 1) ? "\n" : ",");
  }
}

GridFunction GridFunction::read_csv(std::istream& in) {
  auto fail = [](const std::string& msg) {
    return InvalidInput("grid csv: " + msg);
  };
  std::string line;
  auto next_fields = [&](const std::string& tag) {
    if (!std::getline(in, line)) throw fail("missing " + tag + " row");
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.empty() || fields[0] != tag)
      throw fail("expected " + tag + " row");
    return std::vector<std::string>(fields.begin() + 1, fields.end());
  };
  auto dimf = next_fields("dim");
  if (dimf.size() != 1) throw fail("malformed dim row");
  int n = std::stoi(dimf[0]);
  if (n < 1 || n > 16) throw fail("unsupported dimension");
  auto parse_vec = [&](const std::vector<std::string>& fs) {
    std::vector<double> v;
    for (const auto& s : fs) v.push_back(std::stod(s));
    return v;
  };
  auto lo = parse_vec(next_fields("lo"));
  auto hi = parse_vec(next_fields("hi"));
  if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n)
    throw fail("lo/hi arity mismatch");
  auto hf = next_fields("h");
  if (hf.size() != 1) throw fail("malformed h row");
  Domain dom(lo, hi, std::stod(hf[0]));

  GridFunction g(dom);
  std::size_t count = 0;
  while (count < g.size() && std::getline(in, line)) {
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) {
      if (f.empty()) continue;
      if (count >= g.size()) throw fail("too many values");
      g.v_[count++] = std::stod(f);
    }
  }
  if (count != g.size())
    throw fail("expected " + std::to_string(g.size()) + " values, got " +
               std::to_string(count));
  return g;
}

void GridFunction::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot open " + path + " for writing");
  write_csv(out);
}

GridFunction GridFunction::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  return read_csv(in);
}

}  // namespace jetlab
