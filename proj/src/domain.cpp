#include "jetlab/domain.hpp"

#include <cmath>
#include <sstream>

#include "jetlab/errors.hpp"
#include "jetlab/rng.hpp"

namespace jetlab {

Domain::Domain(std::vector<double> lo, std::vector<double> hi, double h)
    : lo_(std::move(lo)), hi_(std::move(hi)), h_(h) {
  if (lo_.size() != hi_.size() || lo_.empty())
    throw InvalidInput("Domain: lo/hi size mismatch");
  if (!(h > 0.0) || !std::isfinite(h))
    throw InvalidInput("Domain: spacing must be positive");
  ext_.resize(lo_.size());
  for (size_t i = 0; i < lo_.size(); ++i) {
    if (!std::isfinite(lo_[i]) || !std::isfinite(hi_[i]) || hi_[i] <= lo_[i])
      throw InvalidInput("Domain: requires lo < hi with finite bounds");
    // tiny slack so that exactly divisible extents are not lost to rounding
    ext_[i] = static_cast<int>(std::floor((hi_[i] - lo_[i]) / h_ + 1e-9)) + 1;
  }
}

std::size_t Domain::node_count() const {
  std::size_t c = 1;
  for (int e : ext_) c *= static_cast<std::size_t>(e);
  return c;
}

double Domain::diameter() const {
  double s = 0.0;
  for (size_t i = 0; i < lo_.size(); ++i)
    s += (hi_[i] - lo_[i]) * (hi_[i] - lo_[i]);
  return std::sqrt(s);
}

std::size_t Domain::flat(std::span<const int> idx) const {
  std::size_t f = 0;
  for (size_t i = 0; i < ext_.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= ext_[i])
      throw InvalidInput("Domain: index outside grid");
    f = f * static_cast<std::size_t>(ext_[i]) + static_cast<std::size_t>(idx[i]);
  }
  return f;
}

void Domain::unflat(std::size_t f, std::span<int> idx) const {
  for (size_t i = ext_.size(); i-- > 0;) {
    idx[i] = static_cast<int>(f % static_cast<std::size_t>(ext_[i]));
    f /= static_cast<std::size_t>(ext_[i]);
  }
}

void Domain::point(std::span<const int> idx, std::span<double> x) const {
  for (size_t i = 0; i < lo_.size(); ++i) x[i] = lo_[i] + idx[i] * h_;
}

std::vector<double> Domain::point(std::span<const int> idx) const {
  std::vector<double> x(lo_.size());
  point(idx, x);
  return x;
}

bool Domain::is_boundary(std::span<const int> idx) const {
  for (size_t i = 0; i < ext_.size(); ++i)
    if (idx[i] == 0 || idx[i] == ext_[i] - 1) return true;
  return false;
}

bool Domain::is_interior(std::span<const int> idx, int ring) const {
  for (size_t i = 0; i < ext_.size(); ++i)
    if (idx[i] < ring || idx[i] > ext_[i] - 1 - ring) return false;
  return true;
}

bool Domain::contains(std::span<const double> x) const {
  if (x.size() != lo_.size()) return false;
  for (size_t i = 0; i < lo_.size(); ++i)
    if (x[i] < lo_[i] - 1e-12 || x[i] > hi_[i] + 1e-12) return false;
  return true;
}

std::vector<double> Domain::sample_point(CounterRng& rng) const {
  std::vector<double> x(lo_.size());
  for (size_t i = 0; i < lo_.size(); ++i) x[i] = rng.uniform(lo_[i], hi_[i]);
  return x;
}

bool Domain::operator==(const Domain& o) const {
  return lo_ == o.lo_ && hi_ == o.hi_ && h_ == o.h_;
}

std::string Domain::str() const {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < lo_.size(); ++i)
    os << (i ? "x" : "") << "(" << lo_[i] << "," << hi_[i] << ")";
  os << " h=" << h_ << "]";
  return os.str();
}

}  // namespace jetlab
