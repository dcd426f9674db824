#include "jetlab/rng.hpp"

#include <cmath>

#include "jetlab/errors.hpp"

namespace jetlab {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {
  key_ = mix64(seed * kGamma + 1) ^ mix64(stream * kGamma + 2);
}

std::uint64_t CounterRng::next_u64() {
  return mix64(key_ + (counter_++) * kGamma);
}

double CounterRng::uniform() {
  // 53 bits of mantissa
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(double a, double b) {
  return a + (b - a) * uniform();
}

double CounterRng::normal(double scale) {
  if (have_spare_) {
    have_spare_ = false;
    return scale * spare_;
  }
  double u1 = uniform(), u2 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  double rad = std::sqrt(-2.0 * std::log(u1));
  double ang = 2.0 * M_PI * u2;
  spare_ = rad * std::sin(ang);
  have_spare_ = true;
  return scale * rad * std::cos(ang);
}

int CounterRng::uniform_int(int lo, int hi) {
  if (hi < lo) throw InvalidInput("uniform_int: empty range");
  auto span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  return lo + static_cast<int>(next_u64() % span);
}

Jet sample_jet(int dim, CounterRng& rng, double scale) {
  Jet j = Jet::zero(dim);
  j.r = rng.normal(scale);
  for (int i = 0; i < dim; ++i) j.p[i] = rng.normal(scale);
  j.a = sample_sym(dim, rng, scale);
  return j;
}

SymMatrix sample_sym(int dim, CounterRng& rng, double scale) {
  std::vector<double> full(static_cast<size_t>(dim) * dim);
  for (double& v : full) v = rng.normal(scale);
  return SymMatrix::symmetrized(dim, full);
}

SymMatrix sample_psd(int dim, CounterRng& rng, double scale) {
  std::vector<double> b(static_cast<size_t>(dim) * dim);
  for (double& v : b) v = rng.normal(scale);
  SymMatrix m(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      double s = 0.0;
      for (int k = 0; k < dim; ++k) s += b[k * dim + i] * b[k * dim + j];
      m.set(i, j, s / dim);
    }
  return m;
}

}  // namespace jetlab
