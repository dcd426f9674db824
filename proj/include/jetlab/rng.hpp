#pragma once

#include <cstdint>

#include "jetlab/jet.hpp"

namespace jetlab {

/// Counter-based deterministic generator: every draw is a pure function of
/// (seed, stream, counter) through the SplitMix64 finalizer, so independent
/// streams can be evaluated in parallel and merged by stream index with
/// bit-identical results.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  /// [0, 1)
  double uniform();
  double uniform(double a, double b);
  /// Centered Gaussian with standard deviation `scale` (Box-Muller).
  double normal(double scale = 1.0);
  /// Inclusive on both ends.
  int uniform_int(int lo, int hi);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Jet with Gaussian r, p and symmetrized Gaussian A, spread `scale`.
Jet sample_jet(int dim, CounterRng& rng, double scale = 1.0);

/// Symmetrized matrix with Gaussian entries, spread `scale`.
SymMatrix sample_sym(int dim, CounterRng& rng, double scale = 1.0);

/// Positive semidefinite sample B^T B / dim with Gaussian B.
SymMatrix sample_psd(int dim, CounterRng& rng, double scale = 1.0);

}  // namespace jetlab
