#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace moveconv {

// Independent stream seed derived from a master seed: SplitMix64 applied to
// master + (stream + 1) * golden-ratio increment. Replicates and parallel
// jobs use derive_seed(seed, k) so results do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Seeded draws on top of std::mt19937_64 (the integer stream is pinned by the
// standard) with explicit transforms: 53-bit uniforms, Box-Muller Gaussians
// (second value cached), Marsaglia-Tsang gamma. Not thread-safe; use one Rng
// per chain/replicate.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1) with 53-bit resolution
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  // (0, 1), safe for log()
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double gaussian();

  // unit-scale gamma, any shape > 0
  double gamma(double shape);
  // density p(x) proportional to x^{-shape-1} exp(-scale/x)
  double inv_gamma(double shape, double scale) { return scale / gamma(shape); }

  // index draw from unnormalized non-negative weights; single uniform,
  // inverse-cdf scan (zero-weight entries can never be selected)
  int categorical(const std::vector<double>& weights);
  // same, but from log-weights (log-sum-exp normalized; -inf allowed)
  int categorical_log(const std::vector<double>& log_weights);

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace moveconv
