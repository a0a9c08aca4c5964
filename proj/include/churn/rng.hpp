#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace churn {

// mt19937_64 output is pinned by the standard; the distribution adaptors in
// <random> are not. Everything downstream of the raw 64-bit stream is
// implemented here so frozen test values survive standard-library changes.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)), seed_tag_(seed) {}

  // Derives an independent stream; used to give users / trees / cells their
  // own generators so parallel order cannot change results.
  Rng substream(std::uint64_t index) const {
    return Rng(splitmix64(seed_tag_) ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) via rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

  // Knuth for small means, normal approximation above 64 (bias negligible at
  // the rates the generator uses).
  long long poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean > 64.0) {
      const long long k = std::llround(mean + std::sqrt(mean) * normal());
      return k < 0 ? 0 : k;
    }
    const double target = std::exp(-mean);
    long long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > target);
    return k - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_tag_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace churn
