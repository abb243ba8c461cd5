#pragma once

#include <cmath>
#include <cstdint>

namespace disperse {

// Counter-based random stream built on the SplitMix64 finalizer. Each draw is
// a pure function of (key, counter), so streams can be split per
// (operation, index) and replayed independently of call order elsewhere.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : key_(Mix(seed ^ 0x5851f42d4c957f2dULL)) {}

  // Child stream keyed by (tag, index); independent of this stream's counter.
  RngStream Split(std::uint64_t tag, std::uint64_t index = 0) const {
    RngStream child(0);
    child.key_ = Mix(key_ ^ Mix(tag + 0x9e3779b97f4a7c15ULL * (index + 1)));
    child.ctr_ = 0;
    child.have_spare_ = false;
    return child;
  }

  std::uint64_t NextU64() { return Mix(key_ + 0x9e3779b97f4a7c15ULL * ++ctr_); }

  // Uniform in [0, 1), 53-bit resolution.
  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe as a log argument.
  double UniformPositive() { return 1.0 - Uniform(); }

  double UniformRange(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t Below(std::uint64_t n) {
    // Rejection to remove modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t u;
    do {
      u = NextU64();
    } while (u >= limit);
    return u % n;
  }

  // Standard normal via Box-Muller; the paired deviate is cached.
  double Gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = UniformPositive();
    const double u2 = Uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Marsaglia-Tsang gamma sampler, shape a > 0, unit scale.
  double Gamma(double a) {
    if (a < 1.0) {
      const double u = UniformPositive();
      return Gamma(a + 1.0) * std::pow(u, 1.0 / a);
    }
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x;
      double v;
      do {
        x = Gaussian();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = UniformPositive();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double Beta(double a, double b) {
    const double x = Gamma(a);
    const double y = Gamma(b);
    return x / (x + y);
  }

 private:
  static std::uint64_t Mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stream tags used by the experiment harness so that every stochastic
// ingredient of a run is reproducible per (seed, step).
enum class StreamTag : std::uint64_t {
  kInit = 1,
  kMinibatch = 2,
  kSamples = 3,
  kCircles = 4,
  kEval = 5,
};

inline RngStream SplitStream(const RngStream& root, StreamTag tag, std::uint64_t index = 0) {
  return root.Split(static_cast<std::uint64_t>(tag), index);
}

}  // namespace disperse
