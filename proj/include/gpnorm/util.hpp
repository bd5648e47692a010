#pragma once
// Small shared helpers: guarded fractional powers, deterministic RNG streams,
// and float formatting that survives a text round trip.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

namespace gpnorm {

// |x|^q for q > 0, evaluated as exp(q log|x|). Values below 1e-300 map to 0
// so fractional exponents never see log(0) or produce denormal garbage.
inline double pow_abs(double x, double q) {
  const double a = std::fabs(x);
  if (a < 1e-300) return 0.0;
  return std::exp(q * std::log(a));
}

// sign(x) |x|^q with the same guard; odd extension of the power.
inline double sgn_pow(double x, double q) {
  const double m = pow_abs(x, q);
  return x < 0.0 ? -m : m;
}

// x^e for nonnegative bases appearing in threshold formulas. Follows the
// pow(0,0) = 1 convention, which is the value these formulas require when
// the exponent r degenerates to zero.
inline double pow_nn(double x, double e) { return std::pow(x, e); }

inline double sq(double x) { return x * x; }

// Shortest decimal text that parses back to the identical double.
inline std::string fmt_full(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

// Deterministic uniform/normal streams on top of a fixed-algorithm 64-bit
// generator. Distributions are hand-rolled: the standard library ones are
// implementation-defined and would break byte-identical output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64() {
    // splitmix64; stable everywhere, good enough for test draws.
    std::uint64_t z = (s_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (fresh pair each call, second discarded:
  // keeps the stream position independent of call history)
  double normal() {
    double u1 = uniform(), u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t s_;
};

}  // namespace gpnorm
