#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace cheese {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Error with a stable machine-readable code ("budget-exhausted", "pole-proximity", ...).
struct Error : std::runtime_error {
  std::string code;
  Error(std::string c, const std::string& msg)
      : std::runtime_error(c + ": " + msg), code(std::move(c)) {}
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stable derived seed for substream `stream` of `seed`.
inline std::uint64_t splitmix_of(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (stream * 0x9e3779b97f4a7c15ULL);
  return splitmix64(s);
}

/// Deterministic RNG. Double extraction is pinned to (x >> 11) * 2^-53 so that
/// identical seeds give bit-identical streams independent of the C++ library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ^ 0xd1b54a32d192ed03ULL) {
    // warm up; splitmix has no zero-state pathology but keep streams decorrelated
    splitmix64(state_);
  }
  /// Independent substream: same (seed, stream) always yields the same Rng.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s = a ^ (stream_id * 0x9e3779b97f4a7c15ULL);
    return Rng(splitmix64(s));
  }
  std::uint64_t u64() { return splitmix64(state_); }
  double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  /// Uniform w.r.t. area on the open unit disc.
  Complex unit_disc() {
    double r = std::sqrt(uniform());
    double t = uniform(0.0, kTwoPi);
    return Complex(r * std::cos(t), r * std::sin(t));
  }

 private:
  std::uint64_t state_;
};

/// Wrap into [0, 2pi).
inline double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a;
}

/// Distance between a and b modulo `period`, in [0, period/2].
inline double mod_dist(double a, double b, double period = kTwoPi) {
  double d = std::fmod(std::abs(a - b), period);
  return std::min(d, period - d);
}

}  // namespace cheese
