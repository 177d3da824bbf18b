#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

namespace twrelay {

/// Tags separating the random substreams consumed within one Monte Carlo
/// trial, so adding draws to one purpose never shifts another.
enum class StreamPurpose : std::uint64_t {
  realization = 1,  // channel matrices and fading factors
  slot = 2,         // transmit signals and receiver noise
};

/// Counter-based splittable stream keyed by (seed, trial, purpose).
///
/// The state is a pure function of the key, so any substream can be sampled
/// in isolation and in any order; parallel and sequential runs see identical
/// ensembles. The generator is splitmix64 and the Gaussian transforms are
/// spelled out below rather than taken from <random>, whose distributions
/// are implementation-defined and not reproducible across toolchains.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t trial, StreamPurpose purpose)
      : state_(derive_key(seed, trial, static_cast<std::uint64_t>(purpose))) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform on (0, 1] with 53-bit resolution; never zero, so log() is safe.
  double uniform01() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  /// Standard normal N(0, 1), Box-Muller.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform01()));
    const double phi = 2.0 * std::numbers::pi * uniform01();
    spare_ = r * std::sin(phi);
    have_spare_ = true;
    return r * std::cos(phi);
  }

  /// Circularly symmetric complex Gaussian CN(0, 1): unit total variance,
  /// 1/2 per component. Polar form: |z|^2 ~ Exp(1), phase uniform.
  std::complex<double> cgaussian() {
    const double r = std::sqrt(-std::log(uniform01()));
    const double phi = 2.0 * std::numbers::pi * uniform01();
    return {r * std::cos(phi), r * std::sin(phi)};
  }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  static std::uint64_t derive_key(std::uint64_t seed, std::uint64_t trial,
                                  std::uint64_t purpose) {
    std::uint64_t z = mix64(seed + 0x9E3779B97F4A7C15ull);
    z = mix64(z ^ (trial + 0xD1B54A32D192ED03ull));
    z = mix64(z ^ (purpose + 0x8CB92BA72F3D8DD7ull));
    return z;
  }

  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace twrelay
