#pragma once

#include <cmath>
#include <cstdint>
#include <string>

// Deterministic counter-based random number generation.
//
// Every seeded operation in this library derives its randomness from
// (seed, counter) pairs instead of from a stateful engine.  The value for a
// given pair never depends on how many draws happened before it, so results
// are independent of iteration order, trivially parallelizable, and
// bit-reproducible across platforms and languages.
//
// Construction: the draw for counter c is the (c+1)-th output of the
// SplitMix64 sequence seeded with `seed`, i.e. the SplitMix64 finalizer
// applied to seed + (c+1) * 0x9E3779B97F4A7C15.

namespace pcsel::rng {

inline uint64_t draw_u64(uint64_t seed, uint64_t counter) {
  uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Uniform in the open interval (0, 1): the top 53 bits of the draw plus a
// half-ulp offset, scaled by 2^-53.  Never returns exactly 0 or 1, so it is
// safe to feed into inverse-CDF transforms.
inline double uniform53(uint64_t seed, uint64_t counter) {
  return (static_cast<double>(draw_u64(seed, counter) >> 11) + 0.5) * 0x1.0p-53;
}

// Unbiased-enough bounded draw in [0, n) via 128-bit multiply-shift.  The
// residual bias for n up to a few million is far below anything our
// statistical tests can see, and the mapping stays a pure function of
// (seed, counter).
inline uint64_t bounded(uint64_t seed, uint64_t counter, uint64_t n) {
  return static_cast<uint64_t>(
      (static_cast<unsigned __int128>(draw_u64(seed, counter)) * n) >> 64);
}

// Inverse of the standard normal CDF, evaluated with the AS 241 (PPND16)
// rational approximation.  Pure arithmetic, ~1e-15 absolute accuracy over
// (0, 1), so normal variates reproduce bit-for-bit anywhere IEEE-754 holds.
inline double inverse_normal_cdf(double p) {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
             1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
             4.2313330701600911252e+1) * r + 1.0);
  }
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
              4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
              2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
              5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -value : value;
}

// Standard normal variate for (seed, counter).
inline double normal(uint64_t seed, uint64_t counter) {
  return inverse_normal_cdf(uniform53(seed, counter));
}

// Stable 64-bit hash of a string (FNV-1a), used to fold identifiers such as
// frame ids into a seed so per-item randomness does not depend on the order
// items are visited in.
inline uint64_t hash_string(const char* data, size_t size) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (size_t i = 0; i < size; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001B3ull;
  }
  return h;
}

inline uint64_t hash_string(const std::string& s) {
  return hash_string(s.data(), s.size());
}

// Derives an independent stream seed from a parent seed and a stream key.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) {
  return draw_u64(seed, stream);
}

}  // namespace pcsel::rng
