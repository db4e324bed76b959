#pragma once

/// @file rng.hpp
/// Named-substream seed derivation and unit-variance init families.
///
/// All randomness in a run flows from one master seed through substreams
/// identified by a label (and optional index). Distinct labels yield
/// independent streams, so changing how one stream is consumed never
/// perturbs the draws of another.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ntklab {

/// splitmix64 step: advances the state and returns the next output.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Derives the seed of substream (label, index) from the master seed.
/// Pure function; stable across platforms.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                                 std::uint64_t index = 0) {
  std::uint64_t state = master;
  (void)splitmix64_next(state);
  state ^= fnv1a64(label);
  (void)splitmix64_next(state);
  state ^= index;
  return splitmix64_next(state);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

/// Unit-variance coordinate distributions for parameter initialization.
enum class InitFamily { gaussian, uniform, rademacher };

inline std::string to_string(InitFamily f) {
  switch (f) {
    case InitFamily::gaussian: return "gaussian";
    case InitFamily::uniform: return "uniform";
    case InitFamily::rademacher: return "rademacher";
  }
  throw std::invalid_argument("unknown InitFamily");
}

inline InitFamily init_family_from_string(std::string_view s) {
  if (s == "gaussian") return InitFamily::gaussian;
  if (s == "uniform") return InitFamily::uniform;
  if (s == "rademacher") return InitFamily::rademacher;
  throw std::invalid_argument("unknown init family '" + std::string(s) +
                              "' (expected gaussian | uniform | rademacher)");
}

/// Fills out[0..n) with i.i.d. unit-variance draws from the family.
inline void fill_unit_variance(InitFamily family, std::mt19937_64& rng,
                               double* out, std::ptrdiff_t n) {
  switch (family) {
    case InitFamily::gaussian: {
      std::normal_distribution<double> dist(0.0, 1.0);
      for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = dist(rng);
      return;
    }
    case InitFamily::uniform: {
      const double half_width = 1.7320508075688772;  // sqrt(3): variance 1
      std::uniform_real_distribution<double> dist(-half_width, half_width);
      for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = dist(rng);
      return;
    }
    case InitFamily::rademacher: {
      for (std::ptrdiff_t i = 0; i < n; ++i)
        out[i] = (rng() & 1ULL) ? 1.0 : -1.0;
      return;
    }
  }
  throw std::invalid_argument("unknown InitFamily");
}

}  // namespace ntklab
