#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace conic {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  return mix_seed(mix_seed(seed) ^ mix_seed(index + 0x632BE59BD9B4E019ULL));
}

inline Rng make_rng(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return Rng(seq);
}

inline double uniform01(Rng& rng) {
  // (0, 1): never returns 0 so log(u) stays finite.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  while (x <= 0.0) x = u(rng);
  return x;
}

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline double normal(Rng& rng, double mean = 0.0, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  return mean + sd * n(rng);
}

inline double gamma(Rng& rng, double shape, double scale = 1.0) {
  std::gamma_distribution<double> g(shape, scale);
  return g(rng);
}

inline double beta(Rng& rng, double a, double b) {
  const double x = gamma(rng, a);
  const double y = gamma(rng, b);
  return x / (x + y);
}

/// Inverse-gamma with density proportional to x^{-shape-1} exp(-scale/x).
inline double inverse_gamma(Rng& rng, double shape, double scale) {
  return scale / gamma(rng, shape, 1.0);
}

inline std::vector<double> dirichlet(Rng& rng, std::span<const double> alpha) {
  std::vector<double> out(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out[i] = gamma(rng, alpha[i]);
    total += out[i];
  }
  if (!(total > 0.0)) {
    // Every gamma underflowed (tiny concentrations): fall back to a vertex.
    std::uniform_int_distribution<std::size_t> pick(0, alpha.size() - 1);
    std::fill(out.begin(), out.end(), 0.0);
    out[pick(rng)] = 1.0;
    return out;
  }
  for (double& v : out) v /= total;
  return out;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// log(Phi(b) - Phi(a)) for a < b, stable in both tails.
inline double log_normal_interval(double a, double b) {
  if (a >= b) return -std::numeric_limits<double>::infinity();
  if (a > 0.0) {
    // Upper tail: use survival functions.
    const double sa = 0.5 * std::erfc(a / std::numbers::sqrt2);
    const double sb = 0.5 * std::erfc(b / std::numbers::sqrt2);
    if (sa > 0.0) return std::log(sa - sb);
    // Far tail: log Q(a) ~ -a^2/2 - log(a sqrt(2 pi)), difference negligible when b >> a.
    return -0.5 * a * a - std::log(a * std::sqrt(2.0 * std::numbers::pi)) +
           std::log1p(-std::exp(-0.5 * (b * b - a * a)) * a / b);
  }
  if (b < 0.0) return log_normal_interval(-b, -a);
  return std::log(normal_cdf(b) - normal_cdf(a));
}

/// Standard normal restricted to (a, b); a may be -inf, b may be +inf.
inline double truncated_standard_normal(Rng& rng, double a, double b) {
  if (b <= 0.0 && a < b) return -truncated_standard_normal(rng, -b, -a);
  if (a <= 0.0) {
    // Interval straddles the mode.
    if (b - a < std::sqrt(2.0 * std::numbers::pi)) {
      for (;;) {
        const double z = uniform(rng, a, b);
        if (uniform01(rng) <= std::exp(-0.5 * z * z)) return z;
      }
    }
    for (;;) {
      const double z = normal(rng);
      if (z > a && z < b) return z;
    }
  }
  // 0 < a < b.
  if (std::isfinite(b) && a * (b - a) < 1.0) {
    for (;;) {
      const double z = uniform(rng, a, b);
      if (uniform01(rng) <= std::exp(0.5 * (a * a - z * z))) return z;
    }
  }
  const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a - std::log(uniform01(rng)) / lambda;
    if (z >= b) continue;
    const double d = z - lambda;
    if (uniform01(rng) <= std::exp(-0.5 * d * d)) return z;
  }
}

inline double truncated_normal(Rng& rng, double mean, double sd, double lo, double hi) {
  const double a = (lo - mean) / sd;
  const double b = (hi - mean) / sd;
  return mean + sd * truncated_standard_normal(rng, a, b);
}

/// Log density of N(mean, sd^2) restricted to (lo, hi) at x.
inline double truncated_normal_log_pdf(double x, double mean, double sd, double lo, double hi) {
  if (!(x > lo && x < hi)) return -std::numeric_limits<double>::infinity();
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi) -
         log_normal_interval((lo - mean) / sd, (hi - mean) / sd);
}

inline double normal_log_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace conic
