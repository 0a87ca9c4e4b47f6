#pragma once

// Seeding and rare-event sampling primitives.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "aqec/codes.hpp"

namespace aqec {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Per-trial seed derived from a base seed and a trial index.
inline constexpr std::uint64_t mix64(std::uint64_t base_seed, std::uint64_t index) {
  return splitmix64(splitmix64(base_seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

inline constexpr std::uint64_t kNever = std::numeric_limits<std::uint64_t>::max();

inline std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  return a > kNever - b ? kNever : a + b;
}

/// Number of Bernoulli(q) trials up to and including the first success
/// (support 1, 2, ...). Returns kNever when q underflows to zero.
template <class R>
std::uint64_t sample_geometric(double q, R& rng) {
  if (!(q > 1e-300)) return kNever;
  if (q >= 1.0) return 1;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng);
  while (u <= 0.0) u = unit(rng);
  const double t = std::floor(std::log(u) / std::log1p(-q));
  if (!(t < 9.2e18)) return kNever;
  return static_cast<std::uint64_t>(t) + 1;
}

/// Binomial draw for possibly astronomical trial counts. Exact for counts up
/// to 1e6; beyond that, Gaussian with continuity correction when the mean is
/// >= 1e3, Poisson when q < 1e-6, exact otherwise.
template <class R>
std::uint64_t sample_binomial(std::uint64_t count, double q, R& rng) {
  if (count == 0 || q <= 0.0) return 0;
  if (q >= 1.0) return count;
  const double mean = static_cast<double>(count) * q;
  if (count > 1'000'000ULL) {
    if (mean >= 1e3) {
      std::normal_distribution<double> g(mean, std::sqrt(mean * (1.0 - q)));
      const double x = std::floor(g(rng) + 0.5);
      return static_cast<std::uint64_t>(std::clamp(x, 0.0, static_cast<double>(count)));
    }
    if (q < 1e-6) {
      std::poisson_distribution<std::uint64_t> pois(mean);
      return std::min(pois(rng), count);
    }
  }
  std::binomial_distribution<std::uint64_t> b(count, q);
  return b(rng);
}

/// Bin(n, q) conditioned on the draw being >= k (n <= 63).
template <class R>
int sample_binomial_at_least(int n, double q, int k, R& rng) {
  k = std::max(k, 0);
  if (q >= 1.0) return n;
  if (q <= 0.0) return k;
  std::vector<double> w;
  const double lq = std::log(q), l1q = std::log1p(-q);
  double mx = -std::numeric_limits<double>::infinity();
  for (int j = k; j <= n; ++j) {
    w.push_back(std::log(binomial_coefficient(n, j)) + j * lq + (n - j) * l1q);
    mx = std::max(mx, w.back());
  }
  double total = 0.0;
  for (double& v : w) total += (v = std::exp(v - mx));
  std::uniform_real_distribution<double> unit(0.0, total);
  double u = unit(rng);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (u < w[i]) return k + static_cast<int>(i);
    u -= w[i];
  }
  return n;
}

/// Splits `count` errors into X/Y/Z types in proportion to the rates.
template <class R>
WeightTriple split_errors(int count, const PauliRates& r, R& rng) {
  const double p = r.total();
  if (count == 0 || p <= 0.0) return {};
  std::binomial_distribution<int> bx(count, std::clamp(r.px / p, 0.0, 1.0));
  const int wx = bx(rng);
  const double yz = r.py + r.pz;
  int wy = 0;
  if (count - wx > 0 && yz > 0.0) {
    std::binomial_distribution<int> by(count - wx, std::clamp(r.py / yz, 0.0, 1.0));
    wy = by(rng);
  }
  return {wx, wy, count - wx - wy};
}

/// One cycle of n independent single-qubit Pauli channels.
template <class R>
WeightTriple sample_syndrome(const PauliRates& r, int n, R& rng) {
  const double p = std::clamp(r.total(), 0.0, 1.0);
  if (p <= 0.0) return {};
  std::binomial_distribution<int> bw(n, p);
  return split_errors(bw(rng), r, rng);
}

/// One cycle conditioned on at least one error.
template <class R>
WeightTriple sample_syndrome_nonzero(const PauliRates& r, int n, R& rng) {
  return split_errors(sample_binomial_at_least(n, std::clamp(r.total(), 0.0, 1.0), 1, rng), r, rng);
}

/// One cycle conditioned on at least one Z error.
template <class R>
WeightTriple sample_syndrome_given_z(const PauliRates& r, int n, R& rng) {
  const int wz = sample_binomial_at_least(n, r.pz, 1, rng);
  const double rest = (r.px + r.py) / (1.0 - r.pz);
  int k = 0;
  if (n - wz > 0 && rest > 0.0) {
    std::binomial_distribution<int> bk(n - wz, std::clamp(rest, 0.0, 1.0));
    k = bk(rng);
  }
  int wx = k;
  if (k > 0 && r.py > 0.0) {
    std::binomial_distribution<int> bx(k, r.px / (r.px + r.py));
    wx = bx(rng);
  }
  return {wx, k - wx, wz};
}

/// An uncorrectable triple drawn with probability proportional to its weight.
template <class R>
WeightTriple sample_uncorrectable(const AsymmetricCode& code, const PauliRates& r, R& rng) {
  std::vector<WeightTriple> ts;
  std::vector<double> ps;
  for (int w = 0; w <= code.n; ++w)
    for (int wx = 0; wx <= w; ++wx)
      for (int wy = 0; wy <= w - wx; ++wy) {
        const WeightTriple t{wx, wy, w - wx - wy};
        if (correctable(code, t)) continue;
        const double pr = triple_probability(code.n, t, r);
        if (pr > 0.0) {
          ts.push_back(t);
          ps.push_back(pr);
        }
      }
  if (ts.empty()) return {};
  std::discrete_distribution<std::size_t> d(ps.begin(), ps.end());
  return ts[d(rng)];
}

}  // namespace aqec
