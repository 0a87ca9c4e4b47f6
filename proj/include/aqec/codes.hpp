#pragma once

// Weight-level combinatorics of asymmetric CSS codes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "aqec/channel.hpp"

namespace aqec {

using uint128 = unsigned __int128;

/// [[n, k, dx/dz]]: corrects up to tx X-type and tz Z-type errors (Y counts against both).
struct AsymmetricCode {
  std::string name;
  int n = 1;
  int k = 1;
  int dx = 1;
  int dz = 1;

  static AsymmetricCode make(std::string name, int n, int k, int dx, int dz) {
    AsymmetricCode c{std::move(name), n, k, dx, dz};
    c.validate();
    return c;
  }
  void validate() const {
    if (k < 1 || dz < 1 || dz > dx || dx > n || n > 63)
      throw std::invalid_argument("invalid asymmetric code parameters");
  }
  constexpr int tx() const { return (dx - 1) / 2; }
  constexpr int tz() const { return (dz - 1) / 2; }
};

struct WeightTriple {
  int wx = 0;
  int wy = 0;
  int wz = 0;

  constexpr int total() const { return wx + wy + wz; }
  friend constexpr bool operator==(const WeightTriple&, const WeightTriple&) = default;
};

/// n! / ((n - w)! wx! wy! wz!), exact.
inline uint128 multinomial(int n, int wx, int wy, int wz) {
  if (n < 0 || n > 63 || wx < 0 || wy < 0 || wz < 0 || wx + wy + wz > n)
    throw std::invalid_argument("multinomial: invalid weights");
  // Product of binomials C(n, w) C(w, wx) C(w - wx, wy); every partial
  // product is itself an integer, so division is exact at each step.
  auto binom = [](int m, int r) {
    uint128 c = 1;
    for (int i = 0; i < r; ++i) c = c * static_cast<uint128>(m - i) / static_cast<uint128>(i + 1);
    return c;
  };
  const int w = wx + wy + wz;
  const uint128 a = binom(n, w);
  const uint128 b = binom(w, wx);
  const uint128 c = binom(w - wx, wy);
  const uint128 ab = a * b;
  if (b != 0 && ab / b != a) throw std::overflow_error("multinomial overflow");
  const uint128 abc = ab * c;
  if (c != 0 && abc / c != ab) throw std::overflow_error("multinomial overflow");
  return abc;
}

inline constexpr bool correctable(const AsymmetricCode& code, const WeightTriple& t) {
  return t.wx + t.wy <= code.tx() && t.wz + t.wy <= code.tz();
}

/// Probability that one cycle produces exactly the weight triple `t` on n qubits.
inline double triple_probability(int n, const WeightTriple& t, const PauliRates& r) {
  const double p = r.total();
  auto pw = [](double base, int e) { return e == 0 ? 1.0 : std::pow(base, e); };
  const double idle = (n - t.total()) == 0 ? 1.0 : std::exp((n - t.total()) * std::log1p(-p));
  return static_cast<double>(multinomial(n, t.wx, t.wy, t.wz)) * pw(r.px, t.wx) * pw(r.py, t.wy) *
         pw(r.pz, t.wz) * idle;
}

namespace detail {
struct KahanSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

/// C(m, r) for m <= 63 as doubles (exact up to 2^53, correctly rounded above).
inline const std::vector<double>& binomial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(64 * 64, 0.0);
    for (int m = 0; m < 64; ++m) {
      t[64 * m] = 1.0;
      for (int r = 1; r <= m; ++r) t[64 * m + r] = t[64 * (m - 1) + r - 1] + (r < m ? t[64 * (m - 1) + r] : 0.0);
    }
    return t;
  }();
  return table;
}

inline std::array<double, 64> powers(double base, int n) {
  std::array<double, 64> out{};
  out[0] = 1.0;
  // flushed to zero below the normal range; subnormal arithmetic is very slow
  for (int k = 1; k <= n; ++k) {
    out[k] = out[k - 1] * base;
    if (out[k] < std::numeric_limits<double>::min()) out[k] = 0.0;
  }
  return out;
}

/// Sums triple probabilities over the triples whose correctability equals `want`.
inline double sum_triples(const AsymmetricCode& code, const PauliRates& r, bool want) {
  const int n = code.n;
  const auto& c = binomial_table();
  const auto px = powers(r.px, n), py = powers(r.py, n), pz = powers(r.pz, n);
  const auto idle = powers(1.0 - r.total(), n);
  KahanSum acc;
  for (int w = 0; w <= n; ++w) {
    const double cw = c[64 * n + w] * idle[n - w];
    for (int wx = 0; wx <= w; ++wx)
      for (int wy = 0; wy <= w - wx; ++wy) {
        const WeightTriple t{wx, wy, w - wx - wy};
        if (correctable(code, t) != want) continue;
        acc.add(cw * c[64 * w + wx] * c[64 * (w - wx) + wy] * px[wx] * py[wy] * pz[t.wz]);
      }
  }
  return acc.sum;
}

}  // namespace detail

/// Probability of an uncorrectable cycle: the complement of the correctable
/// set, summed directly over the uncorrectable triples (no 1 - x cancellation).
inline double p_fail_exact(const AsymmetricCode& code, const PauliRates& rates) {
  return std::clamp(detail::sum_triples(code, rates, false), 0.0, 1.0);
}

/// Total probability of the correctable triples.
inline double p_correctable(const AsymmetricCode& code, const PauliRates& rates) {
  return detail::sum_triples(code, rates, true);
}

inline double binomial_coefficient(int n, int k) { return static_cast<double>(multinomial(n, k, 0, 0)); }

/// Small-rate approximation C(n, tz+1)(py+pz)^(tz+1) + C(n, tx+1)(px+py)^(tx+1).
inline double p_fail_leading(const AsymmetricCode& code, const PauliRates& r) {
  const int ez = code.tz() + 1;
  const int ex = code.tx() + 1;
  double out = 0.0;
  if (ez <= code.n) out += binomial_coefficient(code.n, ez) * std::pow(r.py + r.pz, ez);
  if (ex <= code.n) out += binomial_coefficient(code.n, ex) * std::pow(r.px + r.py, ex);
  return out;
}

/// P(Bin(n, q) >= k), summed over the upper tail.
inline double binomial_tail(int n, double q, int k) {
  if (k <= 0) return 1.0;
  if (k > n || q <= 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  const double lq = std::log(q);
  const double l1q = std::log1p(-q);
  detail::KahanSum acc;
  for (int j = k; j <= n; ++j)
    acc.add(binomial_coefficient(n, j) * std::exp(j * lq + (n - j) * l1q));
  return std::min(acc.sum, 1.0);
}

inline const std::vector<AsymmetricCode>& catalog() {
  static const std::vector<AsymmetricCode> codes = {
      AsymmetricCode::make("15-1-7-3", 15, 1, 7, 3),
      AsymmetricCode::make("31-6-7-5", 31, 6, 7, 5),
      AsymmetricCode::make("23-1-7", 23, 1, 7, 7),
      AsymmetricCode::make("5-1-3", 5, 1, 3, 3),
  };
  return codes;
}

inline const AsymmetricCode& code_by_name(std::string_view name) {
  for (const auto& c : catalog())
    if (c.name == name) return c;
  throw std::invalid_argument("unknown code: " + std::string(name));
}

}  // namespace aqec
