#pragma once

// Closed-form evaluators and post-processing of trial ensembles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "aqec/channel.hpp"
#include "aqec/codes.hpp"
#include "aqec/geom3.hpp"
#include "aqec/grid_estimator.hpp"
#include "aqec/rng.hpp"
#include "aqec/simulation.hpp"

namespace aqec {

// ---------------------------------------------------------------- fits

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_norm = 0.0;
  std::size_t n_points = 0;

  /// Distance whose weight-(t+1) failure law has exponent -slope.
  double effective_distance() const { return 2.0 * (-slope) - 1.0; }
};

/// Least squares on (log p, log lifetime).
inline FitResult power_law_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("power_law_fit needs at least 3 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [p, life] : points) {
    if (!(p > 0.0 && life > 0.0)) throw std::invalid_argument("power_law_fit needs positive values");
    const double x = std::log(p), y = std::log(life);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(points.size());
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("power_law_fit needs distinct p values");
  FitResult f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double rss = 0.0;
  for (const auto& [p, life] : points) {
    const double r = std::log(life) - (f.intercept + f.slope * std::log(p));
    rss += r * r;
  }
  f.residual_norm = std::sqrt(rss);
  f.n_points = points.size();
  return f;
}

// ---------------------------------------------------------------- Haar integrals

/// X-rate fraction k_x = q1^T D q1 for the (u, v) parametrization of a uniform q1.
inline double haar_x_fraction(const Eccentricities& e, double u, double v) {
  const double s = std::sin(2.0 * std::numbers::pi * v);
  const double c = std::cos(2.0 * std::numbers::pi * v);
  return e.k1 * u * u + (1.0 - u * u) * (e.k2 * s * s + e.k3 * c * c);
}

struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double optimal_coefficient = 0.0;  // 1 / (1 - k1)^(tz+1)
  double average_coefficient = 0.0;  // Haar mean of 1 / (1 - kx)^(tz+1)
};

/// Ratio of the optimally oriented lifetime to its Haar average under the
/// leading Z/Y failure law t(Q) ~ 1 / (C(n, tz+1) p^(tz+1) (1 - kx)^(tz+1)).
/// The optimal orientation places the largest eccentricity on x.
inline MonteCarloEstimate c_opt_numeric(const AsymmetricCode& code, const Eccentricities& ecc,
                                        std::size_t n_mc, std::uint64_t seed = 1) {
  ecc.validate();
  const double e = code.tz() + 1;
  const double kmax = std::max({ecc.k1, ecc.k2, ecc.k3});
  Rng rng(seed);
  std::uniform_real_distribution<double> uu(-1.0, 1.0), vv(0.0, 1.0);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    const double kx = haar_x_fraction(ecc, uu(rng), vv(rng));
    const double t = std::pow(1.0 - kx, -e);
    const double d = t - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (t - mean);
  }
  MonteCarloEstimate out;
  out.optimal_coefficient = std::pow(1.0 - kmax, -e);
  out.average_coefficient = mean;
  out.value = out.optimal_coefficient / mean;
  const double se_mean = n_mc > 1 ? std::sqrt(m2 / static_cast<double>(n_mc - 1) / static_cast<double>(n_mc)) : 0.0;
  out.std_error = out.value * se_mean / mean;
  return out;
}

/// tanh^-1 closed form of the Haar integral of 1 / (1 - kx)^2 after replacing
/// the (k2, k3) equatorial term by k3 (1 - u^2). Coefficient of 1 / (C(n,2) p^2).
/// Since k3 <= k2 the replacement enlarges 1 - kx, so this is a lower bound on
/// the true Haar-average coefficient.
inline double haar_lifetime_bound_closed(const Eccentricities& ecc) {
  const double k1 = ecc.k1, k3 = ecc.k3;
  if (!(k1 >= k3) || !(k3 < 1.0)) throw std::invalid_argument("closed form needs k1 >= k3 and k3 < 1");
  if (k1 == k3) return 1.0 / ((1.0 - k1) * (1.0 - k1));
  const double a = 1.0 - k3;
  const double b = k1 - k3;
  return std::atanh(std::sqrt(b / a)) / (2.0 * a * std::sqrt(a * b)) + 1.0 / (2.0 * a * (1.0 - k1));
}

/// Coefficient of the optimally oriented lifetime, 1 / (1 - k1)^2.
inline double optimal_lifetime_coefficient(const Eccentricities& ecc, int tz = 1) {
  return std::pow(1.0 - ecc.k1, -(tz + 1));
}

/// (2/3)^tz / (1 - k1 + frob_err)^tz.
inline double expected_code_performance(int tz, double k1, double frob_err) {
  if (frob_err < 0.0) throw std::invalid_argument("expected_code_performance: negative error");
  return std::pow(2.0 / 3.0, tz) / std::pow(1.0 - k1 + frob_err, tz);
}

/// Lower bound on Pr{||X - A||_F < eps} for one random grid point X.
inline double spacing_bound_single(double eps, const Eccentricities& a) {
  const double denom = 4096.0 * std::numbers::sqrt2 * 27.0 * a.k1 * a.k1 * a.k2 * a.k3;
  return std::pow(eps, 5) / denom;
}

/// Lower bound on Pr{min_i ||X_i - A||_F < eps} for N random grid points.
inline double spacing_bound(double eps, double n_points, const Eccentricities& a) {
  if (!(eps > 0.0)) return 0.0;
  const double q = std::min(1.0, spacing_bound_single(eps, a));
  if (q >= 1.0) return 1.0;
  return std::clamp(-std::expm1(n_points * std::log1p(-q)), 0.0, 1.0);
}

/// Haar average of the exact mean lifetime 1 / p_fail for an unadapted code.
inline MonteCarloEstimate haar_mean_lifetime(const AsymmetricCode& code, double p, const Eccentricities& ecc,
                                             std::size_t n_mc, std::uint64_t seed = 1) {
  Rng rng(seed);
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n_mc; ++i) {
    const OrientedPauliChannel ch{p, ecc, haar_rotation(rng)};
    const double t = 1.0 / p_fail_exact(code, effective_rates(ch, Rotation3{}));
    const double d = t - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (t - mean);
  }
  MonteCarloEstimate out;
  out.value = mean;
  out.average_coefficient = mean;
  out.std_error = n_mc > 1 ? std::sqrt(m2 / static_cast<double>(n_mc - 1) / static_cast<double>(n_mc)) : 0.0;
  return out;
}

/// Denominator of the normalized lifetime: Haar mean of 1 / p_fail_exact over
/// 20000 orientations, seeded from the experiment seed.
inline double unadapted_baseline(const AsymmetricCode& code, double p, const Eccentricities& ecc, std::uint64_t seed) {
  return haar_mean_lifetime(code, p, ecc, 20000, mix64(seed, 0xBA5E11E)).value;
}

// ---------------------------------------------------------------- lifetimes

struct LifetimeSummary {
  double mean = 0.0;
  double std_error = 0.0;
  double median = 0.0;
  double mode = 0.0;  // median of the most populated log10 bin (10 per decade)
  std::size_t trials = 0;
  std::size_t censored = 0;
  std::size_t failed = 0;  // trials that raised an error
};

inline LifetimeSummary lifetime_stats(const std::vector<TrialResult>& results) {
  LifetimeSummary s;
  std::vector<double> xs;
  for (const auto& r : results) {
    ++s.trials;
    if (!r.ok()) {
      ++s.failed;
      continue;
    }
    if (r.censored) {
      ++s.censored;
      continue;
    }
    xs.push_back(static_cast<double>(r.lifetime_cycles));
  }
  if (xs.empty()) throw std::invalid_argument("lifetime_stats: no uncensored results");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (xs[i] - mean);
  }
  s.mean = mean;
  s.std_error = xs.size() > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
  const std::size_t h = xs.size() / 2;
  s.median = xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);

  std::map<long long, std::vector<double>> bins;
  for (double x : xs) bins[static_cast<long long>(std::floor(10.0 * std::log10(x)))].push_back(x);
  const std::vector<double>* best = nullptr;
  for (const auto& [b, v] : bins)
    if (!best || v.size() > best->size()) best = &v;
  const std::size_t bh = best->size() / 2;
  s.mode = best->size() % 2 ? (*best)[bh] : 0.5 * ((*best)[bh - 1] + (*best)[bh]);
  return s;
}

// ---------------------------------------------------------------- KS tests

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 ? 2.0 : -2.0) * term;
    if (term < 1e-18) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

inline double ks_p_value(double d, double n_eff) {
  const double rn = std::sqrt(n_eff);
  return kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p_value(d, na * nb / (na + nb))};
}

template <class Cdf>
KsResult ks_one_sample(std::vector<double> xs, Cdf&& cdf) {
  if (xs.empty()) throw std::invalid_argument("ks_one_sample: empty sample");
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p_value(d, n)};
}

// ---------------------------------------------------------------- grid spacing

struct GridSpacingRow {
  std::size_t n_points = 0;
  double mean_min_distance = 0.0;
  double std_error = 0.0;
  std::vector<double> eps;
  std::vector<double> empirical_cdf;  // Pr{Z < eps}
  std::vector<double> bound;          // spacing_bound(eps, N, ecc)
};

/// For each N: `trials` fresh (A, grid) pairs with A of eccentricities `ecc`
/// and Haar orientation; records min_i ||X_i - A||_F.
inline std::vector<GridSpacingRow> grid_spacing_study(const Eccentricities& ecc, const std::vector<std::size_t>& n_points_list,
                                                      std::size_t trials, const std::vector<double>& eps,
                                                      std::uint64_t seed = 1) {
  if (n_points_list.empty()) throw std::invalid_argument("grid_spacing_study: empty N list");
  std::vector<GridSpacingRow> rows;
  for (std::size_t ni = 0; ni < n_points_list.size(); ++ni) {
    const std::size_t n = n_points_list[ni];
    GridSpacingRow row;
    row.n_points = n;
    row.eps = eps;
    row.empirical_cdf.assign(eps.size(), 0.0);
    std::vector<double> z(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      Rng rng(mix64(seed, ni * 1'000'003ULL + t));
      const SymMat3 a = ChannelCandidate::make(ecc, haar_rotation(rng)).matrix;
      z[t] = ChannelGrid::sample(n, rng).min_distance(a);
    }
    double mean = 0.0, m2 = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const double d = z[t] - mean;
      mean += d / static_cast<double>(t + 1);
      m2 += d * (z[t] - mean);
      for (std::size_t k = 0; k < eps.size(); ++k)
        if (z[t] < eps[k]) row.empirical_cdf[k] += 1.0 / static_cast<double>(trials);
    }
    row.mean_min_distance = mean;
    row.std_error = trials > 1 ? std::sqrt(m2 / static_cast<double>(trials - 1) / static_cast<double>(trials)) : 0.0;
    for (double e : eps) row.bound.push_back(spacing_bound(e, static_cast<double>(n), ecc));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace aqec
