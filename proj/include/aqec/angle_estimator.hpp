#pragma once

// Discretized Bayesian posterior over a dephasing angle theta in [0, pi).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace aqec {

/// Raised when an observation annihilates every cell of a posterior.
class DegenerateGrid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gaussian random walk of the true angle; kappa_sq is the per-cycle variance.
struct DriftModel {
  double kappa_sq = 0.0;
};

/// Smallest N = ceil(c / p) for which the residual misalignment pi / 2N keeps
/// p sin^2(pi / 2N) at O(p^3).
inline std::size_t recommended_cells(double p, double c = 1.0) {
  if (!(p > 0.0)) throw std::invalid_argument("recommended_cells: p must be positive");
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(c / p)));
}

namespace detail {
inline double log_sum_exp(std::span<const double> xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}
}  // namespace detail

class AngleGrid {
 public:
  static AngleGrid uniform(std::size_t n_cells) {
    if (n_cells < 2) throw std::invalid_argument("AngleGrid needs at least 2 cells");
    AngleGrid g;
    g.log_w_.assign(n_cells, -std::log(static_cast<double>(n_cells)));
    return g;
  }

  /// All mass on cell j.
  static AngleGrid delta(std::size_t n_cells, std::size_t j) {
    AngleGrid g = uniform(n_cells);
    if (j >= n_cells) throw std::invalid_argument("AngleGrid::delta: cell out of range");
    std::fill(g.log_w_.begin(), g.log_w_.end(), -std::numeric_limits<double>::infinity());
    g.log_w_[j] = 0.0;
    return g;
  }

  std::size_t size() const { return log_w_.size(); }
  double cell_width() const { return std::numbers::pi / static_cast<double>(size()); }
  double midpoint(std::size_t j) const { return (static_cast<double>(j) + 0.5) * cell_width(); }

  std::span<const double> log_weights() const { return log_w_; }
  std::vector<double> weights() const {
    std::vector<double> w(size());
    std::transform(log_w_.begin(), log_w_.end(), w.begin(), [](double l) { return std::exp(l); });
    return w;
  }

  /// Bayes update for one cycle that diagnosed wx bit flips and wz phase
  /// flips under control angle theta_hat. Each flip contributes the cell
  /// average of cos^2(theta - theta_hat) (bit) or sin^2(theta - theta_hat)
  /// (phase) over cell j, which is s trig^2(d_j) + (1 - s) / 2 with
  /// s = sin(h) / h and d_j the midpoint offset. Midpoint evaluation would
  /// zero out the MLE cell on every phase flip.
  void update(double wx, double wz, double theta_hat) {
    if (!(wx >= 0.0 && wz >= 0.0 && std::isfinite(wx) && std::isfinite(wz)))
      throw std::invalid_argument("AngleGrid::update: weights must be finite and non-negative");
    if (wx == 0.0 && wz == 0.0) return;
    const double h = cell_width();
    const double one_minus_s = h < 1e-2 ? h * h / 6.0 - h * h * h * h / 120.0 : 1.0 - std::sin(h) / h;
    const double s = 1.0 - one_minus_s;
    std::vector<double> next(log_w_);
    for (std::size_t j = 0; j < next.size(); ++j) {
      const double d = midpoint(j) - theta_hat;
      const double sn = std::sin(d), cs = std::cos(d);
      const double avg_sin2 = s * sn * sn + 0.5 * one_minus_s;
      const double avg_cos2 = s * cs * cs + 0.5 * one_minus_s;
      if (wx > 0.0) next[j] += wx * (avg_cos2 < 0.5 ? std::log(avg_cos2) : std::log1p(-avg_sin2));
      if (wz > 0.0) next[j] += wz * (avg_sin2 < 0.5 ? std::log(avg_sin2) : std::log1p(-avg_cos2));
    }
    normalize_into(next);
  }

  /// n_x bit flips accumulated since the last update plus one phase flip.
  void bulk_update(double n_x, double theta_hat) { update(n_x, 1.0, theta_hat); }

  /// Index of the maximum-weight cell, lowest index on ties.
  std::size_t mle_index() const {
    return static_cast<std::size_t>(std::max_element(log_w_.begin(), log_w_.end()) - log_w_.begin());
  }
  double mle() const { return midpoint(mle_index()); }

  /// Circular (period pi) convolution with a Gaussian of variance
  /// steps * kappa_sq, sampled at cell offsets and truncated at +-6 sigma.
  void drift(const DriftModel& model, double steps = 1.0) {
    if (model.kappa_sq < 0.0) throw std::invalid_argument("DriftModel: negative variance");
    const double var = model.kappa_sq * steps;
    if (var <= 0.0) return;
    const std::size_t n = size();
    const double h = cell_width();
    const double sigma = std::sqrt(var);
    const auto reach = static_cast<long long>(std::floor(6.0 * sigma / h));
    if (reach == 0) return;

    // Fold the truncated kernel onto the circle first: cost O(reach + n * min(n, reach)).
    std::vector<double> kernel(n, 0.0);
    for (long long k = -reach; k <= reach; ++k) {
      const double x = static_cast<double>(k) * h;
      const long long m = ((k % static_cast<long long>(n)) + static_cast<long long>(n)) % static_cast<long long>(n);
      kernel[static_cast<std::size_t>(m)] += std::exp(-x * x / (2.0 * var));
    }
    std::vector<std::size_t> support;
    for (std::size_t m = 0; m < n; ++m)
      if (kernel[m] > 0.0) support.push_back(m);

    const double mx = *std::max_element(log_w_.begin(), log_w_.end());
    std::vector<double> w(n);
    for (std::size_t j = 0; j < n; ++j) w[j] = std::exp(log_w_[j] - mx);

    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t m : support) s += kernel[m] * w[(j + n - m) % n];
      out[j] = s;
    }
    for (std::size_t j = 0; j < n; ++j) out[j] = std::log(out[j]);
    normalize_into(out);
  }

 private:
  AngleGrid() = default;

  void normalize_into(std::vector<double>& next) {
    const double z = detail::log_sum_exp(next);
    if (!std::isfinite(z)) throw DegenerateGrid("angle posterior vanished on every cell");
    for (double& v : next) v -= z;
    log_w_.swap(next);
  }

  std::vector<double> log_w_;
};

}  // namespace aqec
