#pragma once

// Randomized-grid Bayesian estimator over oriented Pauli contractions A = Q^T D Q.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "aqec/angle_estimator.hpp"
#include "aqec/channel.hpp"
#include "aqec/codes.hpp"
#include "aqec/geom3.hpp"

namespace aqec {

/// Raised when an observation eliminates every live candidate.
class GridExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChannelCandidate {
  SymMat3 matrix;  // Q^T D Q, trace one
  Eccentricities ecc;
  Rotation3 orientation;

  static ChannelCandidate make(const Eccentricities& e, const Rotation3& q) {
    return {oriented(q, e.k1, e.k2, e.k3), e, q};
  }
};

/// Eccentricities with x1 ~ U[0,1], x2 | x1 ~ U[0, 1 - x1], x3 = 1 - x1 - x2.
template <class Rng>
Eccentricities sample_eccentricities(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double x1 = unit(rng);
  const double x2 = (1.0 - x1) * unit(rng);
  return {x1, x2, std::max(0.0, 1.0 - x1 - x2)};
}

template <class Rng>
ChannelCandidate sample_candidate(Rng& rng) {
  const Eccentricities e = sample_eccentricities(rng);
  return ChannelCandidate::make(e, haar_rotation(rng));
}

struct MleControl {
  std::size_t index = 0;
  SymMat3 matrix;
  Rotation3 control;
};

class ChannelGrid {
 public:
  /// Candidates 46 nats below the running maximum stop receiving updates.
  static constexpr double kPruneNats = 46.0;
  static constexpr double kMinRate = 1e-300;

  template <class Rng>
  static ChannelGrid sample(std::size_t n_points, Rng& rng) {
    if (n_points < 1) throw std::invalid_argument("ChannelGrid needs at least one point");
    std::vector<ChannelCandidate> c;
    c.reserve(n_points);
    for (std::size_t i = 0; i < n_points; ++i) c.push_back(sample_candidate(rng));
    return ChannelGrid(std::move(c));
  }

  explicit ChannelGrid(std::vector<ChannelCandidate> candidates) : candidates_(std::move(candidates)) {
    if (candidates_.empty()) throw std::invalid_argument("ChannelGrid needs at least one point");
    const double lw = -std::log(static_cast<double>(candidates_.size()));
    log_w_.assign(candidates_.size(), lw);
    active_.resize(candidates_.size());
    for (std::size_t i = 0; i < active_.size(); ++i) active_[i] = i;
  }

  std::size_t size() const { return candidates_.size(); }
  std::size_t active_count() const { return active_.size(); }
  const std::vector<ChannelCandidate>& candidates() const { return candidates_; }
  const std::vector<double>& log_weights() const { return log_w_; }

  /// Multinomial update in the frame of `control`: candidate i gains
  /// wx log kx_i + wy log ky_i + wz log kz_i with (kx, ky, kz) = diag(R X_i R^T).
  void update(const WeightTriple& t, const Rotation3& control) {
    if (t.wx < 0 || t.wy < 0 || t.wz < 0) throw std::invalid_argument("ChannelGrid::update: negative weight");
    if (t.total() == 0) return;
    refresh_rates(control);

    scratch_.resize(active_.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < active_.size(); ++a) {
      const std::size_t i = active_[a];
      double v = log_w_[i];
      if (t.wx > 0) v += t.wx * log_rate_[3 * i];
      if (t.wy > 0) v += t.wy * log_rate_[3 * i + 1];
      if (t.wz > 0) v += t.wz * log_rate_[3 * i + 2];
      scratch_[a] = v;
      mx = std::max(mx, v);
    }
    if (!std::isfinite(mx)) throw GridExhausted("every grid candidate was eliminated");

    double s = 0.0;
    for (double v : scratch_) s += std::exp(v - mx);
    const double z = mx + std::log(s);

    std::size_t keep = 0;
    for (std::size_t a = 0; a < active_.size(); ++a) {
      const std::size_t i = active_[a];
      log_w_[i] = scratch_[a] - z;
      if (scratch_[a] >= mx - kPruneNats) active_[keep++] = i;
    }
    active_.resize(keep);
  }

  /// Max-weight live candidate, lowest index on ties.
  std::size_t mle_index() const {
    std::size_t best = active_.front();
    for (std::size_t i : active_)
      if (log_w_[i] > log_w_[best] || (log_w_[i] == log_w_[best] && i < best)) best = i;
    return best;
  }

  MleControl mle_control() const {
    const std::size_t i = mle_index();
    return {i, candidates_[i].matrix, optimal_control(candidates_[i].matrix)};
  }

  /// min_i ||X_i - a||_F over all candidates.
  double min_distance(const SymMat3& a) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : candidates_) best = std::min(best, frobenius_distance(c.matrix, a));
    return best;
  }

 private:
  void refresh_rates(const Rotation3& control) {
    if (cached_control_ && *cached_control_ == control) return;
    log_rate_.resize(3 * candidates_.size());
    const Vec3 r[3] = {control.row(0), control.row(1), control.row(2)};
    for (std::size_t i : active_)
      for (int k = 0; k < 3; ++k) {
        const double rate = candidates_[i].matrix.quadratic(r[k]);
        log_rate_[3 * i + k] = rate <= 0.0 ? -std::numeric_limits<double>::infinity()
                                           : std::log(std::clamp(rate, kMinRate, 1.0));
      }
    cached_control_ = control;
  }

  std::vector<ChannelCandidate> candidates_;
  std::vector<double> log_w_;
  std::vector<std::size_t> active_;
  std::vector<double> log_rate_;
  std::vector<double> scratch_;
  std::optional<Rotation3> cached_control_;
};

}  // namespace aqec
