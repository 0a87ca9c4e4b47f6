#pragma once

// Monte Carlo trial engines for adaptive asymmetric codes.

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "aqec/angle_estimator.hpp"
#include "aqec/channel.hpp"
#include "aqec/codes.hpp"
#include "aqec/geom3.hpp"
#include "aqec/grid_estimator.hpp"
#include "aqec/rng.hpp"

namespace aqec {

inline constexpr std::uint64_t kDefaultMaxCycles = 1ULL << 62;

enum class Engine { PerCycle, FastForward };

struct DephasingTrialConfig {
  AsymmetricCode code = code_by_name("15-1-7-3");
  double p = 0.01;
  std::optional<double> theta0;  // nullopt: uniform on [0, pi)
  std::size_t n_cells = 100;
  double kappa_sq = 0.0;
  Engine engine = Engine::PerCycle;
  std::uint64_t max_cycles = kDefaultMaxCycles;
  std::uint64_t seed = 0;
  bool adaptive = true;
  std::optional<std::size_t> peaked_cell;  // start from a posterior concentrated on one cell

  void validate() const {
    code.validate();
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("dephasing trial: p must be in [0, 1]");
    if (n_cells < 2) throw std::invalid_argument("dephasing trial: need at least 2 cells");
    if (!(kappa_sq >= 0.0)) throw std::invalid_argument("dephasing trial: kappa_sq must be >= 0");
    if (engine == Engine::FastForward && kappa_sq > 0.0)
      throw std::invalid_argument("fast-forward engine requires kappa_sq = 0");
    if (max_cycles > (1ULL << 63)) throw std::invalid_argument("max_cycles exceeds 2^63");
    if (peaked_cell && *peaked_cell >= n_cells) throw std::invalid_argument("peaked_cell out of range");
  }
};

struct UnitalTrialConfig {
  AsymmetricCode code = code_by_name("15-1-7-3");
  double p = 0.003;
  Eccentricities ecc{0.7, 0.2, 0.1};
  std::optional<Rotation3> orientation;  // nullopt: Haar random
  std::size_t n_points = 30000;
  std::uint64_t max_cycles = kDefaultMaxCycles;
  std::uint64_t seed = 0;
  bool adaptive = true;
  bool plant_truth = false;  // candidate 0 is the true contraction

  void validate() const {
    code.validate();
    OrientedPauliChannel{p, ecc, Rotation3{}}.validate();
    if (n_points < 1) throw std::invalid_argument("unital trial: need at least one grid point");
    if (max_cycles > (1ULL << 63)) throw std::invalid_argument("max_cycles exceeds 2^63");
  }
};

struct TrialResult {
  std::uint64_t trial_id = 0;
  std::uint64_t seed = 0;
  double p = 0.0;
  std::uint64_t lifetime_cycles = 0;
  bool censored = false;
  WeightTriple failure_triple;
  std::uint64_t n_posterior_updates = 0;
  double estimator_error_at_failure = std::numeric_limits<double>::quiet_NaN();
  bool grid_restarted = false;
  std::string error;  // non-empty when the trial threw

  bool ok() const { return error.empty(); }
};

/// Circular distance between two angles of period pi.
inline double angle_error(double a, double b) {
  double d = std::fmod(std::abs(a - b), std::numbers::pi);
  return std::min(d, std::numbers::pi - d);
}

namespace detail {

inline AngleGrid initial_angle_grid(const DephasingTrialConfig& cfg) {
  return cfg.peaked_cell ? AngleGrid::delta(cfg.n_cells, *cfg.peaked_cell) : AngleGrid::uniform(cfg.n_cells);
}

inline double initial_theta0(const DephasingTrialConfig& cfg, Rng& rng) {
  if (cfg.theta0) return DephasingChannel::wrap_angle(*cfg.theta0);
  std::uniform_real_distribution<double> u(0.0, std::numbers::pi);
  return u(rng);
}

inline double idle_free_rate(int n, double p) { return -std::expm1(n * std::log1p(-std::min(p, 1.0))); }

}  // namespace detail

/// Per-cycle engine. Error-free cycles are skipped with an exact geometric
/// draw (the total error rate does not depend on the angles); the estimator's
/// pending drift is applied before each observation.
inline TrialResult run_dephasing_trial(const DephasingTrialConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  TrialResult res;
  res.seed = cfg.seed;
  res.p = cfg.p;

  double theta0 = detail::initial_theta0(cfg, rng);
  AngleGrid grid = detail::initial_angle_grid(cfg);
  double theta_hat = cfg.adaptive ? grid.mle() : 0.0;
  const DriftModel drift{cfg.kappa_sq};
  const bool drifting = cfg.kappa_sq > 0.0;
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  const int n = cfg.code.n;

  auto finish_censored = [&] {
    res.lifetime_cycles = cfg.max_cycles;
    res.censored = true;
    res.estimator_error_at_failure = angle_error(theta_hat, theta0);
    return res;
  };

  if (!cfg.adaptive && !drifting) {
    const PauliRates r = twirl_dephasing({cfg.p, theta0}, theta_hat);
    const std::uint64_t t = sample_geometric(p_fail_exact(cfg.code, r), rng);
    if (t > cfg.max_cycles) return finish_censored();
    res.lifetime_cycles = t;
    res.failure_triple = sample_uncorrectable(cfg.code, r, rng);
    res.estimator_error_at_failure = angle_error(theta_hat, theta0);
    return res;
  }

  const double q_any = detail::idle_free_rate(n, cfg.p);
  std::uint64_t t = 0;
  double pending_drift = 0.0;
  for (;;) {
    const std::uint64_t m = sample_geometric(q_any, rng);
    if (m == kNever || saturating_add(t, m) > cfg.max_cycles) return finish_censored();
    if (drifting && m > 1) {
      const double idle = static_cast<double>(m - 1);
      theta0 = DephasingChannel::wrap_angle(theta0 + std::sqrt(idle * cfg.kappa_sq) * unit_normal(rng));
      pending_drift += idle;
    }
    t += m;

    const PauliRates r = twirl_dephasing({cfg.p, theta0}, theta_hat);
    const WeightTriple w = sample_syndrome_nonzero(r, n, rng);
    if (!correctable(cfg.code, w)) {
      res.lifetime_cycles = t;
      res.failure_triple = w;
      res.estimator_error_at_failure = angle_error(theta_hat, theta0);
      return res;
    }
    if (cfg.adaptive) {
      if (pending_drift > 0.0) {
        grid.drift(drift, pending_drift);
        pending_drift = 0.0;
      }
      grid.update(w.wx + w.wy, w.wz + w.wy, theta_hat);
      ++res.n_posterior_updates;
      if (w.wz + w.wy > 0) theta_hat = grid.mle();
    }
    if (drifting) {
      theta0 = DephasingChannel::wrap_angle(theta0 + std::sqrt(cfg.kappa_sq) * unit_normal(rng));
      pending_drift += 1.0;
    }
  }
}

/// Rare-event engine for fixed angles: jumps between phase-flip cycles and
/// samples the intervening bit-flip count in aggregate.
inline TrialResult run_dephasing_trial_fast(const DephasingTrialConfig& cfg) {
  cfg.validate();
  if (cfg.kappa_sq != 0.0) throw std::invalid_argument("fast-forward engine requires kappa_sq = 0");
  Rng rng(cfg.seed);
  TrialResult res;
  res.seed = cfg.seed;
  res.p = cfg.p;

  const double theta0 = detail::initial_theta0(cfg, rng);
  AngleGrid grid = detail::initial_angle_grid(cfg);
  double theta_hat = cfg.adaptive ? grid.mle() : 0.0;
  const int n = cfg.code.n;
  const int fail_x = cfg.code.tx() + 1;

  std::uint64_t t = 0;
  for (;;) {
    const PauliRates r = twirl_dephasing({cfg.p, theta0}, theta_hat);
    const double q_z = r.pz >= 1.0 ? 1.0 : -std::expm1(n * std::log1p(-r.pz));
    const double no_z = 1.0 - r.pz;
    const double q_flip = no_z > 0.0 ? std::clamp((r.px + r.py) / no_z, 0.0, 1.0) : 0.0;
    const double q_fx = binomial_tail(n, q_flip, fail_x);

    const std::uint64_t t_z = q_z < 1e-300 ? kNever : sample_geometric(q_z, rng);
    const std::uint64_t t_f = sample_geometric(q_fx, rng);

    if (t_f < t_z) {
      if (saturating_add(t, t_f) > cfg.max_cycles) break;
      res.lifetime_cycles = t + t_f;
      const int k = sample_binomial_at_least(n, q_flip, fail_x, rng);
      res.failure_triple = split_errors(k, {r.px, r.py, 0.0}, rng);
      res.estimator_error_at_failure = angle_error(theta_hat, theta0);
      return res;
    }
    if (t_z == kNever || saturating_add(t, t_z) > cfg.max_cycles) break;

    const std::uint64_t n_x =
        sample_binomial(static_cast<std::uint64_t>(n) * (t_z - 1), q_flip, rng);
    t += t_z;
    const WeightTriple w = sample_syndrome_given_z(r, n, rng);
    if (!correctable(cfg.code, w)) {
      res.lifetime_cycles = t;
      res.failure_triple = w;
      res.estimator_error_at_failure = angle_error(theta_hat, theta0);
      return res;
    }
    if (cfg.adaptive) {
      grid.update(static_cast<double>(n_x) + w.wx + w.wy, w.wz + w.wy, theta_hat);
      ++res.n_posterior_updates;
      theta_hat = grid.mle();
    }
  }
  res.lifetime_cycles = cfg.max_cycles;
  res.censored = true;
  res.estimator_error_at_failure = angle_error(theta_hat, theta0);
  return res;
}

inline TrialResult run_dephasing(const DephasingTrialConfig& cfg) {
  return cfg.engine == Engine::FastForward ? run_dephasing_trial_fast(cfg) : run_dephasing_trial(cfg);
}

/// Adaptive unital-channel trial: grid posterior over contractions, control
/// re-derived whenever the MLE candidate changes.
inline TrialResult run_unital_trial(const UnitalTrialConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  TrialResult res;
  res.seed = cfg.seed;
  res.p = cfg.p;

  const Rotation3 q = cfg.orientation ? *cfg.orientation : haar_rotation(rng);
  const OrientedPauliChannel ch{cfg.p, cfg.ecc, q};
  const SymMat3 truth = contraction(ch);
  const int n = cfg.code.n;

  if (!cfg.adaptive) {
    const PauliRates r = effective_rates(ch, Rotation3{});
    const std::uint64_t t = sample_geometric(p_fail_exact(cfg.code, r), rng);
    if (t > cfg.max_cycles) {
      res.lifetime_cycles = cfg.max_cycles;
      res.censored = true;
    } else {
      res.lifetime_cycles = t;
      res.failure_triple = sample_uncorrectable(cfg.code, r, rng);
    }
    return res;
  }

  auto make_grid = [&] {
    std::vector<ChannelCandidate> c;
    c.reserve(cfg.n_points);
    if (cfg.plant_truth) c.push_back(ChannelCandidate::make(cfg.ecc, q));
    while (c.size() < cfg.n_points) c.push_back(sample_candidate(rng));
    return ChannelGrid(std::move(c));
  };
  ChannelGrid grid = make_grid();
  MleControl mle = grid.mle_control();

  const double q_any = detail::idle_free_rate(n, cfg.p);
  std::uint64_t t = 0;
  for (;;) {
    const std::uint64_t m = sample_geometric(q_any, rng);
    if (m == kNever || saturating_add(t, m) > cfg.max_cycles) {
      res.lifetime_cycles = cfg.max_cycles;
      res.censored = true;
      res.estimator_error_at_failure = frobenius_distance(mle.matrix, truth);
      return res;
    }
    t += m;
    const PauliRates r = effective_rates(ch, mle.control);
    const WeightTriple w = sample_syndrome_nonzero(r, n, rng);
    if (!correctable(cfg.code, w)) {
      res.lifetime_cycles = t;
      res.failure_triple = w;
      res.estimator_error_at_failure = frobenius_distance(mle.matrix, truth);
      return res;
    }
    try {
      grid.update(w, mle.control);
    } catch (const GridExhausted&) {
      if (res.grid_restarted) throw;
      res.grid_restarted = true;
      grid = make_grid();
      mle = grid.mle_control();
      continue;
    }
    ++res.n_posterior_updates;
    if (grid.mle_index() != mle.index) mle = grid.mle_control();
  }
}

/// Runs `n_trials` independent trials; trial i receives seed mix64(base_seed, i).
/// `sink` is invoked on the calling thread in trial order. Exceptions thrown by
/// a trial become records with a non-empty `error`.
template <class TrialFn, class Sink>
void run_ensemble(std::size_t n_trials, std::uint64_t base_seed, unsigned threads, TrialFn&& trial, Sink&& sink) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n_trials, 1)));

  auto run_one = [&](std::size_t i) {
    const std::uint64_t seed = mix64(base_seed, i);
    TrialResult r;
    try {
      r = trial(i, seed);
    } catch (const std::exception& e) {
      r = TrialResult{};
      r.error = e.what();
    } catch (...) {
      r = TrialResult{};
      r.error = "unknown exception";
    }
    r.trial_id = i;
    r.seed = seed;
    return r;
  };

  if (threads <= 1) {
    for (std::size_t i = 0; i < n_trials; ++i) sink(run_one(i));
    return;
  }

  std::vector<std::optional<TrialResult>> slots(n_trials);
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::thread> workers;
  for (unsigned w = 0; w < threads; ++w)
    workers.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n_trials;) {
        TrialResult r = run_one(i);
        {
          std::lock_guard lock(mu);
          slots[i] = std::move(r);
        }
        cv.notify_one();
      }
    });

  for (std::size_t emitted = 0; emitted < n_trials; ++emitted) {
    TrialResult r;
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return slots[emitted].has_value(); });
      r = std::move(*slots[emitted]);
      slots[emitted].reset();
    }
    sink(r);
  }
  for (auto& w : workers) w.join();
}

template <class TrialFn>
std::vector<TrialResult> run_ensemble(std::size_t n_trials, std::uint64_t base_seed, unsigned threads, TrialFn&& trial) {
  std::vector<TrialResult> out;
  out.reserve(n_trials);
  run_ensemble(n_trials, base_seed, threads, std::forward<TrialFn>(trial),
               [&out](const TrialResult& r) { out.push_back(r); });
  return out;
}

}  // namespace aqec
