#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "aqec/angle_estimator.hpp"
#include "aqec/channel.hpp"
#include "aqec/codes.hpp"
#include "aqec/rng.hpp"

using namespace aqec;

namespace {

constexpr double kPi = std::numbers::pi;

double total(const AngleGrid& g) {
  const auto w = g.weights();
  return std::accumulate(w.begin(), w.end(), 0.0);
}

AngleGrid random_grid(std::size_t n, Rng& rng, double shift = 0.0) {
  AngleGrid g = AngleGrid::uniform(n);
  std::uniform_real_distribution<double> u(0, kPi);
  std::uniform_int_distribution<int> k(0, 3);
  for (int i = 0; i < 4; ++i) g.update(k(rng), k(rng), u(rng) + shift);
  return g;
}

}  // namespace

TEST(AngleGrid, Uniform) {
  const AngleGrid g = AngleGrid::uniform(4);
  for (double w : g.weights()) EXPECT_DOUBLE_EQ(w, 0.25);
  EXPECT_EQ(g.mle_index(), 0u);
  EXPECT_DOUBLE_EQ(g.mle(), kPi / 8);
  EXPECT_NEAR(total(AngleGrid::uniform(1000)), 1.0, 1e-12);
  EXPECT_THROW(AngleGrid::uniform(1), std::invalid_argument);
}

TEST(AngleGrid, RecommendedCells) {
  for (double p : {0.1, 0.01, 3e-3, 1e-3, 3e-4, 1e-5}) {
    const auto n = static_cast<double>(recommended_cells(p));
    EXPECT_EQ(n, std::ceil(1.0 / p));
    EXPECT_LE(std::pow(std::sin(kPi / (2 * n)), 2), std::pow(kPi / 2, 2) * p * p);
  }
}

TEST(AngleGrid, UpdateNoOpAndHandValues) {
  AngleGrid g = AngleGrid::uniform(4);
  g.update(0, 0, 1.0);
  for (double w : g.weights()) EXPECT_DOUBLE_EQ(w, 0.25);

  // Z observation at the cell-0 midpoint. Oracle: midpoint-rule quadrature of
  // sin^2(theta - pi/8) over each cell of width pi/4.
  g.update(0, 1, kPi / 8);
  std::vector<double> expect(4, 0.0);
  constexpr int kSub = 20000;
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < kSub; ++i) {
      const double th = (j + (i + 0.5) / kSub) * kPi / 4;
      expect[j] += std::pow(std::sin(th - kPi / 8), 2) / kSub;
    }
  const double z = expect[0] + expect[1] + expect[2] + expect[3];
  const auto w = g.weights();
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(w[j], expect[j] / z, 1e-9);
  // Close to the midpoint values (0, 1/4, 1/2, 1/4); the aligned cell keeps mass.
  EXPECT_GT(w[0], 0.02);
  EXPECT_LT(w[0], 0.03);
  EXPECT_NEAR(w[2], 0.475, 1e-3);
  EXPECT_THROW(g.update(-1, 0, 0.0), std::invalid_argument);
}

TEST(AngleGrid, XOnlyKeepsArgmax) {
  Rng rng(31);
  std::uniform_int_distribution<int> wx(1, 50);
  for (int t = 0; t < 1000; ++t) {
    AngleGrid g = random_grid(64, rng);
    const std::size_t before = g.mle_index();
    g.update(wx(rng), 0, g.mle());
    EXPECT_EQ(g.mle_index(), before);
    EXPECT_NEAR(total(g), 1.0, 1e-10);
  }
}

TEST(AngleGrid, BulkUpdateMatchesSequential) {
  Rng rng(32);
  for (int t = 0; t < 50; ++t) {
    const AngleGrid base = random_grid(37, rng);
    const double th = std::uniform_real_distribution<double>(0, kPi)(rng);

    AngleGrid zero = base, zref = base;
    zero.bulk_update(0, th);
    zref.update(0, 1, th);
    for (std::size_t j = 0; j < base.size(); ++j) EXPECT_NEAR(zero.weights()[j], zref.weights()[j], 1e-12);

    AngleGrid bulk = base, seq = base;
    bulk.bulk_update(3, th);
    for (int i = 0; i < 3; ++i) seq.update(1, 0, th);
    seq.update(0, 1, th);
    for (std::size_t j = 0; j < base.size(); ++j) EXPECT_NEAR(bulk.weights()[j], seq.weights()[j], 1e-12);
  }
}

TEST(AngleGrid, HugeBulkUpdateStaysFinite) {
  AngleGrid g = AngleGrid::uniform(1000);
  g.bulk_update(1e12, 0.3);
  double s = 0;
  for (double l : g.log_weights()) {
    EXPECT_FALSE(std::isnan(l));
    EXPECT_LT(l, 1e-12);
  }
  for (double w : g.weights()) s += w;
  EXPECT_NEAR(s, 1.0, 1e-12);
  // log-sum-exp recomputation: the max cell carries essentially all the mass
  EXPECT_NEAR(g.weights()[g.mle_index()], 1.0, 1e-6);
}

TEST(AngleGrid, MleAfterRepeatedZUpdates) {
  for (std::size_t n : {16u, 64u, 257u}) {
    AngleGrid g = AngleGrid::uniform(n);
    const double th = 0.4;
    for (int i = 0; i < 100; ++i) g.update(0, 1, th);
    const double target = std::fmod(th + kPi / 2, kPi);
    double d = std::abs(g.mle() - target);
    d = std::min(d, kPi - d);
    EXPECT_LE(d, kPi / static_cast<double>(n));
  }
  EXPECT_EQ(AngleGrid::delta(10, 7).mle_index(), 7u);
}

TEST(AngleGrid, ObservationAtMleCellNeverAnnihilates) {
  AngleGrid g = AngleGrid::delta(8, 2);
  g.update(0, 1, g.midpoint(2));
  EXPECT_EQ(g.mle_index(), 2u);
  AngleGrid even = AngleGrid::uniform(64);
  for (int i = 0; i < 1000; ++i) even.update(1, 1, even.mle());
  EXPECT_NEAR(total(even), 1.0, 1e-10);
  EXPECT_THROW(even.update(std::numeric_limits<double>::infinity(), 0, 0.0), std::invalid_argument);
}

TEST(AngleGrid, DriftZeroVarianceIsIdentity) {
  Rng rng(33);
  AngleGrid g = random_grid(20, rng);
  const auto before = g.weights();
  g.drift({0.0});
  EXPECT_EQ(g.weights(), before);
  EXPECT_THROW(g.drift({-1.0}), std::invalid_argument);
}

TEST(AngleGrid, DriftDeltaSpreadsSymmetricallyWithWrap) {
  AngleGrid g = AngleGrid::delta(50, 1);
  g.drift({0.01});
  const auto w = g.weights();
  EXPECT_NEAR(total(g), 1.0, 1e-12);
  EXPECT_EQ(g.mle_index(), 1u);
  for (std::size_t k = 1; k < 10; ++k) EXPECT_NEAR(w[(1 + k) % 50], w[(1 + 50 - k) % 50], 1e-15);
  EXPECT_GT(w[49], 0.0);  // mass wrapped below cell 0
}

TEST(AngleGrid, DriftThreeCellDirectConvolution) {
  const double var = 0.25, h = kPi / 3;
  const int reach = static_cast<int>(std::floor(6 * std::sqrt(var) / h));
  ASSERT_EQ(reach, 2);
  AngleGrid g = AngleGrid::uniform(3);
  g.update(2, 0, 0.2);  // non-trivial starting weights
  const auto w0 = g.weights();
  std::vector<double> expect(3, 0.0);
  for (int j = 0; j < 3; ++j)
    for (int k = -reach; k <= reach; ++k) expect[j] += std::exp(-(k * h) * (k * h) / (2 * var)) * w0[((j - k) % 3 + 3) % 3];
  const double s = expect[0] + expect[1] + expect[2];
  g.drift({var});
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(g.weights()[j], expect[j] / s, 1e-14);
}

TEST(AngleGrid, DriftCommutesWithCircularShift) {
  constexpr std::size_t n = 40;
  constexpr std::size_t shift = 7;
  const double h = kPi / n;
  for (int t = 0; t < 20; ++t) {
    Rng a(100 + t), b(100 + t);
    AngleGrid g = random_grid(n, a);
    AngleGrid s = random_grid(n, b, shift * h);
    for (std::size_t j = 0; j < n; ++j) ASSERT_NEAR(g.weights()[j], s.weights()[(j + shift) % n], 1e-12);
    g.drift({0.02}, 3.0);
    s.drift({0.02}, 3.0);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(g.weights()[j], s.weights()[(j + shift) % n], 1e-12);
    EXPECT_NEAR(total(g), 1.0, 1e-10);
  }
}

TEST(AngleGrid, PosteriorConsistency) {
  const AsymmetricCode& code = code_by_name("15-1-7-3");
  constexpr std::size_t n = 64;
  int good = 0;
  for (int run = 0; run < 100; ++run) {
    Rng rng(mix64(34, run));
    const double theta0 = std::uniform_real_distribution<double>(0, kPi)(rng);
    AngleGrid g = AngleGrid::uniform(n);
    double th = g.mle();
    for (int cycle = 0; cycle < 10000; ++cycle) {
      const WeightTriple w = sample_syndrome(twirl_dephasing({0.02, theta0}, th), code.n, rng);
      if (w.total() == 0) continue;
      g.update(w.wx + w.wy, w.wz + w.wy, th);
      if (w.wz > 0) th = g.mle();
    }
    double d = std::abs(g.mle() - theta0);
    d = std::min(d, kPi - d);
    if (d <= 2.0 * kPi / n) ++good;
  }
  EXPECT_GE(good, 95);
}
