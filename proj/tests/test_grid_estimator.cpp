#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "aqec/analysis.hpp"
#include "aqec/grid_estimator.hpp"
#include "aqec/rng.hpp"

using namespace aqec;

namespace {

std::vector<double> normalized(const ChannelGrid& g) {
  std::vector<double> w;
  for (double l : g.log_weights()) w.push_back(std::exp(l));
  return w;
}

}  // namespace

TEST(ChannelGrid, EccentricitySamplingMeans) {
  Rng rng(41);
  double m[3] = {0, 0, 0};
  constexpr int kN = 100000;
  for (int i = 0; i < kN; ++i) {
    const Eccentricities e = sample_eccentricities(rng);
    m[0] += e.k1 / kN;
    m[1] += e.k2 / kN;
    m[2] += e.k3 / kN;
  }
  EXPECT_NEAR(m[0], 0.5, 0.01);
  EXPECT_NEAR(m[1], 0.25, 0.01);
  EXPECT_NEAR(m[2], 0.25, 0.01);
}

TEST(ChannelGrid, CandidateInvariants) {
  Rng rng(42);
  const ChannelGrid g = ChannelGrid::sample(5000, rng);
  EXPECT_EQ(g.size(), 5000u);
  EXPECT_EQ(g.active_count(), 5000u);
  for (const auto& c : g.candidates()) {
    EXPECT_NEAR(c.matrix.trace(), 1.0, 1e-12);
    const SymEig e = sym_eig(c.matrix);
    EXPECT_GE(e.values[2], -1e-12);
    std::array<double, 3> want{c.ecc.k1, c.ecc.k2, c.ecc.k3};
    std::sort(want.rbegin(), want.rend());
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(e.values[i], want[i], 1e-10);
  }
  double lse = -INFINITY;
  for (double l : g.log_weights()) lse = std::max(lse, l) + std::log1p(std::exp(-std::abs(lse - l)));
  EXPECT_NEAR(lse, 0.0, 1e-9);
}

TEST(ChannelGrid, ZeroSyndromeIsBitwiseNoOp) {
  Rng rng(43);
  ChannelGrid g = ChannelGrid::sample(100, rng);
  g.update({2, 0, 1}, haar_rotation(rng));
  const auto before = g.log_weights();
  g.update({0, 0, 0}, haar_rotation(rng));
  EXPECT_EQ(g.log_weights(), before);
}

TEST(ChannelGrid, SingleCandidateKeepsUnitWeight) {
  Rng rng(44);
  ChannelGrid g = ChannelGrid::sample(1, rng);
  for (int i = 0; i < 20; ++i) g.update({1, 1, 1}, haar_rotation(rng));
  EXPECT_NEAR(std::exp(g.log_weights()[0]), 1.0, 1e-15);
}

TEST(ChannelGrid, TwoCandidateBayes) {
  ChannelGrid g({ChannelCandidate::make({0.7, 0.2, 0.1}, Rotation3{}),
                 ChannelCandidate::make({0.4, 0.3, 0.3}, rotation_from_quaternion(1, 0, 0, 1))});
  // second candidate, rotated 90 degrees about z, has kx = 0.3
  ASSERT_NEAR(g.candidates()[1].matrix(0, 0), 0.3, 1e-15);
  g.update({1, 0, 0}, Rotation3{});
  const auto w = normalized(g);
  EXPECT_NEAR(w[0], 0.7, 1e-14);
  EXPECT_NEAR(w[1], 0.3, 1e-14);
}

TEST(ChannelGrid, PosteriorIndependentOfTotalRate) {
  // Oracle: full multinomial likelihood including p^w (1-p)^(n-w), at two p values.
  Rng rng(45);
  const int n = 15;
  const ChannelGrid base = ChannelGrid::sample(50, rng);
  std::vector<std::pair<WeightTriple, Rotation3>> obs;
  for (int i = 0; i < 10; ++i) obs.push_back({{i % 3, (i + 1) % 2, i % 4}, haar_rotation(rng)});
  ChannelGrid g = base;
  for (const auto& [t, c] : obs) g.update(t, c);
  const auto w = normalized(g);
  for (double p : {0.001, 0.2}) {
    std::vector<double> logl(base.size(), 0.0);
    for (std::size_t i = 0; i < base.size(); ++i)
      for (const auto& [t, c] : obs) {
        const SymMat3 x = conjugate(c, base.candidates()[i].matrix);
        logl[i] += std::log(static_cast<double>(multinomial(n, t.wx, t.wy, t.wz))) + t.wx * std::log(p * x(0, 0)) +
                   t.wy * std::log(p * x(1, 1)) + t.wz * std::log(p * x(2, 2)) + (n - t.total()) * std::log1p(-p);
      }
    const double mx = *std::max_element(logl.begin(), logl.end());
    double z = 0;
    for (double l : logl) z += std::exp(l - mx);
    for (std::size_t i = 0; i < base.size(); ++i)
      if (g.log_weights()[i] > -40) {
        EXPECT_NEAR(w[i], std::exp(logl[i] - mx) / z, 1e-10);
      }
  }
}

TEST(ChannelGrid, ExhaustionThrows) {
  ChannelGrid g({ChannelCandidate::make({1, 0, 0}, Rotation3{})});
  EXPECT_THROW(g.update({0, 0, 1}, Rotation3{}), GridExhausted);
}

TEST(ChannelGrid, ZeroRateEliminatesCandidate) {
  ChannelGrid g({ChannelCandidate::make({1, 0, 0}, Rotation3{}), ChannelCandidate::make({0.5, 0.3, 0.2}, Rotation3{})});
  g.update({0, 0, 1}, Rotation3{});
  EXPECT_EQ(g.mle_index(), 1u);
  EXPECT_EQ(g.active_count(), 1u);
  EXPECT_TRUE(std::isinf(g.log_weights()[0]));
}

TEST(ChannelGrid, MleControlDiagonalizes) {
  Rng rng(46);
  ChannelGrid g = ChannelGrid::sample(200, rng);
  EXPECT_EQ(g.mle_control().index, 0u);
  g.update({3, 1, 0}, haar_rotation(rng));
  const MleControl m = g.mle_control();
  const SymMat3 d = conjugate(m.control, m.matrix);
  EXPECT_LE(std::sqrt(2 * (d(0, 1) * d(0, 1) + d(0, 2) * d(0, 2) + d(1, 2) * d(1, 2))), 1e-9);
  EXPECT_GE(d(0, 0), d(2, 2) - 1e-12);
  EXPECT_GE(d(2, 2), d(1, 1) - 1e-12);
}

TEST(ChannelGrid, LearnsDominantAxis) {
  // 10^3 error events from ecc (0.7, 0.2, 0.1); the true channel's x-rate under the MLE control.
  Rng rng(47);
  const Eccentricities ecc{0.7, 0.2, 0.1};
  int good = 0;
  constexpr int kRuns = 10;
  for (int run = 0; run < kRuns; ++run) {
    const OrientedPauliChannel ch{0.01, ecc, haar_rotation(rng)};
    ChannelGrid g = ChannelGrid::sample(10000, rng);
    MleControl m = g.mle_control();
    for (int e = 0; e < 1000; ++e) {
      const WeightTriple t = sample_syndrome_nonzero(effective_rates(ch, m.control), 15, rng);
      g.update(t, m.control);
      if (g.mle_index() != m.index) m = g.mle_control();
    }
    if (effective_rates(ch, m.control).px / ch.p >= 0.55) ++good;
  }
  EXPECT_EQ(good, kRuns);
}

TEST(ChannelGrid, PlantedTruthIsFound) {
  const Eccentricities ecc{0.7, 0.2, 0.1};
  int found = 0;
  for (int run = 0; run < 100; ++run) {
    Rng rng(mix64(48, run));
    const Rotation3 q = haar_rotation(rng);
    const OrientedPauliChannel ch{0.01, ecc, q};
    std::vector<ChannelCandidate> c{ChannelCandidate::make(ecc, q)};
    for (int i = 0; i < 999; ++i) c.push_back(sample_candidate(rng));
    ChannelGrid g(std::move(c));
    MleControl m = g.mle_control();
    for (int e = 0; e < 10000 && !(g.active_count() == 1 && m.index == 0); ++e) {
      g.update(sample_syndrome_nonzero(effective_rates(ch, m.control), 15, rng), m.control);
      if (g.mle_index() != m.index) m = g.mle_control();
    }
    if (m.index == 0) ++found;
  }
  EXPECT_GE(found, 90);
}

TEST(ChannelGrid, MinDistance) {
  Rng rng(49);
  const SymMat3 a = oriented(haar_rotation(rng), 0.7, 0.2, 0.1);
  std::vector<ChannelCandidate> c;
  for (int i = 0; i < 10; ++i) c.push_back(sample_candidate(rng));
  c.push_back(ChannelCandidate::make({0.7, 0.2, 0.1}, Rotation3{}));
  const ChannelGrid g(c);
  EXPECT_EQ(g.min_distance(g.candidates().back().matrix), 0.0);
  const ChannelGrid one({c.front()});
  EXPECT_NEAR(one.min_distance(a), frobenius_distance(c.front().matrix.full(), a.full()), 1e-14);
}

TEST(ChannelGrid, EmpiricalDistanceCdfDominatesSpacingBound) {
  const Eccentricities ecc{0.7, 0.2, 0.1};
  const std::vector<double> eps{0.1, 0.2, 0.3};
  const auto rows = grid_spacing_study(ecc, {30000}, 1000, eps, 50);
  for (std::size_t k = 0; k < eps.size(); ++k) {
    EXPECT_GE(rows[0].empirical_cdf[k], rows[0].bound[k]) << "eps " << eps[k];
    // the weaker 6.92 eps^5 small-eps form of the same bound
    EXPECT_GE(rows[0].empirical_cdf[k], std::min(1.0, 6.92 * std::pow(eps[k], 5)));
  }
}
