#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "ierg/error.hpp"
#include "ierg/inner_sampler.hpp"
#include "oracles.hpp"

using namespace ierg;

namespace {

ParamVector fixed_theta3() { return ParamVector(3, {0.4, -0.3, 0.1, 0.9, -0.7, 0.5}); }

oracle::Ising as_ising(const ParamVector& t) { return oracle::from_flat(t.p(), {t.values().begin(), t.values().end()}); }

std::uint64_t state_of(std::span<const std::uint8_t> row) {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < row.size(); ++j) s |= std::uint64_t{row[j]} << j;
  return s;
}

ItemResponseMatrix filled(std::size_t n, std::size_t p, std::uint8_t v) {
  return ItemResponseMatrix(n, p, std::vector<std::uint8_t>(n * p, v));
}

}  // namespace

TEST(AuxChainConfig, ZeroSweepsRejected) {
  AuxChainConfig cfg;
  cfg.sweeps = 0;
  EXPECT_THROW(sample_auxiliary(ItemResponseMatrix(3, 2), ParamVector(2), cfg), ValidationError);
}

TEST(GibbsSweep, ZeroThetaGivesFairIndependentCoins) {
  const std::size_t n = 4000;
  const std::size_t p = 4;
  Rng rng(3);
  const auto y = gibbs_sweep(filled(n, p, 1), ParamVector(p), rng);
  const auto s = sufficient_statistics(y);
  const double sd_item = std::sqrt(n * 0.25);
  const double sd_pair = std::sqrt(n * 0.25 * 0.75);
  for (auto c : s.item_counts()) EXPECT_NEAR(static_cast<double>(c), n * 0.5, 4.5 * sd_item);
  for (auto c : s.pair_counts()) EXPECT_NEAR(static_cast<double>(c), n * 0.25, 4.5 * sd_pair);
}

TEST(GibbsSweep, Deterministic) {
  const auto theta = fixed_theta3();
  Rng a(11);
  Rng b(11);
  const auto x = filled(50, 3, 0);
  EXPECT_EQ(gibbs_sweep(x, theta, a), gibbs_sweep(x, theta, b));
}

TEST(GibbsSweep, RowConfigurationFrequenciesMatchEnumeration) {
  const auto theta = fixed_theta3();
  const auto exact = oracle::row_probabilities(as_ising(theta));
  Rng rng(2024);
  ItemResponseMatrix y(1, 3);
  for (int t = 0; t < 200; ++t) y = gibbs_sweep(y, theta, rng);
  std::vector<double> freq(8, 0.0);
  const int sweeps = 100000;
  for (int t = 0; t < sweeps; ++t) {
    y = gibbs_sweep(y, theta, rng);
    freq[state_of(y.row(0))] += 1.0 / sweeps;
  }
  EXPECT_LT(oracle::total_variation(freq, exact), 0.02);
}

TEST(RowGibbsKernel, SiteRuleMatchesFullConditional) {
  const ParamVector theta(4, {0.3, -1.2, 0.8, 0.0, 1.1, -0.4, 0.2, 2.0, -1.5, 0.6});
  const RowGibbsKernel kernel(theta);
  std::vector<std::uint8_t> row(4);
  std::vector<double> w(4);
  for (std::uint64_t s = 0; s < 16; ++s) {
    for (std::size_t j = 0; j < 4; ++j) row[j] = (s >> j) & 1u;
    kernel.init_weights(row, w);
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(1.0 / (1.0 + w[j]), row_conditional_prob(row, j, theta), 1e-12);
  }
}

TEST(RowGibbsKernel, DetailedBalanceOfSingleSiteUpdates) {
  for (std::size_t p = 2; p <= 3; ++p) {
    for (std::uint32_t seed = 1; seed <= 5; ++seed) {
      std::mt19937 gen(seed);
      std::uniform_real_distribution<double> u(-2.0, 2.0);
      std::vector<double> v(param_count(p));
      for (auto& t : v) t = u(gen);
      const ParamVector theta(p, v);
      const auto pi = oracle::row_probabilities(as_ising(theta));
      const std::uint64_t states = std::uint64_t{1} << p;
      std::vector<std::uint8_t> z(p);
      for (std::size_t j = 0; j < p; ++j) {
        // P_j(z -> z') for the update of site j from its full conditional.
        auto transition = [&](std::uint64_t from, std::uint64_t to) {
          if ((from ^ to) & ~(std::uint64_t{1} << j)) return 0.0;
          for (std::size_t k = 0; k < p; ++k) z[k] = (from >> k) & 1u;
          const double on = row_conditional_prob(z, j, theta);
          return ((to >> j) & 1u) ? on : 1.0 - on;
        };
        for (std::uint64_t a = 0; a < states; ++a) {
          double row_sum = 0.0;
          for (std::uint64_t b = 0; b < states; ++b) {
            row_sum += transition(a, b);
            EXPECT_NEAR(pi[a] * transition(a, b), pi[b] * transition(b, a), 1e-10);
          }
          EXPECT_NEAR(row_sum, 1.0, 1e-12);
        }
      }
    }
  }
}

TEST(SampleAuxiliary, OneSweepAtZeroIgnoresInput) {
  AuxChainConfig cfg{1, AuxInit::ObservedData, 5};
  const auto y = sample_auxiliary(filled(4000, 3, 1), ParamVector(3), cfg);
  const auto s = sufficient_statistics(y);
  for (auto c : s.item_counts()) EXPECT_NEAR(static_cast<double>(c), 2000.0, 4.5 * std::sqrt(1000.0));
}

TEST(SampleAuxiliary, StatisticsMatchExactMomentsWithNSweeps) {
  const auto theta = fixed_theta3();
  const auto probs = oracle::row_probabilities(as_ising(theta));
  // Exact per-row mean and variance of each statistic.
  std::vector<double> mean(6, 0.0);
  std::vector<double> var(6, 0.0);
  for (std::uint64_t s = 0; s < 8; ++s) {
    const std::vector<std::uint8_t> cells{static_cast<std::uint8_t>(s & 1u), static_cast<std::uint8_t>((s >> 1) & 1u),
                                          static_cast<std::uint8_t>((s >> 2) & 1u)};
    const auto t = oracle::suff_stats(cells, 1, 3);
    for (std::size_t i = 0; i < 6; ++i) mean[i] += probs[s] * static_cast<double>(t[i]);
  }
  for (std::uint64_t s = 0; s < 8; ++s) {
    const std::vector<std::uint8_t> cells{static_cast<std::uint8_t>(s & 1u), static_cast<std::uint8_t>((s >> 1) & 1u),
                                          static_cast<std::uint8_t>((s >> 2) & 1u)};
    const auto t = oracle::suff_stats(cells, 1, 3);
    for (std::size_t i = 0; i < 6; ++i) var[i] += probs[s] * std::pow(static_cast<double>(t[i]) - mean[i], 2);
  }

  const std::size_t n = 50;
  const int reps = 10000;
  const auto x = filled(n, 3, 1);
  std::vector<double> acc(6, 0.0);
  for (int r = 0; r < reps; ++r) {
    const auto y = sample_auxiliary(x, theta, {n, AuxInit::ObservedData, static_cast<std::uint64_t>(r)});
    const auto s = sufficient_statistics(y);
    for (std::size_t i = 0; i < 6; ++i) acc[i] += static_cast<double>(s[i]);
  }
  for (std::size_t i = 0; i < 6; ++i) {
    const double se = std::sqrt(n * var[i] / reps);
    EXPECT_NEAR(acc[i] / reps, n * mean[i], 4.5 * se) << "statistic " << i;
  }
}

TEST(SampleAuxiliary, LongChainsForgetTheObservedData) {
  const auto theta = fixed_theta3();
  const std::size_t n = 20;
  const int reps = 3000;
  std::vector<double> tx(reps);
  std::vector<double> ty(reps);
  for (int r = 0; r < reps; ++r) {
    const auto x = sample_exact_rows(theta, n, 1000 + r);
    const auto y = sample_auxiliary(x, theta, {40, AuxInit::ObservedData, static_cast<std::uint64_t>(r)});
    tx[r] = static_cast<double>(sufficient_statistics(x)[3]);
    ty[r] = static_cast<double>(sufficient_statistics(y)[3]);
  }
  const double mx = std::accumulate(tx.begin(), tx.end(), 0.0) / reps;
  const double my = std::accumulate(ty.begin(), ty.end(), 0.0) / reps;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int r = 0; r < reps; ++r) {
    sxy += (tx[r] - mx) * (ty[r] - my);
    sxx += (tx[r] - mx) * (tx[r] - mx);
    syy += (ty[r] - my) * (ty[r] - my);
  }
  EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 0.08);
}

TEST(SampleAuxiliary, RowsFollowTheirOwnStreams) {
  const auto theta = fixed_theta3();
  const auto x = sample_exact_rows(theta, 30, 9);
  const AuxChainConfig cfg{7, AuxInit::ObservedData, 77};
  const auto y = sample_auxiliary(x, theta, cfg);
  const RowGibbsKernel kernel(theta);
  std::vector<std::size_t> perm(30);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937(4));
  std::vector<double> w(3);
  for (std::size_t r = 0; r < 30; ++r) {
    const std::size_t src = perm[r];
    std::vector<std::uint8_t> row(x.row(src).begin(), x.row(src).end());
    run_row_chain(kernel, row, w, src, cfg);
    EXPECT_TRUE(std::equal(row.begin(), row.end(), y.row(src).begin()));
  }
}

TEST(SampleAuxiliary, ThreadCountDoesNotChangeOutput) {
  const ParamVector theta(6, std::vector<double>(param_count(6), 0.2));
  const auto x = sample_exact_rows(theta, 3000, 1);
  const AuxChainConfig cfg{5, AuxInit::Random, 3};
  set_thread_count(1);
  const auto a = sample_auxiliary(x, theta, cfg);
  set_thread_count(4);
  const auto b = sample_auxiliary(x, theta, cfg);
  set_thread_count(0);
  EXPECT_EQ(a, b);
}

TEST(SampleAuxiliary, DimensionMismatchThrows) {
  EXPECT_THROW(sample_auxiliary(ItemResponseMatrix(3, 3), ParamVector(4), {}), ValidationError);
}

TEST(ExactRows, UniformPatternsAtZero) {
  const auto y = sample_exact_rows(ParamVector(2), 100000, 12);
  std::vector<double> counts(4, 0.0);
  for (std::size_t i = 0; i < y.n(); ++i) counts[state_of(y.row(i))] += 1.0;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - 25000.0) * (c - 25000.0) / 25000.0;
  EXPECT_LT(chi2, 16.27);  // 0.999 quantile, 3 degrees of freedom
}

TEST(ExactRows, SaturatedEasiness) {
  std::vector<double> v(param_count(4), 0.0);
  for (std::size_t j = 0; j < 4; ++j) v[j] = 10.0;
  const auto y = sample_exact_rows(ParamVector(4, v), 200, 3);
  const auto s = sufficient_statistics(y);
  for (auto c : s.item_counts()) EXPECT_GE(c, 197);
}

TEST(ExactRows, FrequenciesMatchEnumeration) {
  const auto theta = fixed_theta3();
  const auto exact = oracle::row_probabilities(as_ising(theta));
  const auto y = sample_exact_rows(theta, 1000000, 42);
  std::vector<double> freq(8, 0.0);
  for (std::size_t i = 0; i < y.n(); ++i) freq[state_of(y.row(i))] += 1e-6;
  EXPECT_LT(oracle::total_variation(freq, exact), 0.01);
}

TEST(ExactRows, LimitEnforced) {
  EXPECT_THROW(sample_exact_rows(ParamVector(21), 1, 1), EnumerationLimitError);
  EXPECT_THROW(ExactRowSampler(ParamVector(6), 5), EnumerationLimitError);
}

TEST(ExactRows, Deterministic) {
  EXPECT_EQ(sample_exact_rows(fixed_theta3(), 100, 5), sample_exact_rows(fixed_theta3(), 100, 5));
  EXPECT_NE(sample_exact_rows(fixed_theta3(), 100, 5), sample_exact_rows(fixed_theta3(), 100, 6));
}
