#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "ierg/error.hpp"
#include "ierg/inner_sampler.hpp"
#include "ierg/sampler.hpp"
#include "oracles.hpp"

using namespace ierg;

namespace {

ParamVector theta4() {
  return ParamVector(4, {0.3, -0.6, 0.2, 0.5, 0.7, -0.4, 0.0, 0.9, -0.8, 0.3});
}

ChainRecord record_for(const ParamVector& t, double sigma2 = 0.05, double omega = 4.0) {
  ChainRecord rec;
  rec.theta = t;
  rec.selection.lambda.assign(t.q(), 1);
  rec.selection.sigma2 = sigma2;
  rec.selection.omega = omega;
  return rec;
}

std::vector<double> histogram(const std::vector<double>& draws, const std::vector<double>& edges) {
  std::vector<double> h(edges.size() - 1, 0.0);
  for (double v : draws) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    if (it == edges.begin() || it == edges.end()) continue;
    h[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0;
  }
  for (auto& v : h) v /= static_cast<double>(draws.size());
  return h;
}

std::vector<double> linspace(double lo, double hi, std::size_t bins) {
  std::vector<double> e(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) e[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  return e;
}

}  // namespace

TEST(SpikeSlabPrior, ModeOfSlab) {
  const double s2 = 0.04, w = 3.0;
  EXPECT_NEAR(spike_slab_log_prior(0.0, true, s2, w), -0.5 * std::log(2 * std::numbers::pi * w * w * s2), 1e-14);
}

TEST(SpikeSlabPrior, SpikeClosedForm) {
  EXPECT_NEAR(spike_slab_log_prior(0.5, false, 0.25, 7.0), std::log(oracle::normal_pdf(0.5, 0.25)), 1e-14);
}

TEST(SpikeSlabPrior, MatchesIndependentPdf) {
  for (double t : {-2.0, -0.3, 0.0, 0.1, 1.7}) {
    for (double s2 : {0.01, 0.1, 0.25}) {
      for (double w : {1.0, 2.5, 40.0}) {
        EXPECT_NEAR(std::exp(spike_slab_log_prior(t, true, s2, w)), oracle::normal_pdf(t, w * w * s2), 1e-12);
        EXPECT_NEAR(std::exp(spike_slab_log_prior(t, false, s2, w)), oracle::normal_pdf(t, s2), 1e-12);
      }
    }
  }
}

TEST(InclusionProbability, AtZero) {
  for (double w : {1.0, 2.0, 9.5}) EXPECT_NEAR(inclusion_probability(0.0, 0.1, w), 1.0 / (1.0 + w), 1e-14);
}

TEST(InclusionProbability, TailGoesToOne) {
  EXPECT_GT(inclusion_probability(5.0, 0.05, 3.0), 1.0 - 1e-12);
  EXPECT_EQ(inclusion_probability(100.0, 0.05, 3.0), 1.0);
}

TEST(InclusionProbability, HandCodedRatio) {
  const double a = oracle::normal_pdf(0.4, 9.0 * 0.04);
  const double b = oracle::normal_pdf(0.4, 0.04);
  EXPECT_NEAR(inclusion_probability(0.4, 0.04, 3.0), a / (a + b), 1e-12);
}

TEST(UpdateLambda, FrequencyMatchesProbability) {
  Rng rng(1);
  SelectionState s{{1}, 0.04, 3.0};
  const double prob = inclusion_probability(0.3, 0.04, 3.0);
  int ones = 0;
  const int trials = 200000;
  for (int t = 0; t < trials; ++t) ones += update_lambda_coordinate(0.3, s, rng);
  EXPECT_NEAR(ones / static_cast<double>(trials), prob, 4.5 * std::sqrt(prob * (1 - prob) / trials));
}

TEST(DmhLogRatio, DegenerateProposalIsZero) {
  EXPECT_EQ(dmh_log_ratio(0.7, 0.7, 12, 30, true, 0.1, 3.0), 0.0);
}

TEST(DmhLogRatio, PriorFactorFromZero) {
  const double t = 0.6, s2 = 0.05, w = 2.0;
  EXPECT_NEAR(dmh_log_ratio(0.0, t, 10, 10, true, s2, w), -t * t / (2 * w * w * s2), 1e-14);
}

TEST(DmhKernel, DegenerateProposalAlwaysAccepted) {
  const auto theta = theta4();
  const auto x = sample_exact_rows(theta, 40, 1);
  DmhKernel kernel(x, theta, 2);
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto upd = kernel.update(s % theta.q(), theta[s % theta.q()], true, 0.1, 3.0, s, 0.0);
    EXPECT_TRUE(upd.accepted);
  }
}

TEST(DmhKernel, AuxiliaryStatisticMatchesSampleAuxiliary) {
  auto theta = theta4();
  const auto x = sample_exact_rows(theta, 60, 2);
  for (AuxInit init : {AuxInit::ObservedData, AuxInit::Random}) {
    DmhKernel kernel(x, theta, 3, init);
    std::mt19937 gen(5);
    std::normal_distribution<double> z(0.0, 0.5);
    for (int step = 0; step < 60; ++step) {
      const std::size_t i = static_cast<std::size_t>(step) % theta.q();
      const double proposed = kernel.theta()[i] + z(gen);
      const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(step);
      ParamVector moved = kernel.theta();
      moved[i] = proposed;
      const auto y = sample_auxiliary(x, moved, {3, init, seed});
      ASSERT_EQ(kernel.auxiliary_statistic(i, proposed, seed), sufficient_statistics(y)[i]) << "step " << step;
      if (step % 3 == 0) kernel.set(i, proposed);
    }
  }
}

TEST(DmhKernel, CachedWeightsSurviveManyUpdates) {
  auto theta = theta4();
  const auto x = sample_exact_rows(theta, 50, 3);
  DmhKernel kernel(x, theta, 2);
  std::mt19937 gen(8);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int step = 0; step < 2000; ++step) kernel.set(static_cast<std::size_t>(step) % theta.q(), z(gen));
  const ParamVector current = kernel.theta();
  const auto a = kernel.auxiliary_statistic(4, current[4] + 0.1, 99);
  kernel.refresh();
  EXPECT_EQ(kernel.auxiliary_statistic(4, current[4] + 0.1, 99), a);
}

TEST(DmhKernel, KappaCancellation) {
  std::mt19937 gen(17);
  std::normal_distribution<double> z(0.0, 0.4);
  for (std::size_t p = 2; p <= 4; ++p) {
    std::vector<double> v(param_count(p));
    for (auto& t : v) t = z(gen);
    const ParamVector theta(p, v);
    const auto x = sample_exact_rows(theta, 30, p);
    DmhKernel kernel(x, theta, 2);
    const auto sx = sufficient_statistics(x);
    for (int k = 0; k < 200; ++k) {
      const std::size_t i = static_cast<std::size_t>(k) % theta.q();
      const double proposed = theta[i] + z(gen);
      const auto seed = static_cast<std::uint64_t>(k);
      const auto upd = kernel.update(i, proposed, k % 2 == 0, 0.05, 3.0, seed, -std::numeric_limits<double>::infinity());
      kernel.set(i, theta[i]);
      ParamVector moved = theta;
      moved[i] = proposed;
      const auto y = sample_auxiliary(x, moved, {2, AuxInit::ObservedData, seed});
      const auto sy = sufficient_statistics(y);
      // Full exchange ratio with every kappa term evaluated.
      const double full = log_likelihood_exact(sx, moved) + log_likelihood_exact(sy, theta) -
                          log_likelihood_exact(sx, theta) - log_likelihood_exact(sy, moved) +
                          spike_slab_log_prior(proposed, k % 2 == 0, 0.05, 3.0) -
                          spike_slab_log_prior(theta[i], k % 2 == 0, 0.05, 3.0);
      EXPECT_NEAR(upd.log_ratio, full, 1e-10);
    }
  }
}

TEST(DmhUpdateCoordinate, OnlyCoordinateChanges) {
  const auto theta = theta4();
  const auto x = sample_exact_rows(theta, 40, 4);
  SamplerConfig cfg;
  cfg.aux_sweeps = 2;
  Rng rng(3);
  const auto rec = record_for(theta);
  for (std::size_t i = 0; i < theta.q(); ++i) {
    const auto upd = dmh_update_coordinate(i, rec, x, cfg, rng);
    if (!upd.accepted) EXPECT_EQ(upd.value, theta[i]);
  }
  EXPECT_THROW(dmh_update_coordinate(theta.q(), rec, x, cfg, rng), ValidationError);
}

TEST(UpdateSigma2, NeverLeavesSupport) {
  const ParamVector theta(2, {0.1, -0.2, 0.05});
  SelectionState s{{0, 0, 1}, 0.011, 2.0};
  SamplerConfig cfg;
  cfg.proposal_sd_sigma2 = 1.0;
  Rng rng(4);
  for (int t = 0; t < 20000; ++t) {
    const auto u = update_sigma2(s, theta, cfg, rng);
    ASSERT_GE(u.value, kSigma2Min);
    ASSERT_LE(u.value, kSigma2Max);
    s.sigma2 = u.value;
  }
  EXPECT_EQ(sigma2_log_target(theta.values(), s.lambda, 0.3, 2.0), -std::numeric_limits<double>::infinity());
  EXPECT_EQ(sigma2_log_target(theta.values(), s.lambda, 0.005, 2.0), -std::numeric_limits<double>::infinity());
}

TEST(UpdateSigma2, IdenticalProposalAccepted) {
  const ParamVector theta(2, {0.1, -0.2, 0.05});
  SelectionState s{{1, 0, 1}, 0.1, 2.0};
  SamplerConfig cfg;
  cfg.proposal_sd_sigma2 = 1e-300;
  Rng rng(5);
  for (int t = 0; t < 1000; ++t) EXPECT_TRUE(update_sigma2(s, theta, cfg, rng).accepted);
}

TEST(UpdateSigma2, MatchesQuadraturePosterior) {
  const ParamVector theta(1, {0.0});
  SelectionState s{{0}, 0.1, 2.0};
  SamplerConfig cfg;
  cfg.proposal_sd_sigma2 = 0.08;
  Rng rng(6);
  std::vector<double> draws;
  for (int t = 0; t < 1000000; ++t) {
    s.sigma2 = update_sigma2(s, theta, cfg, rng).value;
    if (t >= 1000) draws.push_back(s.sigma2);
  }
  const auto edges = linspace(kSigma2Min, kSigma2Max, 12);
  const auto exact = oracle::bin_masses(
      [](double v) { return std::log(oracle::normal_pdf(0.0, v)) - 2.0 * std::log(v); }, edges);
  EXPECT_LT(oracle::total_variation(histogram(draws, edges), exact), 0.02);
}

TEST(UpdateOmega, BelowOneRejectedAndIdenticalAccepted) {
  const ParamVector theta(1, {0.5});
  SelectionState s{{1}, 0.04, 1.01};
  SamplerConfig cfg;
  cfg.proposal_sd_omega = 5.0;
  Rng rng(7);
  for (int t = 0; t < 20000; ++t) {
    s.omega = update_omega(s, theta, cfg, rng).value;
    ASSERT_GE(s.omega, 1.0);
  }
  EXPECT_EQ(omega_log_target(theta.values(), s.lambda, 0.04, 0.99), -std::numeric_limits<double>::infinity());
  cfg.proposal_sd_omega = 1e-300;
  for (int t = 0; t < 1000; ++t) EXPECT_TRUE(update_omega(s, theta, cfg, rng).accepted);
}

TEST(UpdateOmega, MatchesQuadraturePosterior) {
  const double t0 = 0.5, s2 = 0.04;
  const ParamVector theta(1, {t0});
  SelectionState s{{1}, s2, 5.0};
  SamplerConfig cfg;
  cfg.proposal_sd_omega = 60.0;
  Rng rng(8);
  std::vector<double> draws;
  for (int t = 0; t < 1000000; ++t) {
    s.omega = update_omega(s, theta, cfg, rng).value;
    if (t >= 1000) draws.push_back(s.omega);
  }
  std::vector<double> edges{1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024, 4000};
  const auto exact = oracle::bin_masses(
      [&](double w) { return std::log(oracle::normal_pdf(t0, w * w * s2)) - kOmegaRate * (w - 1.0); }, edges, 2000);
  EXPECT_LT(oracle::total_variation(histogram(draws, edges), exact), 0.02);
}

TEST(SamplerConfig, Validation) {
  SamplerConfig cfg;
  cfg.iterations = 10;
  cfg.burn_in = 10;
  EXPECT_THROW(validate(cfg), ValidationError);
  cfg.burn_in = 2;
  cfg.proposal_sd_theta = 0.0;
  EXPECT_THROW(validate(cfg), ValidationError);
  cfg.proposal_sd_theta = 0.2;
  cfg.aux_sweeps = 0;
  EXPECT_THROW(validate(cfg), ValidationError);
}

TEST(SelectionState, Validation) {
  EXPECT_THROW(validate(SelectionState{{1}, 0.3, 2.0}), ValidationError);
  EXPECT_THROW(validate(SelectionState{{1}, 0.1, 0.9}), ValidationError);
  EXPECT_THROW(validate(SelectionState{{2}, 0.1, 2.0}), ValidationError);
  EXPECT_NO_THROW(validate(SelectionState{{0, 1}, 0.01, 1.0}));
}

TEST(InitialState, FollowsStartingDistribution) {
  SamplerConfig cfg;
  Rng rng(9);
  const auto rec = initial_state(5, cfg, rng);
  EXPECT_EQ(rec.theta.q(), 15u);
  for (double t : rec.theta.values()) {
    EXPECT_GE(t, -kInitThetaBound);
    EXPECT_LE(t, kInitThetaBound);
  }
  for (auto l : rec.selection.lambda) EXPECT_EQ(l, 1);
  EXPECT_NO_THROW(validate(rec.selection));
}

TEST(RunChain, DeterministicReplayAndInvariants) {
  const auto x = sample_exact_rows(theta4(), 40, 10);
  SamplerConfig cfg;
  cfg.iterations = 120;
  cfg.burn_in = 20;
  cfg.aux_sweeps = 2;
  cfg.seed = 42;
  const auto a = run_chain(x, cfg);
  const auto b = run_chain(x, cfg);
  ASSERT_EQ(a.records.size(), 100u);
  EXPECT_EQ(a.records, b.records);
  for (const auto& rec : a.records) {
    EXPECT_NO_THROW(validate(rec.selection));
    EXPECT_EQ(rec.theta.q(), 10u);
  }
  EXPECT_EQ(a.records.front().iter, 20u);
  EXPECT_EQ(a.records.back().iter, 119u);
}

TEST(RunChain, ThreadCountDoesNotChangeChain) {
  const auto x = sample_exact_rows(theta4(), 400, 10);
  SamplerConfig cfg;
  cfg.iterations = 30;
  cfg.burn_in = 10;
  cfg.aux_sweeps = 50;
  set_thread_count(1);
  const auto a = run_chain(x, cfg);
  set_thread_count(3);
  const auto b = run_chain(x, cfg);
  set_thread_count(0);
  EXPECT_EQ(a.records, b.records);
}

TEST(RunChain, ExemptBetaKeepsEasinessInSlab) {
  const auto x = sample_exact_rows(theta4(), 40, 11);
  SamplerConfig cfg;
  cfg.iterations = 60;
  cfg.burn_in = 10;
  cfg.aux_sweeps = 1;
  cfg.exempt_beta = true;
  const auto r = run_chain(x, cfg);
  for (const auto& rec : r.records) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(rec.selection.lambda[j], 1);
  }
}

TEST(RunChain, CallbacksSeeEveryRecord) {
  const auto x = sample_exact_rows(theta4(), 30, 12);
  SamplerConfig cfg;
  cfg.iterations = 50;
  cfg.burn_in = 10;
  cfg.aux_sweeps = 1;
  cfg.checkpoint_every = 20;
  std::size_t records = 0;
  std::vector<std::size_t> checkpoints;
  std::size_t progress = 0;
  ChainCallbacks cb;
  cb.on_record = [&](const ChainRecord&) { ++records; };
  cb.on_checkpoint = [&](std::size_t it) { checkpoints.push_back(it); };
  cb.on_progress = [&](const ChainProgress& pr) {
    ++progress;
    EXPECT_GE(pr.acceptance_rate, 0.0);
    EXPECT_LE(pr.acceptance_rate, 1.0);
  };
  cb.progress_every = 10;
  const auto r = run_chain(x, cfg, cb);
  EXPECT_EQ(records, r.records.size());
  EXPECT_EQ(checkpoints, (std::vector<std::size_t>{19, 39}));
  EXPECT_EQ(progress, 5u);
}

TEST(RunChain, AdaptiveStopEndsEarly) {
  const auto x = sample_exact_rows(theta4(), 30, 13);
  SamplerConfig cfg;
  cfg.iterations = 5000;
  cfg.burn_in = 10;
  cfg.aux_sweeps = 1;
  cfg.adaptive_stop = true;
  cfg.mcse_target = 100.0;
  cfg.mcse_check_every = 100;
  const auto r = run_chain(x, cfg);
  EXPECT_TRUE(r.stopped_early);
  EXPECT_EQ(r.records.size(), 100u);
}

TEST(RunChain, MemoryBoundAndEnumerationLimit) {
  const auto x = sample_exact_rows(theta4(), 10, 14);
  SamplerConfig cfg;
  cfg.iterations = 1000;
  cfg.burn_in = 0;
  cfg.max_stored_values = 5000;
  EXPECT_THROW(run_chain(x, cfg), ValidationError);
  SamplerConfig ex;
  ex.likelihood = LikelihoodMode::Exact;
  ex.enumeration_limit = 3;
  EXPECT_THROW(run_chain(x, ex), EnumerationLimitError);
}

TEST(RunChain, ExactModeMatchesFullRatioUpdates) {
  const auto x = sample_exact_rows(theta4(), 25, 15);
  SamplerConfig cfg;
  cfg.iterations = 40;
  cfg.burn_in = 5;
  cfg.likelihood = LikelihoodMode::Exact;
  const auto r = run_chain(x, cfg);
  EXPECT_EQ(r.records.size(), 35u);
}

TEST(PosteriorSummary, ConstantChain) {
  const auto t = theta4();
  std::vector<ChainRecord> recs(5, record_for(t));
  const auto est = posterior_summary(recs);
  for (std::size_t i = 0; i < t.q(); ++i) {
    EXPECT_DOUBLE_EQ(est.theta_hat[i], t[i]);
    EXPECT_EQ(est.pip[i], 1.0);
  }
}

TEST(PosteriorSummary, HalfInclusionIsKept) {
  auto a = record_for(theta4());
  auto b = a;
  std::fill(b.selection.lambda.begin(), b.selection.lambda.end(), 0);
  const std::vector<ChainRecord> recs{a, b, a, b};
  const auto est = posterior_summary(recs);
  for (std::size_t i = 0; i < est.pip.size(); ++i) {
    EXPECT_EQ(est.pip[i], 0.5);
    EXPECT_DOUBLE_EQ(est.theta_hat[i], theta4()[i]);
  }
}

TEST(PosteriorSummary, MatchesNaiveRecomputation) {
  std::mt19937 gen(3);
  std::normal_distribution<double> z(0.0, 1.0);
  std::bernoulli_distribution coin(0.4);
  std::vector<ChainRecord> recs;
  for (int t = 0; t < 37; ++t) {
    std::vector<double> v(6);
    for (auto& e : v) e = z(gen);
    ChainRecord rec = record_for(ParamVector(3, v));
    for (auto& l : rec.selection.lambda) l = coin(gen);
    recs.push_back(rec);
  }
  const auto est = posterior_summary(recs);
  for (std::size_t i = 0; i < 6; ++i) {
    double mean = 0.0, pip = 0.0;
    for (const auto& r : recs) {
      mean += r.theta[i];
      pip += r.selection.lambda[i];
    }
    mean /= 37.0;
    pip /= 37.0;
    EXPECT_NEAR(est.pip[i], pip, 1e-15);
    EXPECT_NEAR(est.theta_hat[i], pip < 0.5 ? 0.0 : mean, 1e-14);
    if (est.theta_hat[i] != 0.0) EXPECT_GE(est.pip[i], 0.5);
  }
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(est.signed_adjacency(j, j), 0);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(est.signed_adjacency(j, k), est.signed_adjacency(k, j));
  }
}

TEST(PosteriorSummary, EmptyThrows) {
  EXPECT_THROW(posterior_summary(std::span<const ChainRecord>{}), ValidationError);
}

TEST(SignedAdjacency, SignsOfInteractions) {
  ParamVector t(3);
  t.set_gamma(0, 1, 0.2);
  t.set_gamma(1, 2, -3.0);
  const auto a = signed_adjacency(t);
  EXPECT_EQ(a(0, 1), 1);
  EXPECT_EQ(a(1, 0), 1);
  EXPECT_EQ(a(1, 2), -1);
  EXPECT_EQ(a(0, 2), 0);
  EXPECT_EQ(a(0, 0), 0);
}
