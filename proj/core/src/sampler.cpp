#include "ierg/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ierg/diagnostics.hpp"
#include "ierg/error.hpp"

#ifdef IERG_HAVE_OPENMP
#include <omp.h>
#endif

namespace ierg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Cell updates per auxiliary draw below which rows run on one thread.
constexpr std::size_t kParallelRowWork = 1u << 16;

double normal_draw(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

double uniform_draw(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// log of a uniform in (0, 1], so log(0) never occurs.
double log_uniform_draw(Rng& rng) { return std::log1p(-uniform_draw(rng)); }

}  // namespace

void validate(const SelectionState& s) {
  if (!(s.sigma2 >= kSigma2Min && s.sigma2 <= kSigma2Max)) {
    throw ValidationError("sigma2 = " + std::to_string(s.sigma2) + " outside its support [0.01, 0.25]");
  }
  if (!(s.omega >= 1.0) || !std::isfinite(s.omega)) {
    throw ValidationError("omega = " + std::to_string(s.omega) + " outside its support [1, inf)");
  }
  for (auto l : s.lambda) {
    if (l > 1) throw ValidationError("inclusion indicator must be 0 or 1");
  }
}

void validate(const SamplerConfig& cfg) {
  if (cfg.iterations == 0) throw ValidationError("iterations must be positive");
  if (cfg.burn_in >= cfg.iterations) {
    throw ValidationError("burn-in (" + std::to_string(cfg.burn_in) + ") must be smaller than iterations (" +
                          std::to_string(cfg.iterations) + ")");
  }
  if (!(cfg.proposal_sd_theta > 0) || !(cfg.proposal_sd_sigma2 > 0) || !(cfg.proposal_sd_omega > 0)) {
    throw ValidationError("proposal standard deviations must be positive");
  }
  if (cfg.aux_sweeps && *cfg.aux_sweeps < 1) throw ValidationError("auxiliary sweeps must be at least 1");
  if (!(cfg.mcse_target > 0)) throw ValidationError("MCSE target must be positive");
  if (cfg.adapt_window == 0) throw ValidationError("adaptation window must be positive");
  if (cfg.mcse_check_every == 0) throw ValidationError("MCSE check interval must be positive");
}

double log_normal_pdf(double x, double variance) {
  return -0.5 * std::log(2.0 * std::numbers::pi * variance) - 0.5 * x * x / variance;
}

double spike_slab_log_prior(double theta_i, bool lambda_i, double sigma2, double omega) {
  return log_normal_pdf(theta_i, lambda_i ? omega * omega * sigma2 : sigma2);
}

double inclusion_probability(double theta_i, double sigma2, double omega) {
  // Prior odds are 1 under Bernoulli(1/2).
  const double log_a = log_normal_pdf(theta_i, omega * omega * sigma2);
  const double log_b = log_normal_pdf(theta_i, sigma2);
  return logistic(log_a - log_b);
}

bool update_lambda_coordinate(double theta_i, const SelectionState& state, Rng& rng) {
  return uniform_draw(rng) < inclusion_probability(theta_i, state.sigma2, state.omega);
}

double dmh_log_ratio(double current, double proposed, double stat_x, double stat_y, bool lambda_i, double sigma2,
                     double omega) {
  return (proposed - current) * (stat_x - stat_y) + spike_slab_log_prior(proposed, lambda_i, sigma2, omega) -
         spike_slab_log_prior(current, lambda_i, sigma2, omega);
}

// --- DmhKernel -------------------------------------------------------------

DmhKernel::DmhKernel(const ItemResponseMatrix& x, ParamVector theta, std::size_t sweeps, AuxInit init)
    : x_(x),
      theta_(std::move(theta)),
      sweeps_(sweeps),
      init_(init),
      stats_x_(sufficient_statistics(x)),
      kernel_(theta_),
      weights_(x.n() * x.p()) {
  if (theta_.p() != x.p()) {
    throw ValidationError("parameters for p=" + std::to_string(theta_.p()) + " do not match data with p=" +
                          std::to_string(x.p()));
  }
  if (sweeps_ < 1) throw ValidationError("auxiliary sweeps must be at least 1");
  refresh();
}

void DmhKernel::refresh() {
  const std::size_t p = x_.p();
  for (std::size_t r = 0; r < x_.n(); ++r) {
    kernel_.init_weights(x_.row(r), std::span<double>(weights_.data() + r * p, p));
  }
}

std::int64_t DmhKernel::auxiliary_statistic(std::size_t i, double proposed, std::uint64_t aux_seed) {
  const std::size_t n = x_.n();
  const std::size_t p = x_.p();
  const double shift = std::exp(-(proposed - theta_[i]));
  const bool is_pair = theta_.is_interaction(i);
  std::size_t j = i;
  std::size_t k = i;
  if (is_pair) std::tie(j, k) = pair_from_index(i - p, p);

  kernel_.set(i, proposed);
  const AuxChainConfig cfg{sweeps_, init_, aux_seed};
  const bool parallel = thread_count() > 1 && n * p * sweeps_ >= kParallelRowWork;
  std::int64_t stat = 0;
#ifdef IERG_HAVE_OPENMP
#pragma omp parallel num_threads(thread_count()) if (parallel) reduction(+ : stat)
#endif
  {
    std::vector<std::uint8_t> row(p);
    std::vector<double> weights(p);
#ifdef IERG_HAVE_OPENMP
#pragma omp for schedule(static)
#endif
    for (std::ptrdiff_t rs = 0; rs < static_cast<std::ptrdiff_t>(n); ++rs) {
      const auto r = static_cast<std::size_t>(rs);
      const auto xr = x_.row(r);
      std::copy(xr.begin(), xr.end(), row.begin());
      if (init_ == AuxInit::Random) {
        run_row_chain(kernel_, row, weights, r, cfg);
      } else {
        std::copy_n(weights_.data() + r * p, p, weights.begin());
        if (!is_pair) {
          weights[i] *= shift;
        } else {
          if (xr[k]) weights[j] *= shift;
          if (xr[j]) weights[k] *= shift;
        }
        StreamRng eng = make_stream(aux_seed, r);
        for (std::size_t s = 0; s < sweeps_; ++s) kernel_.sweep(row, weights, eng);
      }
      stat += is_pair ? (row[j] & row[k]) : row[i];
    }
  }
  (void)parallel;
  kernel_.set(i, theta_[i]);
  return stat;
}

void DmhKernel::set(std::size_t i, double value) {
  const std::size_t n = x_.n();
  const std::size_t p = x_.p();
  const double shift = std::exp(-(value - theta_[i]));
  theta_[i] = value;
  kernel_.set(i, value);
  if (i < p) {
    for (std::size_t r = 0; r < n; ++r) weights_[r * p + i] *= shift;
    return;
  }
  const auto [j, k] = pair_from_index(i - p, p);
  for (std::size_t r = 0; r < n; ++r) {
    if (x_(r, k)) weights_[r * p + j] *= shift;
    if (x_(r, j)) weights_[r * p + k] *= shift;
  }
}

CoordinateUpdate DmhKernel::update(std::size_t i, double proposed, bool lambda_i, double sigma2, double omega,
                                   std::uint64_t aux_seed, double log_u) {
  const double current = theta_[i];
  const auto stat_y = auxiliary_statistic(i, proposed, aux_seed);
  CoordinateUpdate out;
  out.log_ratio = dmh_log_ratio(current, proposed, static_cast<double>(stats_x_[i]), static_cast<double>(stat_y),
                                lambda_i, sigma2, omega);
  out.accepted = log_u <= out.log_ratio;
  if (out.accepted) set(i, proposed);
  out.value = theta_[i];
  return out;
}

CoordinateUpdate dmh_update_coordinate(std::size_t i, const ChainRecord& state, const ItemResponseMatrix& x,
                                       const SamplerConfig& cfg, Rng& rng) {
  if (i >= state.theta.q()) throw ValidationError("coordinate index out of range");
  const double proposed = state.theta[i] + cfg.proposal_sd_theta * normal_draw(rng);
  const std::uint64_t aux_seed = rng();
  const double log_u = log_uniform_draw(rng);
  DmhKernel kernel(x, state.theta, cfg.aux_sweeps.value_or(x.n()), cfg.aux_init);
  return kernel.update(i, proposed, state.selection.lambda.at(i) != 0, state.selection.sigma2,
                       state.selection.omega, aux_seed, log_u);
}

CoordinateUpdate exact_update_coordinate(std::size_t i, const ChainRecord& state, const SuffStats& stats_x,
                                         double proposal_sd, std::size_t enumeration_limit, Rng& rng) {
  const double current = state.theta[i];
  const double proposed = current + proposal_sd * normal_draw(rng);
  const double log_u = log_uniform_draw(rng);
  ParamVector moved = state.theta;
  moved[i] = proposed;
  const bool lambda_i = state.selection.lambda.at(i) != 0;
  CoordinateUpdate out;
  out.log_ratio = log_likelihood_exact(stats_x, moved, enumeration_limit) -
                  log_likelihood_exact(stats_x, state.theta, enumeration_limit) +
                  spike_slab_log_prior(proposed, lambda_i, state.selection.sigma2, state.selection.omega) -
                  spike_slab_log_prior(current, lambda_i, state.selection.sigma2, state.selection.omega);
  out.accepted = log_u <= out.log_ratio;
  out.value = out.accepted ? proposed : current;
  return out;
}

// --- hyperparameters ---------------------------------------------------------

double sigma2_log_target(std::span<const double> theta, std::span<const std::uint8_t> lambda, double sigma2,
                         double omega) {
  if (!(sigma2 >= kSigma2Min && sigma2 <= kSigma2Max)) return kNegInf;
  double acc = -2.0 * std::log(sigma2);
  for (std::size_t i = 0; i < theta.size(); ++i) acc += spike_slab_log_prior(theta[i], lambda[i], sigma2, omega);
  return acc;
}

double omega_log_target(std::span<const double> theta, std::span<const std::uint8_t> lambda, double sigma2,
                        double omega) {
  if (!(omega >= 1.0) || !std::isfinite(omega)) return kNegInf;
  double acc = -kOmegaRate * (omega - 1.0);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (lambda[i]) acc += spike_slab_log_prior(theta[i], true, sigma2, omega);
  }
  return acc;
}

HyperUpdate update_sigma2(const SelectionState& state, const ParamVector& theta, const SamplerConfig& cfg, Rng& rng) {
  const double proposed = state.sigma2 + cfg.proposal_sd_sigma2 * normal_draw(rng);
  const double log_u = log_uniform_draw(rng);
  if (!(proposed >= kSigma2Min && proposed <= kSigma2Max)) return {state.sigma2, false};
  const double log_ratio = sigma2_log_target(theta.values(), state.lambda, proposed, state.omega) -
                           sigma2_log_target(theta.values(), state.lambda, state.sigma2, state.omega);
  if (log_u <= log_ratio) return {proposed, true};
  return {state.sigma2, false};
}

HyperUpdate update_omega(const SelectionState& state, const ParamVector& theta, const SamplerConfig& cfg, Rng& rng) {
  const double proposed = state.omega + cfg.proposal_sd_omega * normal_draw(rng);
  const double log_u = log_uniform_draw(rng);
  if (!(proposed >= 1.0)) return {state.omega, false};
  const double log_ratio = omega_log_target(theta.values(), state.lambda, state.sigma2, proposed) -
                           omega_log_target(theta.values(), state.lambda, state.sigma2, state.omega);
  if (log_u <= log_ratio) return {proposed, true};
  return {state.omega, false};
}

// --- chain -------------------------------------------------------------------

ChainRecord initial_state(std::size_t p, const SamplerConfig& cfg, Rng& rng) {
  const std::size_t q = param_count(p);
  ChainRecord rec;
  if (cfg.initial_theta) {
    if (cfg.initial_theta->p() != p) throw ValidationError("initial theta has the wrong number of items");
    rec.theta = *cfg.initial_theta;
  } else {
    std::vector<double> v(q);
    std::uniform_real_distribution<double> u(-kInitThetaBound, kInitThetaBound);
    for (auto& t : v) t = u(rng);
    rec.theta = ParamVector(p, std::move(v));
  }
  rec.selection.lambda.assign(q, 1);
  rec.selection.sigma2 = 1.0 / std::uniform_real_distribution<double>(1.0 / kSigma2Max, 1.0 / kSigma2Min)(rng);
  rec.selection.omega = 1.0 + std::exponential_distribution<double>(kOmegaRate)(rng);
  return rec;
}

namespace {

double max_theta_mcse(const std::vector<ChainRecord>& records, std::size_t q) {
  if (records.size() < 4) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> series(records.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t t = 0; t < records.size(); ++t) series[t] = records[t].theta[i];
    worst = std::max(worst, batch_means_mcse(series));
  }
  return worst;
}

}  // namespace

ChainResult run_chain(const ItemResponseMatrix& x, const SamplerConfig& cfg, const ChainCallbacks& callbacks) {
  validate(cfg);
  const std::size_t p = x.p();
  const std::size_t q = param_count(p);
  const std::size_t kept = cfg.iterations - cfg.burn_in;
  if (kept > cfg.max_stored_values / q) {
    throw ValidationError("storing " + std::to_string(kept) + " records of " + std::to_string(q) +
                          " parameters exceeds the configured bound of " + std::to_string(cfg.max_stored_values) +
                          " values; reduce iterations (or enable the adaptive MCSE stop) or raise the bound");
  }
  if (cfg.likelihood == LikelihoodMode::Exact && p > cfg.enumeration_limit) {
    throw EnumerationLimitError("exact-likelihood chains need p <= " + std::to_string(cfg.enumeration_limit));
  }

  Rng rng(cfg.seed);
  ChainRecord state = initial_state(p, cfg, rng);
  validate(state.selection);

  std::optional<DmhKernel> kernel;
  SuffStats stats_x;
  if (cfg.likelihood == LikelihoodMode::DoubleMH) {
    kernel.emplace(x, state.theta, cfg.aux_sweeps.value_or(x.n()), cfg.aux_init);
  } else {
    stats_x = sufficient_statistics(x);
  }

  std::vector<double> sd(q, cfg.proposal_sd_theta);
  std::vector<std::size_t> window_accepts(q, 0);
  std::vector<std::size_t> kept_accepts(q, 0);
  std::size_t report_accepts = 0;
  std::size_t report_moves = 0;

  ChainResult result;
  result.records.reserve(kept);

  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    const bool burning = t < cfg.burn_in;
    if (kernel) kernel->refresh();

    for (std::size_t i = 0; i < q; ++i) {
      CoordinateUpdate upd;
      const bool lambda_i = state.selection.lambda[i] != 0;
      if (kernel) {
        const double proposed = state.theta[i] + sd[i] * normal_draw(rng);
        const std::uint64_t aux_seed = rng();
        const double log_u = log_uniform_draw(rng);
        upd = kernel->update(i, proposed, lambda_i, state.selection.sigma2, state.selection.omega, aux_seed, log_u);
      } else {
        upd = exact_update_coordinate(i, state, stats_x, sd[i], cfg.enumeration_limit, rng);
      }
      state.theta[i] = upd.value;
      if (upd.accepted) {
        ++window_accepts[i];
        ++report_accepts;
        if (!burning) ++kept_accepts[i];
      }
      ++report_moves;

      if (cfg.exempt_beta && i < p) {
        state.selection.lambda[i] = 1;
      } else {
        state.selection.lambda[i] = update_lambda_coordinate(state.theta[i], state.selection, rng) ? 1 : 0;
      }
    }

    state.selection.sigma2 = update_sigma2(state.selection, state.theta, cfg, rng).value;
    state.selection.omega = update_omega(state.selection, state.theta, cfg, rng).value;

    if (burning && cfg.adapt_proposals && (t + 1) % cfg.adapt_window == 0) {
      for (std::size_t i = 0; i < q; ++i) {
        const double rate = static_cast<double>(window_accepts[i]) / static_cast<double>(cfg.adapt_window);
        if (rate < 0.2) sd[i] = std::max(sd[i] * 0.75, 1e-4);
        if (rate > 0.4) sd[i] = std::min(sd[i] * 1.3, 10.0);
      }
    }
    if ((t + 1) % cfg.adapt_window == 0) std::fill(window_accepts.begin(), window_accepts.end(), 0);

    state.iter = t;
    if (!burning) {
      result.records.push_back(state);
      if (callbacks.on_record) callbacks.on_record(state);
    }
    result.iterations_run = t + 1;

    if (callbacks.on_checkpoint && cfg.checkpoint_every > 0 && (t + 1) % cfg.checkpoint_every == 0) {
      callbacks.on_checkpoint(t);
    }
    if (callbacks.on_progress && callbacks.progress_every > 0 && (t + 1) % callbacks.progress_every == 0) {
      ChainProgress prog;
      prog.iter = t + 1;
      prog.total = cfg.iterations;
      prog.burn_in = burning;
      prog.acceptance_rate = static_cast<double>(report_accepts) / static_cast<double>(std::max<std::size_t>(report_moves, 1));
      prog.max_mcse = max_theta_mcse(result.records, q);
      callbacks.on_progress(prog);
      report_accepts = report_moves = 0;
    }
    if (cfg.adaptive_stop && !burning && result.records.size() >= 100 &&
        result.records.size() % cfg.mcse_check_every == 0) {
      if (max_theta_mcse(result.records, q) <= cfg.mcse_target) {
        result.stopped_early = t + 1 < cfg.iterations;
        break;
      }
    }
  }

  const double kept_iters = static_cast<double>(std::max<std::size_t>(result.records.size(), 1));
  result.acceptance_rate.resize(q);
  for (std::size_t i = 0; i < q; ++i) result.acceptance_rate[i] = static_cast<double>(kept_accepts[i]) / kept_iters;
  result.proposal_sd = sd;
  return result;
}

SignedAdjacency signed_adjacency(const ParamVector& theta) {
  const std::size_t p = theta.p();
  SignedAdjacency a(p, p, 0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j + 1; k < p; ++k) {
      const double g = theta.gamma(j, k);
      const int s = g > 0 ? 1 : (g < 0 ? -1 : 0);
      a(j, k) = a(k, j) = s;
    }
  }
  return a;
}

NetworkEstimate posterior_summary(std::span<const ChainRecord> records) {
  if (records.empty()) throw ValidationError("posterior summary needs at least one chain record");
  const std::size_t p = records.front().theta.p();
  const std::size_t q = param_count(p);
  std::vector<double> mean(q, 0.0);
  std::vector<double> pip(q, 0.0);
  for (const auto& rec : records) {
    if (rec.theta.p() != p) throw ValidationError("chain records have inconsistent dimensions");
    for (std::size_t i = 0; i < q; ++i) {
      mean[i] += rec.theta[i];
      pip[i] += rec.selection.lambda[i];
    }
  }
  const double count = static_cast<double>(records.size());
  for (std::size_t i = 0; i < q; ++i) {
    pip[i] /= count;
    mean[i] = pip[i] < 0.5 ? 0.0 : mean[i] / count;
  }
  NetworkEstimate est{ParamVector(p, std::move(mean)), std::move(pip), {}};
  est.signed_adjacency = signed_adjacency(est.theta_hat);
  return est;
}

}  // namespace ierg
