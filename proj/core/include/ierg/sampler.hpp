#pragma once

// Spike-and-slab double Metropolis-Hastings sampler.
//
// Prior hierarchy per coordinate i of theta:
//   theta_i | lambda_i, sigma2, omega ~ lambda_i N(0, omega^2 sigma2) + (1 - lambda_i) N(0, sigma2)
//   lambda_i ~ Bernoulli(1/2)
//   1 / sigma2 ~ Uniform(4, 100)          (so sigma2 in [0.01, 0.25], density ~ sigma2^-2)
//   omega - 1 ~ Exponential(rate 0.01)
//
// Each outer iteration visits i = 1..q: a DMH update of theta_i (auxiliary data
// drawn at the proposed value, so kappa(theta) cancels) followed immediately by
// a Gibbs draw of lambda_i; then random-walk MH updates of sigma2 and omega.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ierg/inner_sampler.hpp"
#include "ierg/model.hpp"
#include "ierg/rng.hpp"

namespace ierg {

inline constexpr double kSigma2Min = 1.0 / 100.0;
inline constexpr double kSigma2Max = 1.0 / 4.0;
inline constexpr double kOmegaRate = 0.01;
inline constexpr double kInitThetaBound = 5.0;

struct SelectionState {
  std::vector<std::uint8_t> lambda;
  double sigma2 = 0.1;
  double omega = 2.0;

  friend bool operator==(const SelectionState&, const SelectionState&) = default;
};

void validate(const SelectionState& s);

enum class LikelihoodMode {
  DoubleMH,  // auxiliary-variable acceptance, kappa cancels
  Exact,     // exact likelihood via enumeration; small-p oracle only
};

struct SamplerConfig {
  std::size_t iterations = 10000;
  std::size_t burn_in = 1000;
  double proposal_sd_theta = 0.2;
  double proposal_sd_sigma2 = 0.02;
  double proposal_sd_omega = 0.5;
  /// Gibbs sweeps per auxiliary draw; unset means one per respondent (m = n).
  std::optional<std::size_t> aux_sweeps;
  AuxInit aux_init = AuxInit::ObservedData;
  std::uint64_t seed = 1;
  double mcse_target = 0.03;
  /// Stop once every theta coordinate's batch-means MCSE is <= mcse_target.
  bool adaptive_stop = false;
  std::size_t mcse_check_every = 500;
  std::size_t checkpoint_every = 1000;
  /// Per-coordinate proposal scaling toward 20-40% acceptance, burn-in only.
  bool adapt_proposals = true;
  std::size_t adapt_window = 50;
  /// Keep easiness parameters permanently in the slab.
  bool exempt_beta = false;
  LikelihoodMode likelihood = LikelihoodMode::DoubleMH;
  std::size_t enumeration_limit = kDefaultEnumerationLimit;
  /// Bound on stored doubles, (iterations - burn_in) * q.
  std::size_t max_stored_values = 50'000'000;
  /// Starting point; unset draws theta from Uniform(-5, 5) per coordinate.
  std::optional<ParamVector> initial_theta;
};

void validate(const SamplerConfig& cfg);

struct ChainRecord {
  std::size_t iter = 0;
  ParamVector theta;
  SelectionState selection;

  friend bool operator==(const ChainRecord&, const ChainRecord&) = default;
};

struct NetworkEstimate {
  ParamVector theta_hat;
  std::vector<double> pip;
  SignedAdjacency signed_adjacency;
};

double log_normal_pdf(double x, double variance);

/// log N(theta_i; 0, omega^2 sigma2) if lambda_i, else log N(theta_i; 0, sigma2).
double spike_slab_log_prior(double theta_i, bool lambda_i, double sigma2, double omega);

/// P(lambda_i = 1 | theta_i, sigma2, omega) = a / (a + b).
double inclusion_probability(double theta_i, double sigma2, double omega);

bool update_lambda_coordinate(double theta_i, const SelectionState& state, Rng& rng);

/// log of the DMH acceptance ratio for moving theta_i to `proposed` given the
/// i-th sufficient statistic of the observed and auxiliary data.
double dmh_log_ratio(double current, double proposed, double stat_x, double stat_y, bool lambda_i, double sigma2,
                     double omega);

struct CoordinateUpdate {
  double value = 0.0;
  bool accepted = false;
  double log_ratio = 0.0;
};

/// Holds the observed data, its sufficient statistics and the Gibbs weight
/// cache exp(-(beta_j + sum_k gamma_jk x_ik)) for the current theta. `x`
/// must outlive the kernel.
class DmhKernel {
 public:
  DmhKernel(const ItemResponseMatrix& x, ParamVector theta, std::size_t sweeps,
            AuxInit init = AuxInit::ObservedData);

  const ParamVector& theta() const noexcept { return theta_; }
  const SuffStats& observed_stats() const noexcept { return stats_x_; }

  /// T_i(y) for y = sample_auxiliary(x, theta with theta_i = proposed, {sweeps, init, aux_seed}).
  std::int64_t auxiliary_statistic(std::size_t i, double proposed, std::uint64_t aux_seed);

  /// Full DMH step for coordinate i at a given proposal. `log_u` is the log of
  /// the uniform used for the accept test.
  CoordinateUpdate update(std::size_t i, double proposed, bool lambda_i, double sigma2, double omega,
                          std::uint64_t aux_seed, double log_u);

  /// Sets theta_i without an MH test (keeps the weight cache in sync).
  void set(std::size_t i, double value);

  /// Recompute the weight cache from scratch.
  void refresh();

 private:
  const ItemResponseMatrix& x_;
  ParamVector theta_;
  std::size_t sweeps_;
  AuxInit init_;
  SuffStats stats_x_;
  RowGibbsKernel kernel_;
  std::vector<double> weights_;  // n x p
};

/// One DMH update of theta_i: random-walk proposal, auxiliary data at the
/// proposal, accept/reject. Draw order from `rng`: proposal, auxiliary seed,
/// accept uniform.
CoordinateUpdate dmh_update_coordinate(std::size_t i, const ChainRecord& state, const ItemResponseMatrix& x,
                                       const SamplerConfig& cfg, Rng& rng);

/// Same move with the exact likelihood ratio (enumerated partition function).
CoordinateUpdate exact_update_coordinate(std::size_t i, const ChainRecord& state, const SuffStats& stats_x,
                                         double proposal_sd, std::size_t enumeration_limit, Rng& rng);

struct HyperUpdate {
  double value = 0.0;
  bool accepted = false;
};

/// log pi(theta | lambda, sigma2, omega) + log pi(sigma2), -inf off support.
double sigma2_log_target(std::span<const double> theta, std::span<const std::uint8_t> lambda, double sigma2,
                         double omega);
/// log pi(theta | lambda, sigma2, omega) + log pi(omega), -inf off support.
double omega_log_target(std::span<const double> theta, std::span<const std::uint8_t> lambda, double sigma2,
                        double omega);

HyperUpdate update_sigma2(const SelectionState& state, const ParamVector& theta, const SamplerConfig& cfg, Rng& rng);
HyperUpdate update_omega(const SelectionState& state, const ParamVector& theta, const SamplerConfig& cfg, Rng& rng);

/// Draws (theta, lambda, sigma2, omega) from the starting distribution:
/// lambda = 1, theta ~ U(-5, 5), 1/sigma2 ~ U(4, 100), omega ~ 1 + Exp(0.01).
ChainRecord initial_state(std::size_t p, const SamplerConfig& cfg, Rng& rng);

struct ChainProgress {
  std::size_t iter = 0;
  std::size_t total = 0;
  bool burn_in = true;
  double acceptance_rate = 0.0;  // mean over coordinates since the last report
  double max_mcse = 0.0;         // NaN until enough records exist
};

struct ChainCallbacks {
  std::function<void(const ChainRecord&)> on_record;
  std::function<void(std::size_t iter)> on_checkpoint;
  std::function<void(const ChainProgress&)> on_progress;
  std::size_t progress_every = 0;
};

struct ChainResult {
  std::vector<ChainRecord> records;
  std::vector<double> acceptance_rate;  // per coordinate, after burn-in
  std::vector<double> proposal_sd;      // per coordinate, as frozen after burn-in
  std::size_t iterations_run = 0;
  bool stopped_early = false;
};

ChainResult run_chain(const ItemResponseMatrix& x, const SamplerConfig& cfg, const ChainCallbacks& callbacks = {});

/// Signs of the interaction block of theta as a p x p adjacency.
SignedAdjacency signed_adjacency(const ParamVector& theta);

NetworkEstimate posterior_summary(std::span<const ChainRecord> records);

}  // namespace ierg
