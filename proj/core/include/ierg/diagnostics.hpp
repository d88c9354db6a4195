#pragma once

// Convergence and fit diagnostics: batch-means MCSE, posterior predictive
// p-values of the sufficient statistics, adjacency and p-value RMSE.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ierg/model.hpp"
#include "ierg/sampler.hpp"

namespace ierg {

/// sd(batch means) / sqrt(#batches) with floor(sqrt(L)) equal-size batches;
/// trailing remainder is dropped. Requires L >= 4.
double batch_means_mcse(std::span<const double> series);

/// `draws` evenly spaced indices into [0, count), first and last included.
/// Returns all indices when count <= draws.
std::vector<std::size_t> thin_indices(std::size_t count, std::size_t draws);

struct PppConfig {
  std::size_t num_draws = 1000;
  /// Gibbs sweeps per simulated dataset from a uniform random start; unset means n.
  std::optional<std::size_t> sim_sweeps;
  std::uint64_t seed = 1;
  /// Up to this p, datasets are drawn exactly by enumeration instead.
  std::size_t exact_max_p = 12;
};

void validate(const PppConfig& cfg);

struct PppResult {
  std::vector<double> pvalues;  // one per sufficient statistic, length q
  std::size_t draws = 0;
  bool fewer_records_than_draws = false;
};

/// Simulates one n x p dataset from f(. | theta) following the PPP rules.
ItemResponseMatrix simulate_replicate(const ParamVector& theta, std::size_t n, const PppConfig& cfg,
                                      std::uint64_t seed);

/// p_hat_i = (1/D) sum_d 1{T_i(y_d) > T_i(x)} over D thinned posterior draws.
PppResult posterior_predictive_pvalues(std::span<const ChainRecord> records, const ItemResponseMatrix& x,
                                       const PppConfig& cfg);

/// Point-estimate variant: every simulated dataset uses the same theta.
PppResult posterior_predictive_pvalues(const ParamVector& theta, const ItemResponseMatrix& x, const PppConfig& cfg);

/// sqrt( (1/p^2) sum_{j,k} (A_hat_jk - A_jk)^2 ), all ordered pairs and the diagonal.
double adjacency_rmse(const SignedAdjacency& estimate, const SignedAdjacency& truth);

/// sqrt( (1/(N q)) sum (p_hat - 0.5)^2 ) over an N x q table.
double pvalue_rmse(const Matrix<double>& pvalues);
double pvalue_rmse(std::span<const double> pvalues);

}  // namespace ierg
