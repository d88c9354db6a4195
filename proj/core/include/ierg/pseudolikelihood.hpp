#pragma once

// Node-wise l1-penalized logistic regression with EBIC penalty selection
// (the "elasso" pseudolikelihood baseline). With 0/1 coding, the logit of
// x_j given the other items is beta_j + sum_k gamma_jk x_k, so node-wise
// intercepts and coefficients estimate beta and gamma directly.

#include <cstddef>
#include <span>
#include <vector>

#include "ierg/model.hpp"
#include "ierg/sampler.hpp"

namespace ierg {

enum class EdgeRule { And, Or };

struct ElassoConfig {
  /// Decreasing penalties; empty builds a path per node from lambda_max.
  std::vector<double> lambda_path;
  std::size_t path_length = 100;
  double path_min_ratio = 0.01;
  double ebic_gamma = 0.25;
  EdgeRule rule = EdgeRule::And;
  std::size_t max_iter = 5000;
  double tol = 1e-7;
  /// |intercept| cap used for constant columns.
  double intercept_bound = 10.0;
};

void validate(const ElassoConfig& cfg);

struct NodeFit {
  std::size_t item = 0;
  double penalty = 0.0;
  double intercept = 0.0;
  /// Coefficients on the other p-1 items, in item order with `item` skipped.
  std::vector<double> coefficients;
  bool constant_column = false;
  bool converged = false;
  std::size_t iterations = 0;
  double loglik = 0.0;
  std::size_t df = 0;
  double ebic = 0.0;
};

double soft_threshold(double z, double threshold) noexcept;

/// Unpenalized node-wise log-likelihood sum_i log P(x_ij | x_i,-j).
double nodewise_loglik(const ItemResponseMatrix& x, std::size_t j, double intercept,
                       std::span<const double> coefficients);

/// Smallest penalty at which every coefficient of node j is zero.
double lambda_max(const ItemResponseMatrix& x, std::size_t j);

std::vector<double> penalty_path(const ItemResponseMatrix& x, std::size_t j, const ElassoConfig& cfg);

/// Maximizes loglik - penalty * ||coefficients||_1 (intercept unpenalized)
/// by proximal Newton: each outer step solves the penalized weighted
/// least-squares model with active-set coordinate descent, then backtracks
/// until the objective does not increase. Stops when an outer step moves no
/// coordinate by more than cfg.tol. `warm` seeds the coefficients; `trace`
/// receives the penalized negative log-likelihood after every outer step.
NodeFit nodewise_l1_logistic(const ItemResponseMatrix& x, std::size_t j, double penalty, const ElassoConfig& cfg,
                             const NodeFit* warm = nullptr, std::vector<double>* trace = nullptr);

/// -2 loglik + df log n + 2 gamma df log(p - 1).
double ebic_score(double loglik, std::size_t df, std::size_t n, std::size_t p, double gamma);

/// Fits node j along its penalty path and keeps the EBIC-minimizing fit.
NodeFit select_node_fit(const ItemResponseMatrix& x, std::size_t j, const ElassoConfig& cfg);

/// Symmetrizes node-wise fits into a network estimate.
NetworkEstimate combine_node_fits(std::span<const NodeFit> fits, EdgeRule rule);

NetworkEstimate fit_elasso(const ItemResponseMatrix& x, const ElassoConfig& cfg);

}  // namespace ierg
