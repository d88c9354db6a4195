#include "ierg/pseudolikelihood.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ierg/error.hpp"
#include "ierg/inner_sampler.hpp"

namespace ierg {

namespace {

// log(1 + e^t) without overflow.
double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

std::size_t other_item(std::size_t j, std::size_t slot) { return slot < j ? slot : slot + 1; }

double l1_norm(std::span<const double> v) {
  double acc = 0.0;
  for (double b : v) acc += std::abs(b);
  return acc;
}

}  // namespace

void validate(const ElassoConfig& cfg) {
  for (double l : cfg.lambda_path) {
    if (!(l > 0)) throw ValidationError("penalties must be positive");
  }
  if (!std::is_sorted(cfg.lambda_path.rbegin(), cfg.lambda_path.rend())) {
    throw ValidationError("penalty path must be decreasing");
  }
  if (cfg.lambda_path.empty() && (cfg.path_length < 1 || !(cfg.path_min_ratio > 0 && cfg.path_min_ratio <= 1))) {
    throw ValidationError("automatic penalty path needs path_length >= 1 and 0 < min ratio <= 1");
  }
  if (!(cfg.ebic_gamma >= 0 && cfg.ebic_gamma <= 1)) throw ValidationError("EBIC gamma must lie in [0, 1]");
  if (!(cfg.tol > 0)) throw ValidationError("tolerance must be positive");
  if (cfg.max_iter < 1) throw ValidationError("max_iter must be positive");
}

double soft_threshold(double z, double threshold) noexcept {
  if (z > threshold) return z - threshold;
  if (z < -threshold) return z + threshold;
  return 0.0;
}

double nodewise_loglik(const ItemResponseMatrix& x, std::size_t j, double intercept,
                       std::span<const double> coefficients) {
  const std::size_t p = x.p();
  double ll = 0.0;
  for (std::size_t i = 0; i < x.n(); ++i) {
    double eta = intercept;
    for (std::size_t s = 0; s + 1 < p; ++s) {
      if (x(i, other_item(j, s))) eta += coefficients[s];
    }
    ll += (x(i, j) ? eta : 0.0) - softplus(eta);
  }
  return ll;
}

double lambda_max(const ItemResponseMatrix& x, std::size_t j) {
  const std::size_t n = x.n();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
  mean /= static_cast<double>(n);
  double best = 0.0;
  for (std::size_t s = 0; s + 1 < x.p(); ++s) {
    const std::size_t k = other_item(j, s);
    double g = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (x(i, k)) g += x(i, j) - mean;
    }
    best = std::max(best, std::abs(g));
  }
  return best;
}

std::vector<double> penalty_path(const ItemResponseMatrix& x, std::size_t j, const ElassoConfig& cfg) {
  if (!cfg.lambda_path.empty()) return cfg.lambda_path;
  const double top = std::max(lambda_max(x, j), 1e-8);
  std::vector<double> path(cfg.path_length);
  const double denom = cfg.path_length > 1 ? static_cast<double>(cfg.path_length - 1) : 1.0;
  for (std::size_t t = 0; t < cfg.path_length; ++t) {
    path[t] = top * std::pow(cfg.path_min_ratio, static_cast<double>(t) / denom);
  }
  return path;
}

NodeFit nodewise_l1_logistic(const ItemResponseMatrix& x, std::size_t j, double penalty, const ElassoConfig& cfg,
                             const NodeFit* warm, std::vector<double>* trace) {
  const std::size_t n = x.n();
  const std::size_t p = x.p();
  if (j >= p) throw ValidationError("item index " + std::to_string(j) + " out of range");
  if (!(penalty >= 0)) throw ValidationError("penalty must be non-negative");

  NodeFit fit;
  fit.item = j;
  fit.penalty = penalty;
  fit.coefficients.assign(p - 1, 0.0);

  std::vector<double> y(n);
  double ones = 0.0;
  for (std::size_t i = 0; i < n; ++i) ones += y[i] = x(i, j);
  if (ones == 0.0 || ones == static_cast<double>(n)) {
    fit.constant_column = true;
    fit.converged = true;
    fit.intercept = ones == 0.0 ? -cfg.intercept_bound : cfg.intercept_bound;
    fit.loglik = nodewise_loglik(x, j, fit.intercept, fit.coefficients);
    return fit;
  }

  if (penalty >= lambda_max(x, j)) {
    const double mean = ones / static_cast<double>(n);
    fit.intercept = std::log(mean / (1.0 - mean));
    fit.converged = true;
    fit.loglik = nodewise_loglik(x, j, fit.intercept, fit.coefficients);
    if (trace) trace->push_back(-fit.loglik);
    return fit;
  }

  // Row indices with a 1 in each predictor column.
  std::vector<std::vector<std::size_t>> support(p - 1);
  for (std::size_t s = 0; s + 1 < p; ++s) {
    const std::size_t k = other_item(j, s);
    for (std::size_t i = 0; i < n; ++i) {
      if (x(i, k)) support[s].push_back(i);
    }
  }

  if (warm && warm->coefficients.size() == p - 1 && !warm->constant_column) {
    fit.intercept = warm->intercept;
    fit.coefficients = warm->coefficients;
  } else {
    const double mean = ones / static_cast<double>(n);
    fit.intercept = std::log(mean / (1.0 - mean));
  }

  const std::size_t m = p - 1;
  auto linear_predictor = [&](double b0, std::span<const double> b, std::vector<double>& eta) {
    std::fill(eta.begin(), eta.end(), b0);
    for (std::size_t s = 0; s < m; ++s) {
      if (b[s] == 0.0) continue;
      for (std::size_t i : support[s]) eta[i] += b[s];
    }
  };
  auto objective_at = [&](std::span<const double> eta, std::span<const double> b) {
    double nll = 0.0;
    for (std::size_t i = 0; i < n; ++i) nll -= y[i] * eta[i] - softplus(eta[i]);
    return nll + penalty * l1_norm(b);
  };

  std::vector<double> eta(n);
  linear_predictor(fit.intercept, fit.coefficients, eta);
  double current = objective_at(eta, fit.coefficients);

  std::vector<double> w(n);
  std::vector<double> r(n);
  std::vector<double> trial_eta(n);
  std::vector<double> trial_b(m);
  std::vector<double> next_b(m);
  std::vector<double> col_w(m);

  for (std::size_t iter = 1; iter <= cfg.max_iter; ++iter) {
    fit.iterations = iter;
    // Quadratic model of the log-likelihood at the current point: weights
    // mu(1 - mu) and weighted residuals (y - mu) / w expressed as r = w z.
    double w_total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double mu = logistic(eta[i]);
      w[i] = std::max(mu * (1.0 - mu), 1e-6);
      r[i] = y[i] - mu;
      w_total += w[i];
    }
    for (std::size_t s = 0; s < m; ++s) {
      double acc = 0.0;
      for (std::size_t i : support[s]) acc += w[i];
      col_w[s] = acc;
    }

    // Coordinate descent on the penalized quadratic model; r tracks
    // w_i * (z_i - model prediction_i).
    double next_b0 = fit.intercept;
    next_b = fit.coefficients;
    bool full_pass = true;
    for (std::size_t pass = 0; pass < 1000; ++pass) {
      double rs = 0.0;
      for (std::size_t i = 0; i < n; ++i) rs += r[i];
      double max_change = 0.0;
      const double d0 = rs / w_total;
      if (d0 != 0.0) {
        next_b0 += d0;
        for (std::size_t i = 0; i < n; ++i) r[i] -= w[i] * d0;
        max_change = std::abs(d0) * std::sqrt(w_total);
      }
      for (std::size_t s = 0; s < m; ++s) {
        if (col_w[s] <= 0.0) continue;
        if (!full_pass && next_b[s] == 0.0) continue;
        double g = 0.0;
        for (std::size_t i : support[s]) g += r[i];
        const double updated = soft_threshold(g + col_w[s] * next_b[s], penalty) / col_w[s];
        const double d = updated - next_b[s];
        if (d == 0.0) continue;
        next_b[s] = updated;
        for (std::size_t i : support[s]) r[i] -= w[i] * d;
        max_change = std::max(max_change, std::abs(d) * std::sqrt(col_w[s]));
      }
      if (max_change < 0.1 * cfg.tol) {
        if (full_pass) break;
        full_pass = true;
      } else {
        full_pass = false;
      }
    }

    // Backtrack along the proximal Newton direction.
    double t = 1.0;
    bool moved = false;
    double step_change = 0.0;
    for (int halving = 0; halving < 30; ++halving, t *= 0.5) {
      const double b0 = fit.intercept + t * (next_b0 - fit.intercept);
      for (std::size_t s = 0; s < m; ++s) trial_b[s] = fit.coefficients[s] + t * (next_b[s] - fit.coefficients[s]);
      linear_predictor(b0, trial_b, trial_eta);
      const double value = objective_at(trial_eta, trial_b);
      if (value <= current) {
        step_change = std::abs(b0 - fit.intercept);
        for (std::size_t s = 0; s < m; ++s) step_change = std::max(step_change, std::abs(trial_b[s] - fit.coefficients[s]));
        fit.intercept = b0;
        fit.coefficients = trial_b;
        eta.swap(trial_eta);
        current = value;
        moved = true;
        break;
      }
    }
    if (trace) trace->push_back(current);
    if (!moved || step_change < cfg.tol) {
      fit.converged = true;
      break;
    }
  }

  fit.loglik = penalty * l1_norm(fit.coefficients) - current;
  fit.df = static_cast<std::size_t>(
      std::count_if(fit.coefficients.begin(), fit.coefficients.end(), [](double b) { return b != 0.0; }));
  return fit;
}

double ebic_score(double loglik, std::size_t df, std::size_t n, std::size_t p, double gamma) {
  const double k = static_cast<double>(df);
  return -2.0 * loglik + k * std::log(static_cast<double>(n)) + 2.0 * gamma * k * std::log(static_cast<double>(p - 1));
}

NodeFit select_node_fit(const ItemResponseMatrix& x, std::size_t j, const ElassoConfig& cfg) {
  const auto path = penalty_path(x, j, cfg);
  NodeFit best;
  bool have_best = false;
  NodeFit previous;
  bool have_previous = false;
  for (double penalty : path) {
    NodeFit fit = nodewise_l1_logistic(x, j, penalty, cfg, have_previous ? &previous : nullptr);
    fit.ebic = ebic_score(fit.loglik, fit.df, x.n(), x.p(), cfg.ebic_gamma);
    if (!have_best || fit.ebic < best.ebic) {
      best = fit;
      have_best = true;
    }
    if (fit.constant_column) break;
    previous = std::move(fit);
    have_previous = true;
  }
  return best;
}

NetworkEstimate combine_node_fits(std::span<const NodeFit> fits, EdgeRule rule) {
  const std::size_t p = fits.size();
  if (p < 2) throw ValidationError("need node fits for at least two items");
  std::vector<const NodeFit*> by_item(p, nullptr);
  for (const auto& f : fits) {
    if (f.item >= p || f.coefficients.size() != p - 1 || by_item[f.item]) {
      throw ValidationError("node fits must cover each item exactly once with p-1 coefficients");
    }
    by_item[f.item] = &f;
  }
  auto coef = [&](std::size_t j, std::size_t k) { return by_item[j]->coefficients[k < j ? k : k - 1]; };

  ParamVector theta(p);
  std::vector<double> pip(param_count(p), 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    theta.set_beta(j, by_item[j]->intercept);
    pip[j] = 1.0;
  }
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j + 1; k < p; ++k) {
      const double a = coef(j, k);
      const double b = coef(k, j);
      const bool keep = rule == EdgeRule::And ? (a != 0.0 && b != 0.0) : (a != 0.0 || b != 0.0);
      if (!keep) continue;
      theta.set_gamma(j, k, 0.5 * (a + b));
      pip[p + pair_index(j, k, p)] = 1.0;
    }
  }
  NetworkEstimate est{theta, std::move(pip), signed_adjacency(theta)};
  return est;
}

NetworkEstimate fit_elasso(const ItemResponseMatrix& x, const ElassoConfig& cfg) {
  validate(cfg);
  const std::size_t p = x.p();
  std::vector<NodeFit> fits(p);
#ifdef IERG_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(thread_count()) if (thread_count() > 1)
#endif
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(p); ++j) {
    fits[static_cast<std::size_t>(j)] = select_node_fit(x, static_cast<std::size_t>(j), cfg);
  }
  return combine_node_fits(fits, cfg.rule);
}

}  // namespace ierg
