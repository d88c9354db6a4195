#include "ierg/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "ierg/error.hpp"

namespace ierg {

std::pair<std::size_t, std::size_t> pair_from_index(std::size_t index, std::size_t p) {
  if (index >= pair_count(p)) {
    throw ValidationError("pair index " + std::to_string(index) + " out of range for p=" + std::to_string(p));
  }
  std::size_t j = 0;
  std::size_t row_len = p - 1;
  while (index >= row_len) {
    index -= row_len;
    ++j;
    --row_len;
  }
  return {j, j + 1 + index};
}

ItemResponseMatrix::ItemResponseMatrix(std::size_t n, std::size_t p)
    : ItemResponseMatrix(n, p, std::vector<std::uint8_t>(n * p, 0)) {}

ItemResponseMatrix::ItemResponseMatrix(std::size_t n, std::size_t p, std::vector<std::uint8_t> cells)
    : n_(n), p_(p), cells_(std::move(cells)) {
  if (n_ < 1 || p_ < 2) {
    throw ValidationError("response matrix needs n >= 1 and p >= 2 (got n=" + std::to_string(n_) +
                          ", p=" + std::to_string(p_) + ")");
  }
  if (cells_.size() != n_ * p_) {
    throw ValidationError("response matrix has " + std::to_string(cells_.size()) + " cells, expected " +
                          std::to_string(n_ * p_));
  }
  for (std::size_t idx = 0; idx < cells_.size(); ++idx) {
    if (cells_[idx] > 1) {
      throw ValidationError("non-binary response at row " + std::to_string(idx / p_) + ", item " +
                            std::to_string(idx % p_));
    }
  }
}

ParamVector::ParamVector(std::size_t p) : p_(p), values_(param_count(p), 0.0) {}

ParamVector::ParamVector(std::size_t p, std::vector<double> values) : p_(p), values_(std::move(values)) {
  if (values_.size() != param_count(p_)) {
    throw ValidationError("parameter vector has length " + std::to_string(values_.size()) + ", expected q=" +
                          std::to_string(param_count(p_)));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw ValidationError("parameter vector has a non-finite entry");
  }
}

ParamVector::ParamVector(std::span<const double> beta, std::span<const double> gamma)
    : ParamVector(beta.size(), [&] {
        std::vector<double> v(beta.begin(), beta.end());
        v.insert(v.end(), gamma.begin(), gamma.end());
        return v;
      }()) {}

double ParamVector::gamma(std::size_t j, std::size_t k) const {
  if (j > k) std::swap(j, k);
  return values_[p_ + pair_index(j, k, p_)];
}

void ParamVector::set_gamma(std::size_t j, std::size_t k, double v) {
  if (j > k) std::swap(j, k);
  values_[p_ + pair_index(j, k, p_)] = v;
}

SuffStats::SuffStats(std::size_t n, std::size_t p) : n_(n), p_(p), flat_(param_count(p), 0) {}

SuffStats sufficient_statistics(const ItemResponseMatrix& x) {
  const std::size_t p = x.p();
  SuffStats s(x.n(), p);
  auto flat = s.flat();
  std::vector<std::size_t> on;
  on.reserve(p);
  for (std::size_t i = 0; i < x.n(); ++i) {
    const auto row = x.row(i);
    on.clear();
    for (std::size_t j = 0; j < p; ++j) {
      if (row[j]) on.push_back(j);
    }
    for (std::size_t a = 0; a < on.size(); ++a) {
      ++flat[on[a]];
      for (std::size_t b = a + 1; b < on.size(); ++b) ++flat[p + pair_index(on[a], on[b], p)];
    }
  }
  return s;
}

double unnormalized_log_density(const SuffStats& s, const ParamVector& theta) {
  if (s.p() != theta.p()) {
    throw ValidationError("statistics for p=" + std::to_string(s.p()) + " paired with parameters for p=" +
                          std::to_string(theta.p()));
  }
  double acc = 0.0;
  const auto t = s.flat();
  const auto v = theta.values();
  for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * static_cast<double>(t[i]);
  return acc;
}

double row_log_weight(std::span<const std::uint8_t> row, const ParamVector& theta) {
  const std::size_t p = theta.p();
  double acc = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    if (!row[j]) continue;
    acc += theta.beta(j);
    for (std::size_t k = j + 1; k < p; ++k) {
      if (row[k]) acc += theta.gamma(j, k);
    }
  }
  return acc;
}

Matrix<double> interaction_matrix(const ParamVector& theta) {
  const std::size_t p = theta.p();
  Matrix<double> g(p, p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j + 1; k < p; ++k) {
      g(j, k) = g(k, j) = theta.gamma(j, k);
    }
  }
  return g;
}

double log_row_partition(const ParamVector& theta, std::size_t limit) {
  const std::size_t p = theta.p();
  if (p > limit) {
    throw EnumerationLimitError("exact partition function needs 2^" + std::to_string(p) +
                                " row states, above the enumeration limit p <= " + std::to_string(limit) +
                                "; use the sampling-based (DMH) route instead");
  }
  const Matrix<double> g = interaction_matrix(theta);
  // Walk the row states in Gray-code order so each step flips a single bit
  // and the log-weight is updated in O(p). Streaming log-sum-exp.
  std::vector<std::uint8_t> z(p, 0);
  double w = 0.0;
  double max_w = 0.0;
  double sum = 1.0;  // exp(0 - max_w) for the all-zero state
  const std::uint64_t states = std::uint64_t{1} << p;
  for (std::uint64_t step = 1; step < states; ++step) {
    const auto j = static_cast<std::size_t>(std::countr_zero(step));
    double field = theta.beta(j);
    for (std::size_t k = 0; k < p; ++k) {
      if (z[k]) field += g(j, k);
    }
    if (z[j]) {
      w -= field;
      z[j] = 0;
    } else {
      w += field;
      z[j] = 1;
    }
    if (w > max_w) {
      sum = sum * std::exp(max_w - w) + 1.0;
      max_w = w;
    } else {
      sum += std::exp(w - max_w);
    }
  }
  return max_w + std::log(sum);
}

double log_partition_exact(const ParamVector& theta, std::size_t n, std::size_t limit) {
  return static_cast<double>(n) * log_row_partition(theta, limit);
}

double log_likelihood_exact(const SuffStats& s, const ParamVector& theta, std::size_t limit) {
  return unnormalized_log_density(s, theta) - log_partition_exact(theta, s.n(), limit);
}

double logistic(double t) noexcept {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double row_conditional_prob(std::span<const std::uint8_t> row, std::size_t j, const ParamVector& theta) {
  if (j >= theta.p()) throw ValidationError("item index " + std::to_string(j) + " out of range");
  double field = theta.beta(j);
  for (std::size_t k = 0; k < theta.p(); ++k) {
    if (k != j && row[k]) field += theta.gamma(j, k);
  }
  return logistic(field);
}

}  // namespace ierg
