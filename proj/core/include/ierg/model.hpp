#pragma once

// Inhomogeneous ERGM for binary item responses: per-item easiness (beta) and
// per-pair interaction (gamma) terms over an n x p respondent-by-item matrix.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace ierg {

/// Default bound on p for anything that enumerates the 2^p row states.
inline constexpr std::size_t kDefaultEnumerationLimit = 20;

/// Number of model parameters for p items: p + p(p-1)/2.
constexpr std::size_t param_count(std::size_t p) noexcept { return p + p * (p - 1) / 2; }

/// Number of item pairs j < k.
constexpr std::size_t pair_count(std::size_t p) noexcept { return p * (p - 1) / 2; }

/// Position of pair (j, k), j < k, in lexicographic pair order (0-based).
constexpr std::size_t pair_index(std::size_t j, std::size_t k, std::size_t p) noexcept {
  return j * p - j * (j + 1) / 2 + (k - j - 1);
}

/// Inverse of pair_index.
std::pair<std::size_t, std::size_t> pair_from_index(std::size_t index, std::size_t p);

/// Dense row-major matrix. Used for adjacency matrices and p-value tables.
template <class T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), cells_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return cells_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return cells_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {cells_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {cells_.data() + r * cols_, cols_}; }

  std::span<const T> cells() const noexcept { return cells_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> cells_;
};

/// Signed p x p adjacency: entries in {-1, 0, +1}, symmetric, zero diagonal.
using SignedAdjacency = Matrix<int>;

/// n x p binary response matrix, respondents by items.
class ItemResponseMatrix {
 public:
  /// All-zero matrix. Requires n >= 1, p >= 2.
  ItemResponseMatrix(std::size_t n, std::size_t p);
  /// Row-major cells; every cell must be 0 or 1.
  ItemResponseMatrix(std::size_t n, std::size_t p, std::vector<std::uint8_t> cells);

  std::size_t n() const noexcept { return n_; }
  std::size_t p() const noexcept { return p_; }

  std::uint8_t operator()(std::size_t i, std::size_t j) const { return cells_[i * p_ + j]; }
  void set(std::size_t i, std::size_t j, bool value) { cells_[i * p_ + j] = value ? 1 : 0; }

  std::span<const std::uint8_t> row(std::size_t i) const { return {cells_.data() + i * p_, p_}; }
  std::span<std::uint8_t> row(std::size_t i) { return {cells_.data() + i * p_, p_}; }
  std::span<const std::uint8_t> cells() const noexcept { return cells_; }

  friend bool operator==(const ItemResponseMatrix&, const ItemResponseMatrix&) = default;

 private:
  std::size_t n_;
  std::size_t p_;
  std::vector<std::uint8_t> cells_;
};

/// theta = (beta, gamma) stored flat: beta_0..beta_{p-1}, then gamma_{jk} in
/// lexicographic (j, k) order. Flat coordinate i < p is beta_i.
class ParamVector {
 public:
  ParamVector() = default;
  /// Zero vector for p items.
  explicit ParamVector(std::size_t p);
  /// Flat values of length param_count(p); all entries must be finite.
  ParamVector(std::size_t p, std::vector<double> values);
  ParamVector(std::span<const double> beta, std::span<const double> gamma);

  std::size_t p() const noexcept { return p_; }
  std::size_t q() const noexcept { return values_.size(); }

  double beta(std::size_t j) const { return values_[j]; }
  double gamma(std::size_t j, std::size_t k) const;
  void set_beta(std::size_t j, double v) { values_[j] = v; }
  void set_gamma(std::size_t j, std::size_t k, double v);

  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> betas() const { return {values_.data(), p_}; }
  std::span<const double> gammas() const { return {values_.data() + p_, values_.size() - p_}; }

  /// True if coordinate i is an interaction parameter.
  bool is_interaction(std::size_t i) const noexcept { return i >= p_; }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;

 private:
  std::size_t p_ = 0;
  std::vector<double> values_;
};

/// Sufficient statistics T(x), aligned with ParamVector's flat order.
class SuffStats {
 public:
  SuffStats() = default;
  SuffStats(std::size_t n, std::size_t p);

  std::size_t n() const noexcept { return n_; }
  std::size_t p() const noexcept { return p_; }
  std::size_t q() const noexcept { return flat_.size(); }

  std::span<const std::int64_t> flat() const noexcept { return flat_; }
  std::span<std::int64_t> flat() noexcept { return flat_; }
  std::span<const std::int64_t> item_counts() const { return {flat_.data(), p_}; }
  std::span<const std::int64_t> pair_counts() const { return {flat_.data() + p_, flat_.size() - p_}; }
  std::int64_t operator[](std::size_t i) const { return flat_[i]; }

  friend bool operator==(const SuffStats&, const SuffStats&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t p_ = 0;
  std::vector<std::int64_t> flat_;
};

SuffStats sufficient_statistics(const ItemResponseMatrix& x);

/// theta . T(x) = log f(x | theta) + log kappa(theta).
double unnormalized_log_density(const SuffStats& s, const ParamVector& theta);

/// beta . z + sum_{j<k} gamma_jk z_j z_k for a single response row z.
double row_log_weight(std::span<const std::uint8_t> row, const ParamVector& theta);

/// log of the single-row normalizer Z(theta) = sum_z exp(row_log_weight(z)).
/// Throws EnumerationLimitError when p exceeds `limit`.
double log_row_partition(const ParamVector& theta, std::size_t limit = kDefaultEnumerationLimit);

/// log kappa(theta) for n respondents: n * log Z(theta).
double log_partition_exact(const ParamVector& theta, std::size_t n,
                           std::size_t limit = kDefaultEnumerationLimit);

/// Exact log f(x | theta); requires p within the enumeration limit.
double log_likelihood_exact(const SuffStats& s, const ParamVector& theta,
                            std::size_t limit = kDefaultEnumerationLimit);

/// P(x_j = 1 | rest of row, theta) = logistic(beta_j + sum_{k != j} gamma_jk row_k).
double row_conditional_prob(std::span<const std::uint8_t> row, std::size_t j, const ParamVector& theta);

/// Symmetric p x p interaction matrix with zero diagonal, gamma_jk at (j,k) and (k,j).
Matrix<double> interaction_matrix(const ParamVector& theta);

double logistic(double t) noexcept;

}  // namespace ierg
