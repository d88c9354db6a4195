#pragma once

// Auxiliary-data generation from f(. | theta): single-site Gibbs sweeps with
// per-row random substreams, plus an exact row sampler for small p.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ierg/model.hpp"
#include "ierg/rng.hpp"

namespace ierg {

enum class AuxInit { ObservedData, Random };

struct AuxChainConfig {
  std::size_t sweeps = 1;
  AuxInit init = AuxInit::ObservedData;
  std::uint64_t seed = 0;
};

void validate(const AuxChainConfig& cfg);

/// Single-site Gibbs kernel for one response row. Rows carry a cached weight
/// vector w_j = exp(-f_j), with f_j = beta_j + sum_k gamma_jk z_k the logit of
/// P(z_j = 1 | rest). Weights are updated multiplicatively on flips; a site
/// update sets z_j = 1 iff u (1 + w_j) < 1.
class RowGibbsKernel {
 public:
  explicit RowGibbsKernel(const ParamVector& theta);

  std::size_t p() const noexcept { return beta_.size(); }

  void init_weights(std::span<const std::uint8_t> row, std::span<double> weights) const;

  /// One row-major pass over all sites, each redrawn from its full conditional.
  void sweep(std::span<std::uint8_t> row, std::span<double> weights, StreamRng& eng) const;

  /// Overwrite flat coordinate i of theta.
  void set(std::size_t i, double value);

  std::span<const double> beta() const noexcept { return beta_; }
  const Matrix<double>& couplings() const noexcept { return couplings_; }

  /// Clamped exp(-f) for a logit f.
  static double weight_of(double field) noexcept;

 private:
  std::vector<double> beta_;
  Matrix<double> couplings_;
  Matrix<double> factors_;   // exp(-gamma_jk), 1 on the diagonal
  Matrix<double> inverses_;  // exp(+gamma_jk)
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

/// Runs `sweeps` Gibbs sweeps on one row using the (seed, row) substream,
/// starting from `row` (or from a uniform random row when init is Random).
/// This is the per-row unit shared by sample_auxiliary and the DMH kernel.
void run_row_chain(const RowGibbsKernel& kernel, std::span<std::uint8_t> row, std::span<double> weights,
                   std::size_t row_index, const AuxChainConfig& cfg);

/// One full sweep over every cell of y. Row substreams are derived from a
/// single draw of `rng`.
ItemResponseMatrix gibbs_sweep(const ItemResponseMatrix& y, const ParamVector& theta, Rng& rng);

/// State after cfg.sweeps Gibbs sweeps from x (or from a random matrix).
ItemResponseMatrix sample_auxiliary(const ItemResponseMatrix& x, const ParamVector& theta,
                                    const AuxChainConfig& cfg);

/// Exact iid row sampler: inverse CDF over the 2^p enumerated row states.
/// State s encodes item j in bit j.
class ExactRowSampler {
 public:
  explicit ExactRowSampler(const ParamVector& theta, std::size_t limit = kDefaultEnumerationLimit);

  std::size_t p() const noexcept { return p_; }
  std::span<const double> probabilities() const noexcept { return probs_; }

  std::uint64_t draw_state(double u) const;
  ItemResponseMatrix sample(std::size_t n, std::uint64_t seed) const;

 private:
  std::size_t p_;
  std::vector<double> probs_;
  std::vector<double> cdf_;
};

ItemResponseMatrix sample_exact_rows(const ParamVector& theta, std::size_t n, std::uint64_t seed,
                                     std::size_t limit = kDefaultEnumerationLimit);

/// Worker threads used by row-parallel and draw-parallel loops (0 = all cores).
void set_thread_count(int threads);
int thread_count();

}  // namespace ierg
