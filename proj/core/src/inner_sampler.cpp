#include "ierg/inner_sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "ierg/error.hpp"

#ifdef IERG_HAVE_OPENMP
#include <omp.h>
#endif

namespace ierg {

namespace {

int g_threads = 0;

// Below this many cell updates per call, row parallelism costs more than it saves.
constexpr std::size_t kParallelWorkThreshold = 1u << 16;

}  // namespace

void set_thread_count(int threads) { g_threads = std::max(threads, 0); }

int thread_count() {
#ifdef IERG_HAVE_OPENMP
  return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
  return 1;
#endif
}

void validate(const AuxChainConfig& cfg) {
  if (cfg.sweeps < 1) throw ValidationError("auxiliary chain needs at least one sweep");
}

RowGibbsKernel::RowGibbsKernel(const ParamVector& theta)
    : beta_(theta.betas().begin(), theta.betas().end()), couplings_(interaction_matrix(theta)) {
  const std::size_t p = theta.p();
  factors_ = Matrix<double>(p, p, 1.0);
  inverses_ = Matrix<double>(p, p, 1.0);
  pairs_.reserve(pair_count(p));
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = j + 1; k < p; ++k) {
      pairs_.emplace_back(j, k);
      factors_(j, k) = factors_(k, j) = std::exp(-couplings_(j, k));
      inverses_(j, k) = inverses_(k, j) = std::exp(couplings_(j, k));
    }
  }
}

double RowGibbsKernel::weight_of(double field) noexcept {
  // Keeps weights finite and nonzero so multiplicative updates stay invertible.
  return std::exp(-std::clamp(field, -600.0, 600.0));
}

void RowGibbsKernel::init_weights(std::span<const std::uint8_t> row, std::span<double> weights) const {
  const std::size_t p = beta_.size();
  for (std::size_t j = 0; j < p; ++j) {
    double f = beta_[j];
    const auto g = couplings_.row(j);
    for (std::size_t k = 0; k < p; ++k) {
      if (row[k]) f += g[k];
    }
    weights[j] = weight_of(f);
  }
}

void RowGibbsKernel::sweep(std::span<std::uint8_t> row, std::span<double> weights, StreamRng& eng) const {
  const std::size_t p = beta_.size();
  for (std::size_t j = 0; j < p; ++j) {
    const bool next = uniform01(eng) * (1.0 + weights[j]) < 1.0;
    if (next == static_cast<bool>(row[j])) continue;
    row[j] = next ? 1 : 0;
    const auto e = next ? factors_.row(j) : inverses_.row(j);
    for (std::size_t k = 0; k < p; ++k) weights[k] *= e[k];
  }
}

void RowGibbsKernel::set(std::size_t i, double value) {
  const std::size_t p = beta_.size();
  if (i < p) {
    beta_[i] = value;
    return;
  }
  const auto [j, k] = pairs_.at(i - p);
  couplings_(j, k) = couplings_(k, j) = value;
  factors_(j, k) = factors_(k, j) = std::exp(-value);
  inverses_(j, k) = inverses_(k, j) = std::exp(value);
}

void run_row_chain(const RowGibbsKernel& kernel, std::span<std::uint8_t> row, std::span<double> weights,
                   std::size_t row_index, const AuxChainConfig& cfg) {
  StreamRng eng = make_stream(cfg.seed, row_index);
  if (cfg.init == AuxInit::Random) {
    for (auto& cell : row) cell = uniform01(eng) < 0.5 ? 1 : 0;
  }
  kernel.init_weights(row, weights);
  for (std::size_t s = 0; s < cfg.sweeps; ++s) kernel.sweep(row, weights, eng);
}

namespace {

ItemResponseMatrix run_rows(const ItemResponseMatrix& start, const ParamVector& theta, const AuxChainConfig& cfg) {
  if (start.p() != theta.p()) {
    throw ValidationError("response matrix has p=" + std::to_string(start.p()) + " but parameters have p=" +
                          std::to_string(theta.p()));
  }
  validate(cfg);
  const RowGibbsKernel kernel(theta);
  ItemResponseMatrix y = start;
  const std::size_t n = y.n();
  const std::size_t p = y.p();
  const bool parallel = thread_count() > 1 && n * p * cfg.sweeps >= kParallelWorkThreshold;
#ifdef IERG_HAVE_OPENMP
#pragma omp parallel num_threads(thread_count()) if (parallel)
#endif
  {
    std::vector<double> weights(p);
#ifdef IERG_HAVE_OPENMP
#pragma omp for schedule(static)
#endif
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(n); ++r) {
      run_row_chain(kernel, y.row(static_cast<std::size_t>(r)), weights, static_cast<std::size_t>(r), cfg);
    }
  }
  (void)parallel;
  return y;
}

}  // namespace

ItemResponseMatrix gibbs_sweep(const ItemResponseMatrix& y, const ParamVector& theta, Rng& rng) {
  AuxChainConfig cfg;
  cfg.sweeps = 1;
  cfg.init = AuxInit::ObservedData;
  cfg.seed = rng();
  return run_rows(y, theta, cfg);
}

ItemResponseMatrix sample_auxiliary(const ItemResponseMatrix& x, const ParamVector& theta,
                                    const AuxChainConfig& cfg) {
  return run_rows(x, theta, cfg);
}

ExactRowSampler::ExactRowSampler(const ParamVector& theta, std::size_t limit) : p_(theta.p()) {
  if (p_ > limit) {
    throw EnumerationLimitError("exact row sampling needs 2^" + std::to_string(p_) +
                                " states, above the enumeration limit p <= " + std::to_string(limit));
  }
  const std::uint64_t states = std::uint64_t{1} << p_;
  probs_.resize(states);
  std::vector<std::uint8_t> z(p_);
  double max_w = -INFINITY;
  for (std::uint64_t s = 0; s < states; ++s) {
    for (std::size_t j = 0; j < p_; ++j) z[j] = (s >> j) & 1u;
    probs_[s] = row_log_weight(z, theta);
    max_w = std::max(max_w, probs_[s]);
  }
  double total = 0.0;
  for (auto& w : probs_) {
    w = std::exp(w - max_w);
    total += w;
  }
  cdf_.resize(states);
  double acc = 0.0;
  for (std::uint64_t s = 0; s < states; ++s) {
    probs_[s] /= total;
    acc += probs_[s];
    cdf_[s] = acc;
  }
  cdf_.back() = 1.0;
}

std::uint64_t ExactRowSampler::draw_state(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
}

ItemResponseMatrix ExactRowSampler::sample(std::size_t n, std::uint64_t seed) const {
  ItemResponseMatrix y(n, p_);
  for (std::size_t r = 0; r < n; ++r) {
    StreamRng eng = make_stream(seed, r);
    const std::uint64_t s = draw_state(uniform01(eng));
    auto row = y.row(r);
    for (std::size_t j = 0; j < p_; ++j) row[j] = (s >> j) & 1u;
  }
  return y;
}

ItemResponseMatrix sample_exact_rows(const ParamVector& theta, std::size_t n, std::uint64_t seed,
                                     std::size_t limit) {
  return ExactRowSampler(theta, limit).sample(n, seed);
}

}  // namespace ierg
