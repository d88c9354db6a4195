#include "ierg/diagnostics.hpp"

#include <cmath>
#include <string>

#include "ierg/error.hpp"
#include "ierg/inner_sampler.hpp"

namespace ierg {

double batch_means_mcse(std::span<const double> series) {
  const std::size_t len = series.size();
  if (len < 4) throw ValidationError("batch means need a series of length >= 4, got " + std::to_string(len));
  const auto batches = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(len))));
  const std::size_t size = len / batches;
  std::vector<double> means(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    double acc = 0.0;
    for (std::size_t t = b * size; t < (b + 1) * size; ++t) acc += series[t];
    means[b] = acc / static_cast<double>(size);
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= static_cast<double>(batches);
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  const double sd = std::sqrt(ss / static_cast<double>(batches - 1));
  return sd / std::sqrt(static_cast<double>(batches));
}

std::vector<std::size_t> thin_indices(std::size_t count, std::size_t draws) {
  std::vector<std::size_t> idx;
  if (count == 0 || draws == 0) return idx;
  if (count <= draws) {
    idx.resize(count);
    for (std::size_t t = 0; t < count; ++t) idx[t] = t;
    return idx;
  }
  idx.resize(draws);
  if (draws == 1) {
    idx[0] = count - 1;
    return idx;
  }
  const double stride = static_cast<double>(count - 1) / static_cast<double>(draws - 1);
  for (std::size_t d = 0; d < draws; ++d) {
    idx[d] = static_cast<std::size_t>(std::llround(stride * static_cast<double>(d)));
  }
  return idx;
}

void validate(const PppConfig& cfg) {
  if (cfg.num_draws < 1) throw ValidationError("posterior predictive check needs at least one draw");
  if (cfg.sim_sweeps && *cfg.sim_sweeps < 1) throw ValidationError("simulation sweeps must be at least 1");
}

ItemResponseMatrix simulate_replicate(const ParamVector& theta, std::size_t n, const PppConfig& cfg,
                                      std::uint64_t seed) {
  if (theta.p() <= cfg.exact_max_p) return sample_exact_rows(theta, n, seed, cfg.exact_max_p);
  const AuxChainConfig aux{cfg.sim_sweeps.value_or(n), AuxInit::Random, seed};
  return sample_auxiliary(ItemResponseMatrix(n, theta.p()), theta, aux);
}

namespace {

template <class ThetaAt>
std::vector<double> exceedance_rates(std::size_t draws, const ItemResponseMatrix& x, const PppConfig& cfg,
                                     ThetaAt&& theta_at) {
  const SuffStats tx = sufficient_statistics(x);
  const std::size_t q = tx.q();
  std::vector<std::vector<std::uint32_t>> per_draw(draws);
#ifdef IERG_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(thread_count()) if (thread_count() > 1)
#endif
  for (std::ptrdiff_t d = 0; d < static_cast<std::ptrdiff_t>(draws); ++d) {
    const auto du = static_cast<std::size_t>(d);
    const ItemResponseMatrix y = simulate_replicate(theta_at(du), x.n(), cfg, mix_seed(cfg.seed, du));
    const SuffStats ty = sufficient_statistics(y);
    auto& flags = per_draw[du];
    flags.resize(q);
    for (std::size_t i = 0; i < q; ++i) flags[i] = ty[i] > tx[i] ? 1u : 0u;
  }
  std::vector<double> rate(q, 0.0);
  for (const auto& flags : per_draw) {
    for (std::size_t i = 0; i < q; ++i) rate[i] += flags[i];
  }
  for (auto& r : rate) r /= static_cast<double>(draws);
  return rate;
}

}  // namespace

PppResult posterior_predictive_pvalues(std::span<const ChainRecord> records, const ItemResponseMatrix& x,
                                       const PppConfig& cfg) {
  validate(cfg);
  if (records.empty()) throw ValidationError("posterior predictive check needs at least one chain record");
  if (records.front().theta.p() != x.p()) throw ValidationError("chain and data have different item counts");
  const auto idx = thin_indices(records.size(), cfg.num_draws);
  PppResult out;
  out.draws = idx.size();
  out.fewer_records_than_draws = records.size() < cfg.num_draws;
  out.pvalues = exceedance_rates(idx.size(), x, cfg, [&](std::size_t d) -> const ParamVector& {
    return records[idx[d]].theta;
  });
  return out;
}

PppResult posterior_predictive_pvalues(const ParamVector& theta, const ItemResponseMatrix& x, const PppConfig& cfg) {
  validate(cfg);
  if (theta.p() != x.p()) throw ValidationError("estimate and data have different item counts");
  PppResult out;
  out.draws = cfg.num_draws;
  if (theta.p() <= cfg.exact_max_p) {
    // One enumeration serves every draw.
    const ExactRowSampler exact(theta, cfg.exact_max_p);
    const SuffStats tx = sufficient_statistics(x);
    std::vector<double> rate(tx.q(), 0.0);
    for (std::size_t d = 0; d < cfg.num_draws; ++d) {
      const SuffStats ty = sufficient_statistics(exact.sample(x.n(), mix_seed(cfg.seed, d)));
      for (std::size_t i = 0; i < tx.q(); ++i) rate[i] += ty[i] > tx[i] ? 1.0 : 0.0;
    }
    for (auto& r : rate) r /= static_cast<double>(cfg.num_draws);
    out.pvalues = std::move(rate);
    return out;
  }
  out.pvalues = exceedance_rates(cfg.num_draws, x, cfg, [&](std::size_t) -> const ParamVector& { return theta; });
  return out;
}

double adjacency_rmse(const SignedAdjacency& estimate, const SignedAdjacency& truth) {
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols() || estimate.rows() != estimate.cols()) {
    throw ValidationError("adjacency matrices must be square and of equal shape");
  }
  const std::size_t p = truth.rows();
  double ss = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < p; ++k) {
      const double d = static_cast<double>(estimate(j, k) - truth(j, k));
      ss += d * d;
    }
  }
  return std::sqrt(ss / static_cast<double>(p * p));
}

double pvalue_rmse(std::span<const double> pvalues) {
  if (pvalues.empty()) throw ValidationError("p-value RMSE needs at least one p-value");
  double ss = 0.0;
  for (double v : pvalues) ss += (v - 0.5) * (v - 0.5);
  return std::sqrt(ss / static_cast<double>(pvalues.size()));
}

double pvalue_rmse(const Matrix<double>& pvalues) { return pvalue_rmse(pvalues.cells()); }

}  // namespace ierg
