#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include <boost/version.hpp>

#include "ierg/inner_sampler.hpp"

#ifndef IERG_VERSION
#define IERG_VERSION "0.0.0"
#endif

namespace ierg::cli {

namespace fs = std::filesystem;

namespace {

const char* rule_name(EdgeRule r) { return r == EdgeRule::And ? "and" : "or"; }
const char* method_name(Method m) { return m == Method::Bayes ? "bayes" : "elasso"; }

void add_sampler(json& j, const SamplerConfig& s) {
  j["iterations"] = s.iterations;
  j["burn-in"] = s.burn_in;
  if (s.aux_sweeps) j["aux-sweeps"] = *s.aux_sweeps;
  j["mcse-target"] = s.mcse_target;
  j["adaptive-stop"] = s.adaptive_stop;
  j["exempt-beta"] = s.exempt_beta;
  j["theta-step"] = s.proposal_sd_theta;
  j["sigma2-step"] = s.proposal_sd_sigma2;
  j["omega-step"] = s.proposal_sd_omega;
}

void add_elasso(json& j, const ElassoConfig& e) {
  j["ebic-gamma"] = e.ebic_gamma;
  j["rule"] = rule_name(e.rule);
  j["path-length"] = e.path_length;
}

void add_design(json& j, const SimDesign& d) {
  j["n"] = d.n;
  j["items"] = d.p;
  j["groups"] = d.groups;
  j["classes"] = d.classes;
  j["p11"] = d.p11;
  j["p12"] = d.p12;
  j["p21"] = d.p21;
  j["p22"] = d.p22;
  j["rho"] = d.rho;
}

void add_ppp(json& j, const PppConfig& c) {
  j["draws"] = c.num_draws;
  if (c.sim_sweeps) j["sim-sweeps"] = *c.sim_sweeps;
}

json versions_json() {
  return {{"ierg", IERG_VERSION},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

void prepare_output(const fs::path& dir) {
  if (dir.empty()) throw ValidationError("--output is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

std::string replicate_stem(std::size_t r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "replicate_%03zu", r + 1);
  return buf;
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t r) { return mix_seed(seed, r); }

// Stream offsets for the derived seeds of one replicate.
enum SeedStream : std::uint64_t { kChainStream = 1, kPppStream = 2, kExactStream = 3, kDataStream = 4 };

std::vector<double> column_means(std::span<const ChainRecord> records, std::size_t q) {
  std::vector<double> mean(q, 0.0);
  for (const auto& r : records) {
    for (std::size_t i = 0; i < q; ++i) mean[i] += r.theta[i];
  }
  for (auto& m : mean) m /= static_cast<double>(records.size());
  return mean;
}

std::vector<double> column_mcse(std::span<const ChainRecord> records, std::size_t q) {
  std::vector<double> out(q, std::numeric_limits<double>::quiet_NaN());
  if (records.size() < 4) return out;
  std::vector<double> series(records.size());
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t t = 0; t < records.size(); ++t) series[t] = records[t].theta[i];
    out[i] = batch_means_mcse(series);
  }
  return out;
}

struct BayesRun {
  ChainResult chain;
  NetworkEstimate estimate;
};

ChainCallbacks progress_logger(const RunConfig& cfg, std::ostream& log, const std::string& label) {
  ChainCallbacks cb;
  if (cfg.quiet) return cb;
  cb.progress_every = std::max<std::size_t>(cfg.sampler.iterations / 10, 1);
  cb.on_progress = [&log, label](const ChainProgress& pr) {
    log << label << "iteration " << pr.iter << "/" << pr.total << (pr.burn_in ? " (burn-in)" : "")
        << "  acceptance " << std::fixed << std::setprecision(3) << pr.acceptance_rate;
    if (!std::isnan(pr.max_mcse)) log << "  max MCSE " << pr.max_mcse;
    log << std::defaultfloat << '\n';
  };
  return cb;
}

BayesRun run_bayes(const ItemResponseMatrix& x, SamplerConfig sc, std::uint64_t seed, ChainCallbacks cb) {
  sc.seed = seed;
  BayesRun out{run_chain(x, sc, cb), {}};
  out.estimate = posterior_summary(out.chain.records);
  return out;
}

}  // namespace

json config_json(const RunConfig& cfg, const std::string& command) {
  json j;
  j["seed"] = cfg.seed;
  if (!cfg.output.empty()) j["output"] = cfg.output.string();
  if (command == "fit") {
    j["input"] = cfg.input.string();
    j["method"] = method_name(cfg.method);
    add_sampler(j, cfg.sampler);
    add_elasso(j, cfg.elasso);
  } else if (command == "simulate") {
    j["replicates"] = cfg.replicates;
    add_design(j, cfg.design);
  } else if (command == "ppp") {
    j["input"] = cfg.input.string();
    if (!cfg.chain.empty()) j["chain"] = cfg.chain.string();
    if (!cfg.estimate.empty()) j["estimate"] = cfg.estimate.string();
    add_ppp(j, cfg.ppp);
  } else if (command == "compare") {
    if (!cfg.input.empty()) j["input"] = cfg.input.string();
    j["replicates"] = cfg.replicates;
    add_design(j, cfg.design);
    add_sampler(j, cfg.sampler);
    add_elasso(j, cfg.elasso);
    add_ppp(j, cfg.ppp);
  } else if (command == "oracle-check") {
    j["items"] = cfg.oracle_items;
    j["n"] = cfg.oracle_n;
    j["zero-truth"] = cfg.oracle_zero_truth;
    j["tolerance"] = cfg.oracle_tolerance;
    add_sampler(j, cfg.sampler);
  }
  return j;
}

json manifest_json(const RunConfig& cfg, const std::string& command) {
  return {{"tool", "ierg"}, {"command", command}, {"versions", versions_json()}, {"config", config_json(cfg, command)}};
}

int cmd_fit(const RunConfig& cfg, std::ostream& log) {
  if (cfg.input.empty()) throw ValidationError("--input is required");
  const auto table = read_response_csv(cfg.input);
  const auto& x = table.x;
  validate(cfg.sampler);
  validate(cfg.elasso);
  prepare_output(cfg.output);
  set_thread_count(cfg.threads);

  const std::size_t q = param_count(x.p());
  json manifest = manifest_json(cfg, "fit");
  manifest["data"] = {{"n", x.n()}, {"p", x.p()}, {"q", q}, {"items", table.item_names}};
  write_json_file(cfg.output / "manifest.json", manifest);
  if (!cfg.quiet) log << "fit: n=" << x.n() << " p=" << x.p() << " q=" << q << " method=" << method_name(cfg.method) << '\n';

  if (cfg.method == Method::Elasso) {
    const auto est = fit_elasso(x, cfg.elasso);
    write_json_file(cfg.output / "estimate.json", estimate_json(est, table.item_names));
    auto edges = open_output(cfg.output / "edges.csv");
    write_edges_csv(edges, est, table.item_names);
    return kExitOk;
  }

  auto chain_out = open_output(cfg.output / "chain.jsonl");
  chain_out << chain_header(table.item_names).dump() << '\n';
  std::size_t written = 0;
  ChainCallbacks cb = progress_logger(cfg, log, "fit: ");
  cb.on_record = [&](const ChainRecord& rec) {
    chain_out << chain_record_json(rec).dump() << '\n';
    ++written;
  };
  cb.on_checkpoint = [&](std::size_t iter) {
    chain_out.flush();
    write_json_file(cfg.output / "checkpoint.json", {{"iterations_completed", iter + 1}, {"records", written}});
  };
  const auto run = run_bayes(x, cfg.sampler, cfg.seed, cb);
  chain_out.flush();
  write_json_file(cfg.output / "checkpoint.json",
                  {{"iterations_completed", run.chain.iterations_run}, {"records", written}});

  write_json_file(cfg.output / "estimate.json", estimate_json(run.estimate, table.item_names));
  auto edges = open_output(cfg.output / "edges.csv");
  write_edges_csv(edges, run.estimate, table.item_names);

  const auto names = parameter_names(table.item_names);
  const auto mean = column_means(run.chain.records, q);
  const auto mcse = column_mcse(run.chain.records, q);
  json params = json::array();
  double worst = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    params.push_back({{"name", names[i]},
                      {"mean", mean[i]},
                      {"mcse", std::isnan(mcse[i]) ? json(nullptr) : json(mcse[i])},
                      {"acceptance_rate", run.chain.acceptance_rate[i]},
                      {"proposal_sd", run.chain.proposal_sd[i]}});
    if (!std::isnan(mcse[i])) worst = std::max(worst, mcse[i]);
  }
  const bool meets = run.chain.records.size() >= 4 && worst <= cfg.sampler.mcse_target;
  write_json_file(cfg.output / "mcse.json", {{"target", cfg.sampler.mcse_target},
                                             {"max_mcse", worst},
                                             {"meets_target", meets},
                                             {"records", run.chain.records.size()},
                                             {"iterations_run", run.chain.iterations_run},
                                             {"stopped_early", run.chain.stopped_early},
                                             {"parameters", params}});
  if (!cfg.quiet) {
    log << "fit: " << run.chain.records.size() << " records, max MCSE " << worst
        << (meets ? " (target met)" : " (above target)") << '\n';
  }
  return kExitOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  validate(cfg.design);
  if (cfg.replicates < 1) throw ValidationError("--replicates must be at least 1");
  prepare_output(cfg.output);
  const auto truth = true_signed_adjacency(cfg.design);
  const auto names = default_item_names(cfg.design.p);
  json files = json::array();
  for (std::size_t r = 0; r < cfg.replicates; ++r) {
    SimDesign d = cfg.design;
    d.seed = replicate_seed(cfg.seed, r);
    const auto ds = generate_dataset(d);
    const std::string stem = replicate_stem(r);
    auto out = open_output(cfg.output / (stem + ".csv"));
    write_response_csv(out, ds.x, names);
    write_json_file(cfg.output / (stem + "_truth.json"), {{"seed", d.seed},
                                                          {"signed_adjacency", adjacency_json(truth)},
                                                          {"respondent_class", ds.respondent_class},
                                                          {"item_group", ds.item_group}});
    files.push_back({{"data", stem + ".csv"}, {"truth", stem + "_truth.json"}, {"seed", d.seed}});
  }
  json manifest = manifest_json(cfg, "simulate");
  manifest["replicates"] = files;
  write_json_file(cfg.output / "manifest.json", manifest);
  if (!cfg.quiet) {
    log << "simulate: wrote " << cfg.replicates << " replicate(s) of " << cfg.design.n << "x" << cfg.design.p
        << " to " << cfg.output.string() << '\n';
  }
  return kExitOk;
}

int cmd_ppp(const RunConfig& cfg, std::ostream& log) {
  if (cfg.input.empty()) throw ValidationError("--input is required");
  if (cfg.chain.empty() == cfg.estimate.empty()) throw ValidationError("give exactly one of --chain or --estimate");
  validate(cfg.ppp);
  const auto table = read_response_csv(cfg.input);
  prepare_output(cfg.output);
  set_thread_count(cfg.threads);
  PppConfig pc = cfg.ppp;
  pc.seed = cfg.seed;

  PppResult res;
  std::string source;
  if (!cfg.chain.empty()) {
    const fs::path path = fs::is_directory(cfg.chain) ? cfg.chain / "chain.jsonl" : cfg.chain;
    const auto chain = read_chain(path);
    if (chain.records.empty()) throw ValidationError(path.string() + " holds no post-burn-in records");
    if (chain.items.size() != table.x.p()) throw ValidationError("chain and data have different numbers of items");
    res = posterior_predictive_pvalues(chain.records, table.x, pc);
    source = "posterior";
  } else {
    const auto est = estimate_from_json(read_json_file(cfg.estimate));
    if (est.theta_hat.p() != table.x.p()) throw ValidationError("estimate and data have different numbers of items");
    res = posterior_predictive_pvalues(est.theta_hat, table.x, pc);
    source = "point_estimate";
  }
  const double rmse = pvalue_rmse(res.pvalues);
  const auto names = parameter_names(table.item_names);
  write_json_file(cfg.output / "manifest.json", manifest_json(cfg, "ppp"));
  write_json_file(cfg.output / "pvalues.json", {{"source", source},
                                                {"draws", res.draws},
                                                {"fewer_records_than_draws", res.fewer_records_than_draws},
                                                {"parameters", names},
                                                {"pvalues", res.pvalues},
                                                {"rmse", rmse}});
  auto csv = open_output(cfg.output / "pvalues.csv");
  csv << "parameter,pvalue\n" << std::setprecision(17);
  for (std::size_t i = 0; i < names.size(); ++i) csv << names[i] << ',' << res.pvalues[i] << '\n';
  if (!cfg.quiet) log << "ppp: " << res.draws << " draws, p-value RMSE " << rmse << '\n';
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& log) {
  validate(cfg.sampler);
  validate(cfg.elasso);
  validate(cfg.ppp);
  if (cfg.replicates < 1) throw ValidationError("--replicates must be at least 1");
  const bool from_file = !cfg.input.empty();
  if (!from_file) validate(cfg.design);
  prepare_output(cfg.output);
  set_thread_count(cfg.threads);
  write_json_file(cfg.output / "manifest.json", manifest_json(cfg, "compare"));

  std::optional<ResponseTable> table;
  if (from_file) table = read_response_csv(cfg.input);
  const std::size_t reps = from_file ? 1 : cfg.replicates;
  const std::optional<SignedAdjacency> truth =
      from_file ? std::nullopt : std::optional<SignedAdjacency>(true_signed_adjacency(cfg.design));

  const std::size_t p = from_file ? table->x.p() : cfg.design.p;
  const std::size_t q = param_count(p);
  Matrix<double> bayes_p(reps, q);
  Matrix<double> elasso_p(reps, q);
  std::size_t bayes_wins = 0;

  auto rows = open_output(cfg.output / "replicates.csv");
  rows << "replicate,seed,elasso_pvalue_rmse,bayes_pvalue_rmse,elasso_adjacency_rmse,bayes_adjacency_rmse\n"
       << std::setprecision(17);
  for (std::size_t r = 0; r < reps; ++r) {
    const std::uint64_t seed = replicate_seed(cfg.seed, r);
    ItemResponseMatrix x = from_file ? table->x : [&] {
      SimDesign d = cfg.design;
      d.seed = seed;
      return generate_dataset(d).x;
    }();
    const auto bayes = run_bayes(x, cfg.sampler, mix_seed(seed, kChainStream),
                                 progress_logger(cfg, log, "compare[" + std::to_string(r + 1) + "]: "));
    const auto elasso = fit_elasso(x, cfg.elasso);
    PppConfig pc = cfg.ppp;
    pc.seed = mix_seed(seed, kPppStream);
    const auto pb = posterior_predictive_pvalues(bayes.chain.records, x, pc);
    const auto pe = posterior_predictive_pvalues(elasso.theta_hat, x, pc);
    std::copy(pb.pvalues.begin(), pb.pvalues.end(), bayes_p.row(r).begin());
    std::copy(pe.pvalues.begin(), pe.pvalues.end(), elasso_p.row(r).begin());
    const double rb = pvalue_rmse(pb.pvalues);
    const double re = pvalue_rmse(pe.pvalues);
    if (rb < re) ++bayes_wins;
    rows << r + 1 << ',' << seed << ',' << re << ',' << rb << ',';
    if (truth) {
      rows << adjacency_rmse(elasso.signed_adjacency, *truth) << ',' << adjacency_rmse(bayes.estimate.signed_adjacency, *truth);
    } else {
      rows << ',';
    }
    rows << '\n';
    if (!cfg.quiet) log << "compare[" << r + 1 << "]: elasso " << re << "  bayes " << rb << '\n';
  }

  std::ostringstream setting;
  if (from_file) {
    setting << cfg.input.filename().string();
  } else {
    setting << "p11=" << cfg.design.p11 << " p12=" << cfg.design.p12 << " rho=" << cfg.design.rho;
  }
  const double re = pvalue_rmse(elasso_p);
  const double rb = pvalue_rmse(bayes_p);
  auto tab = open_output(cfg.output / "table.csv");
  tab << "setting,elasso_rmse,bayes_rmse\n" << std::setprecision(17) << '"' << setting.str() << "\"," << re << ','
      << rb << '\n';
  write_json_file(cfg.output / "summary.json", {{"setting", setting.str()},
                                                {"replicates", reps},
                                                {"elasso_rmse", re},
                                                {"bayes_rmse", rb},
                                                {"bayes_lower_in", bayes_wins}});
  log << std::left << std::setw(32) << "setting" << std::setw(14) << "elasso" << "bayes\n"
      << std::setw(32) << setting.str() << std::setw(14) << std::setprecision(3) << std::fixed << re << rb << '\n'
      << std::defaultfloat;
  return kExitOk;
}

int cmd_oracle_check(const RunConfig& cfg, std::ostream& log) {
  const std::size_t p = cfg.oracle_items;
  if (p < 2 || p > 4) throw ValidationError("oracle-check needs 2 <= items <= 4");
  if (cfg.oracle_n < 1) throw ValidationError("oracle-check needs n >= 1");
  if (!(cfg.oracle_tolerance > 0)) throw ValidationError("--tolerance must be positive");
  validate(cfg.sampler);
  prepare_output(cfg.output);
  set_thread_count(cfg.threads);

  const std::size_t q = param_count(p);
  std::vector<double> truth(q, 0.0);
  if (!cfg.oracle_zero_truth) {
    Rng rng(mix_seed(cfg.seed, kDataStream));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& t : truth) t = u(rng);
  }
  const ParamVector theta(p, truth);
  const auto x = sample_exact_rows(theta, cfg.oracle_n, mix_seed(cfg.seed, kDataStream));

  SamplerConfig dmh = cfg.sampler;
  dmh.seed = mix_seed(cfg.seed, kChainStream);
  SamplerConfig exact = cfg.sampler;
  exact.seed = mix_seed(cfg.seed, kExactStream);
  exact.likelihood = LikelihoodMode::Exact;
  const auto a = run_chain(x, dmh);
  const auto b = run_chain(x, exact);
  if (a.records.size() < 4 || b.records.size() < 4) throw ValidationError("oracle-check needs at least 4 kept records");

  const auto ma = column_means(a.records, q);
  const auto mb = column_means(b.records, q);
  const auto sa = column_mcse(a.records, q);
  const auto sb = column_mcse(b.records, q);
  const auto names = parameter_names(default_item_names(p));
  bool pass = true;
  json rows = json::array();
  for (std::size_t i = 0; i < q; ++i) {
    const double bound = cfg.oracle_tolerance * std::hypot(sa[i], sb[i]);
    const bool ok = std::abs(ma[i] - mb[i]) <= bound;
    pass = pass && ok;
    rows.push_back({{"name", names[i]},
                    {"truth", truth[i]},
                    {"dmh_mean", ma[i]},
                    {"exact_mean", mb[i]},
                    {"dmh_mcse", sa[i]},
                    {"exact_mcse", sb[i]},
                    {"bound", bound},
                    {"pass", ok}});
    if (!cfg.quiet) {
      log << std::left << std::setw(20) << names[i] << " dmh " << std::setw(10) << std::setprecision(4) << ma[i]
          << " exact " << std::setw(10) << mb[i] << (ok ? " ok" : " FAIL") << '\n';
    }
  }
  write_json_file(cfg.output / "manifest.json", manifest_json(cfg, "oracle-check"));
  write_json_file(cfg.output / "oracle.json", {{"pass", pass}, {"parameters", rows}});
  log << "oracle-check: " << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kExitOk : kExitTolerance;
}

}  // namespace ierg::cli
