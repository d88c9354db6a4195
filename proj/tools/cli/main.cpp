#include <iostream>
#include <map>
#include <string>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "commands.hpp"

namespace {

using namespace ierg;
using namespace ierg::cli;

// Reads the "config" object of a run manifest as CLI11 configuration, one
// item per flag.
class ManifestConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    json cfg = json::object();
    for (const CLI::Option* opt : app->get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || opt->get_configurable() == false) continue;
      if (opt->count() > 0) {
        const auto& res = opt->results();
        cfg[name] = res.size() == 1 ? json(res.front()) : json(res);
      } else if (default_also && !opt->get_default_str().empty()) {
        cfg[name] = opt->get_default_str();
      }
    }
    return json{{"config", cfg}}.dump(2) + "\n";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!j.contains("config") || !j.contains("command")) {
      throw CLI::ConversionError("manifest needs \"command\" and \"config\" entries");
    }
    const std::string command = j["command"].get<std::string>();
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : j["config"].items()) {
      CLI::ConfigItem item;
      item.parents = {command};
      item.name = key;
      if (value.is_string()) {
        item.inputs = {value.get<std::string>()};
      } else if (value.is_boolean()) {
        item.inputs = {value.get<bool>() ? "true" : "false"};
      } else if (value.is_null()) {
        continue;
      } else {
        item.inputs = {value.dump()};
      }
      items.push_back(std::move(item));
    }
    return items;
  }
};

const std::map<std::string, EdgeRule> kRules{{"and", EdgeRule::And}, {"or", EdgeRule::Or}};
const std::map<std::string, Method> kMethods{{"bayes", Method::Bayes}, {"elasso", Method::Elasso}};

struct Flags {
  std::size_t aux_sweeps = 0;
  std::size_t sim_sweeps = 0;
};

void add_common(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--output,-o", cfg.output, "Output directory")->required();
  sub->add_option("--seed", cfg.seed, "Master seed; every random stream is derived from it")->capture_default_str();
  sub->add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
  sub->add_flag("--quiet,-q", cfg.quiet, "Suppress progress output")->configurable(false);
  sub->fallthrough();
}

void add_sampler(CLI::App* sub, RunConfig& cfg, Flags& flags) {
  sub->add_option("--iterations", cfg.sampler.iterations, "Outer iterations including burn-in")->capture_default_str();
  sub->add_option("--burn-in", cfg.sampler.burn_in, "Burn-in iterations")->capture_default_str();
  sub->add_option("--aux-sweeps", flags.aux_sweeps, "Gibbs sweeps per auxiliary dataset (default: n)");
  sub->add_option("--mcse-target", cfg.sampler.mcse_target, "Batch-means MCSE target")->capture_default_str();
  sub->add_flag("--adaptive-stop", cfg.sampler.adaptive_stop, "Stop once every MCSE is below the target");
  sub->add_flag("--exempt-beta", cfg.sampler.exempt_beta, "Keep easiness parameters in the slab");
  sub->add_option("--theta-step", cfg.sampler.proposal_sd_theta, "Initial random-walk sd for theta")
      ->capture_default_str();
  sub->add_option("--sigma2-step", cfg.sampler.proposal_sd_sigma2, "Random-walk sd for sigma2")->capture_default_str();
  sub->add_option("--omega-step", cfg.sampler.proposal_sd_omega, "Random-walk sd for omega")->capture_default_str();
}

void add_elasso(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--ebic-gamma", cfg.elasso.ebic_gamma, "EBIC hyperparameter")->capture_default_str();
  sub->add_option("--rule", cfg.elasso.rule, "Edge rule")->transform(CLI::CheckedTransformer(kRules, CLI::ignore_case));
  sub->add_option("--path-length", cfg.elasso.path_length, "Penalties per node path")->capture_default_str();
}

void add_design(CLI::App* sub, RunConfig& cfg) {
  auto& d = cfg.design;
  sub->add_option("--n", d.n, "Respondents")->capture_default_str();
  sub->add_option("--items", d.p, "Items")->capture_default_str();
  sub->add_option("--groups", d.groups, "Item groups")->capture_default_str();
  sub->add_option("--classes", d.classes, "Respondent classes")->capture_default_str();
  sub->add_option("--p11", d.p11, "P(inside | intended inside)")->capture_default_str();
  sub->add_option("--p12", d.p12, "P(first item correct | inside)")->capture_default_str();
  sub->add_option("--p21", d.p21, "P(outside | intended outside)")->capture_default_str();
  sub->add_option("--p22", d.p22, "P(first item correct | outside)")->capture_default_str();
  sub->add_option("--rho", d.rho, "Within-group local dependence")->capture_default_str();
  sub->add_option("--replicates", cfg.replicates, "Number of replicates")->capture_default_str();
}

void add_ppp(CLI::App* sub, RunConfig& cfg, Flags& flags) {
  sub->add_option("--draws", cfg.ppp.num_draws, "Simulated datasets")->capture_default_str();
  sub->add_option("--sim-sweeps", flags.sim_sweeps, "Gibbs sweeps per simulated dataset (default: n)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spike-and-slab double Metropolis-Hastings for item-response networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(IERG_VERSION));
  app.set_config("--manifest", "", "Reuse the settings recorded in a run manifest; explicit flags win");
  app.config_formatter(std::make_shared<ManifestConfig>());

  RunConfig cfg;
  Flags flags;

  auto* fit = app.add_subcommand("fit", "Estimate the item network from a 0/1 response CSV");
  fit->add_option("--input,-i", cfg.input, "Response CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--method", cfg.method, "bayes or elasso")->transform(CLI::CheckedTransformer(kMethods, CLI::ignore_case));
  add_common(fit, cfg);
  add_sampler(fit, cfg, flags);
  add_elasso(fit, cfg);

  auto* sim = app.add_subcommand("simulate", "Generate replicate datasets from the class/group design");
  add_common(sim, cfg);
  add_design(sim, cfg);

  auto* ppp = app.add_subcommand("ppp", "Posterior predictive p-values for a chain or a point estimate");
  ppp->add_option("--input,-i", cfg.input, "Response CSV")->required()->check(CLI::ExistingFile);
  ppp->add_option("--chain", cfg.chain, "Fit output directory or chain.jsonl");
  ppp->add_option("--estimate", cfg.estimate, "estimate.json of a point estimate")->check(CLI::ExistingFile);
  add_common(ppp, cfg);
  add_ppp(ppp, cfg, flags);

  auto* cmp = app.add_subcommand("compare", "Side-by-side p-value RMSE of both methods");
  cmp->add_option("--input,-i", cfg.input, "Response CSV (otherwise simulate from the design)")->check(CLI::ExistingFile);
  add_common(cmp, cfg);
  add_design(cmp, cfg);
  add_sampler(cmp, cfg, flags);
  add_elasso(cmp, cfg);
  add_ppp(cmp, cfg, flags);

  auto* orc = app.add_subcommand("oracle-check",
                                 "DMH against the exact-likelihood chain on a small model "
                                 "(defaults here: --iterations 50000 --burn-in 5000 --omega-step 10)");
  orc->preparse_callback([&cfg](std::size_t) {
    cfg.sampler.iterations = 50000;
    cfg.sampler.burn_in = 5000;
    cfg.sampler.proposal_sd_omega = 10.0;
  });
  orc->add_option("--items", cfg.oracle_items, "Items (2 to 4)")->capture_default_str();
  orc->add_option("--n", cfg.oracle_n, "Respondents")->capture_default_str();
  orc->add_flag("--zero-truth", cfg.oracle_zero_truth, "Simulate from theta = 0");
  orc->add_option("--tolerance", cfg.oracle_tolerance, "Allowed multiple of the combined MCSE")->capture_default_str();
  add_common(orc, cfg);
  add_sampler(orc, cfg, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  if (flags.aux_sweeps > 0) cfg.sampler.aux_sweeps = flags.aux_sweeps;
  if (flags.sim_sweeps > 0) cfg.ppp.sim_sweeps = flags.sim_sweeps;
  if (cfg.design.groups != SimDesign{}.groups || cfg.design.classes != SimDesign{}.classes) {
    if (cfg.design.classes == 0 || cfg.design.groups == 0) {
      std::cerr << "error: groups and classes must be positive\n";
      return kExitValidation;
    }
    cfg.design.class_inside_groups = block_class_mapping(cfg.design.classes, cfg.design.groups);
  }

  try {
    if (fit->parsed()) return cmd_fit(cfg, std::cerr);
    if (sim->parsed()) return cmd_simulate(cfg, std::cerr);
    if (ppp->parsed()) return cmd_ppp(cfg, std::cerr);
    if (cmp->parsed()) return cmd_compare(cfg, std::cerr);
    if (orc->parsed()) return cmd_oracle_check(cfg, std::cerr);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const EnumerationLimitError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
