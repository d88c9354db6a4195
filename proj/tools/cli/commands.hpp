#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "ierg/diagnostics.hpp"
#include "ierg/pseudolikelihood.hpp"
#include "ierg/sampler.hpp"
#include "ierg/simulation.hpp"
#include "io.hpp"

namespace ierg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitTolerance = 3;

enum class Method { Bayes, Elasso };

struct RunConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  std::uint64_t seed = 1;
  int threads = 0;
  Method method = Method::Bayes;

  SamplerConfig sampler;
  ElassoConfig elasso;
  SimDesign design;
  PppConfig ppp;
  std::size_t replicates = 1;

  /// ppp: chain directory (or chain.jsonl) or an estimate.json.
  std::filesystem::path chain;
  std::filesystem::path estimate;

  /// oracle-check
  std::size_t oracle_items = 3;
  std::size_t oracle_n = 50;
  bool oracle_zero_truth = false;
  double oracle_tolerance = 3.0;

  bool quiet = false;
};

/// Settings of a run keyed by command-line flag name (without dashes), as
/// recorded in the manifest's "config" object. Feeding that object back
/// through --manifest reproduces the run.
json config_json(const RunConfig& cfg, const std::string& command);

json manifest_json(const RunConfig& cfg, const std::string& command);

int cmd_fit(const RunConfig& cfg, std::ostream& log);
int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_ppp(const RunConfig& cfg, std::ostream& log);
int cmd_compare(const RunConfig& cfg, std::ostream& log);
int cmd_oracle_check(const RunConfig& cfg, std::ostream& log);

}  // namespace ierg::cli
