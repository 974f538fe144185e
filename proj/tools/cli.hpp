#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "swarmcap/data.hpp"
#include "swarmcap/harness.hpp"

namespace swarmcap::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kUsageError = 2 };

/// Fully resolved settings of one invocation: defaults, then SWARMCAP_SEED,
/// then the JSON config file, then flags.
struct CliConfig {
  std::uint64_t dataset_seed = 0;
  GeneratorParams generator;
  std::string case_name = "balanced";
  std::vector<Mode> modes{Mode::ll, Mode::sl, Mode::cl};
  std::size_t folds = 5;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  TrainHyper hyper;
  std::size_t sync_cycles = 100;
  std::size_t local_epochs_per_cycle = 1;
  double alpha = 1.0;
  bool carry_optimizer_state = true;
  std::string out = "out";
  std::vector<ReportFormat> formats{ReportFormat::csv, ReportFormat::json, ReportFormat::plotdata};
  std::size_t jobs = 1;
  std::optional<std::string> data;

  ExperimentConfig experiment() const;
};

/// Applies a JSON config document; unknown keys throw ConfigError.
void apply_config_json(CliConfig& config, const std::string& json_text);
std::string to_json(const CliConfig& config);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace swarmcap::cli
