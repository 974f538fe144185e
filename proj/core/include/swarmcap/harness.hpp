#pragma once

// Case-study orchestration: local (LL), swarm (SL, with and without CWPA)
// and central (CL) learning over folds and seeds, plus report I/O.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swarmcap/data.hpp"
#include "swarmcap/model.hpp"
#include "swarmcap/swarm.hpp"

namespace swarmcap {

/// Canonical report order is the enumerator order.
enum class Mode { ll, sl, sl_no_cwpa, cl };

std::string_view to_string(Mode mode);
/// Throws ConfigError for unknown names.
Mode parse_mode(std::string_view name);
/// Comma-separated list; result is deduplicated and in canonical order.
std::vector<Mode> parse_modes(std::string_view list);

struct ExperimentConfig {
  SwarmConfig swarm;    // seed is replaced per run
  std::size_t jobs = 1;  // concurrent (fold, seed) runs

  /// Epochs every model gets: sync_cycles x local_epochs_per_cycle.
  std::size_t epoch_budget() const { return swarm.sync_cycles * swarm.local_epochs_per_cycle; }
};

/// One (scenario, fold, seed) split, normalized with statistics of the pooled
/// training data.
struct FoldData {
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  Partition partition;
  NormStats norm;
  std::vector<SampleSet> nodes;
  SampleSet central;
  SampleSet validation;
  SampleSet test;
};

FoldData prepare_fold(std::span<const DataPoint> pool, const ScenarioSpec& spec, std::size_t fold, std::uint64_t seed);

/// Training seed of one (fold, seed) run, shared by every mode.
std::uint64_t run_seed(std::size_t fold, std::uint64_t seed);

/// Each node trains alone for the full epoch budget; one Metrics per node,
/// all on the shared test set.
std::vector<Metrics> run_ll(const FoldData& data, const ExperimentConfig& config);

/// One model on the union of node data.
Metrics run_cl(const FoldData& data, const ExperimentConfig& config);

struct SlOutcome {
  Metrics metrics;
  std::vector<double> final_weights;  // normalized, ascending node id
  std::vector<SyncRecord> history;
  ParamVector global;
};

SlOutcome run_sl(const FoldData& data, const ExperimentConfig& config, bool use_cwpa);

struct RunRecord {
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  std::vector<Metrics> metrics;       // parallel to ModeReport::labels
  std::vector<double> final_weights;  // SL modes only
  std::vector<SyncRecord> history;    // SL modes only; not serialized in reports
};

struct SummaryStat {
  std::string label;
  double mean_mape = 0.0;
  double std_mape = 0.0;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
  std::size_t count = 0;
};

struct ModeReport {
  Mode mode = Mode::ll;
  std::vector<std::string> labels;  // "node1".. for LL, "global" otherwise
  std::vector<RunRecord> runs;      // fold-major, then seed

  /// Mean and population std over runs for every label; LL adds "node_mean".
  std::vector<SummaryStat> summarize() const;
  /// The single row shown in plot data: node_mean for LL, global otherwise.
  SummaryStat headline() const;
  std::optional<SummaryStat> find(std::string_view label) const;
};

struct RunReport {
  std::string scenario;
  std::vector<std::size_t> folds;
  std::vector<std::uint64_t> seeds;
  std::vector<ModeReport> modes;
  double wall_time_s = 0.0;  // informational; never written to report files

  const ModeReport* find(Mode mode) const;
};

/// Every (fold, seed, mode) combination for folds 0..folds-1. Deterministic
/// for any value of config.jobs.
RunReport run_case_study(std::span<const DataPoint> pool, ScenarioName scenario, std::span<const Mode> modes,
                         std::size_t folds, std::span<const std::uint64_t> seeds, const ExperimentConfig& config);

// Report I/O.

enum class ReportFormat { csv, json, plotdata };

std::string_view to_string(ReportFormat format);
ReportFormat parse_report_format(std::string_view name);

inline constexpr std::string_view kReportCsvHeader = "kind,scenario,mode,label,fold,seed,mape,rmse,n,value";
inline constexpr std::string_view kPlotdataHeader = "mode,label,mean_mape,std_mape,mean_rmse,std_rmse";

void write_report_csv(const RunReport& report, std::ostream& out);
void write_report_json(const RunReport& report, std::ostream& out);
void write_plotdata(const RunReport& report, std::ostream& out);

struct PlotRow {
  std::string mode;
  std::string label;
  double mean_mape = 0.0;
  double std_mape = 0.0;
  double mean_rmse = 0.0;
  double std_rmse = 0.0;
};
std::vector<PlotRow> plot_rows(const RunReport& report);
void write_plot_rows(std::span<const PlotRow> rows, std::ostream& out);

/// Writes the report in one format. Throws IoError if the path is unwritable.
void emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& path);

/// Rebuild a report from its CSV or JSON form. Throws ParseError on schema
/// violations.
RunReport load_report_csv(std::istream& in);
RunReport load_report_json(std::istream& in);
/// Dispatches on the file extension (.json, otherwise CSV).
RunReport load_report(const std::filesystem::path& path);

}  // namespace swarmcap
