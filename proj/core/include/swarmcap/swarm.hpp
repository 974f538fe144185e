#pragma once

// Swarm learning simulation with credibility-weighted parameter merging.
//
// Each synchronization cycle every node trains locally from the current
// global model, is scored on a shared validation set, and moves one of its
// CWPA counters: p when it beats the global model, n otherwise. The merge
// weight of a node is (p + alpha) / (p + n + alpha), normalized across nodes.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "swarmcap/model.hpp"

namespace swarmcap {

struct CwpaState {
  std::uint64_t p = 0;
  std::uint64_t n = 0;
  double alpha = 1.0;

  friend bool operator==(const CwpaState&, const CwpaState&) = default;
};

/// Negated validation MAPE as a fraction; 0 is a perfect model.
double credibility(const ParamVector& params, const SampleSet& validation, const TargetScale& scale);

/// p += 1 if node_score > global_score, else n += 1. Ties count against the node.
CwpaState cwpa_step(CwpaState state, double node_score, double global_score);

/// (p + alpha) / (p + n + alpha). Throws UndefinedWeightError when the
/// denominator is zero.
double cwpa_weight(const CwpaState& state);

/// Normalized weighted average, accumulated in list order and kept inside the
/// per-coordinate range of the inputs. Throws
/// DegenerateMergeError when the weights sum to zero, InputError on negative
/// or non-finite weights.
ParamVector merge(std::span<const ParamVector> params_list, std::span<const double> raw_weights);

struct NodeState {
  int node_id = 0;
  SampleSet data;
  ParamVector params;
  CwpaState cwpa;
  OptimizerState optimizer;
};

struct SwarmConfig {
  std::size_t sync_cycles = 100;
  std::size_t local_epochs_per_cycle = 1;
  double alpha = 1.0;
  bool use_cwpa = true;
  TrainHyper hyper;
  Architecture arch = Architecture::default_regressor();
  std::uint64_t seed = 0;
  /// Keep Adam moments across epochs and cycles; false restarts the optimizer
  /// at every epoch.
  bool carry_optimizer_state = true;
  /// Shifts the round-robin coordinator. Has no numeric effect.
  std::size_t coordinator_offset = 0;

  void validate() const;
};

struct NodeSyncEntry {
  int node_id = 0;
  double credibility = 0.0;
  std::uint64_t p = 0;
  std::uint64_t n = 0;
  double raw_weight = 0.0;
  double weight = 0.0;  // normalized
  double train_loss = 0.0;
};

struct SyncRecord {
  std::size_t cycle = 0;  // 1-based
  int coordinator = 0;
  double global_credibility = 0.0;  // C_a of the model entering the cycle
  std::vector<NodeSyncEntry> nodes;
  Metrics merged_validation;  // the model leaving the cycle
};

struct SyncOutcome {
  ParamVector global;
  SyncRecord record;
};

/// One cycle: local training, scoring, counter updates, merge, and
/// replacement of every node's parameters by the merged model.
SyncOutcome sync_round(std::vector<NodeState>& nodes, const ParamVector& global_prev, const SampleSet& validation,
                       const TargetScale& scale, const SwarmConfig& config, std::size_t cycle);

struct SwarmResult {
  ParamVector global;
  std::vector<SyncRecord> history;
  std::vector<NodeState> nodes;  // final node states (counters, optimizers)
};

/// Shared seed-derived initialization followed by sync_cycles rounds. Node
/// params and counters on input are ignored.
SwarmResult run_swarm(std::vector<NodeState> nodes, const SampleSet& validation, const TargetScale& scale,
                      const SwarmConfig& config);

/// Parameters every model in an experiment starts from.
ParamVector shared_init(const SwarmConfig& config);

/// Per-epoch shuffle seed of one node.
std::uint64_t epoch_seed(std::uint64_t run_seed, int node_id, std::size_t cycle, std::size_t epoch);

inline constexpr const char* kHistoryCsvHeader = "cycle,node_id,c_i,c_a,p,n,w_raw,w_norm,global_val_mape";

void write_history_csv(std::span<const SyncRecord> history, std::ostream& out);
void write_history_json(std::span<const SyncRecord> history, std::ostream& out);

}  // namespace swarmcap
