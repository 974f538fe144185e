#include "swarmcap/swarm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <set>
#include <string>

#include <json.hpp>

#include "swarmcap/data.hpp"
#include "swarmcap/errors.hpp"
#include "swarmcap/rng.hpp"

namespace swarmcap {

double credibility(const ParamVector& params, const SampleSet& validation, const TargetScale& scale) {
  if (validation.empty()) throw InputError("credibility: empty validation set");
  return -evaluate(params, validation, scale).mape / 100.0;
}

CwpaState cwpa_step(CwpaState state, double node_score, double global_score) {
  if (!std::isfinite(node_score) || !std::isfinite(global_score)) {
    throw InputError("cwpa_step: non-finite credibility score");
  }
  if (node_score > global_score) {
    ++state.p;
  } else {
    ++state.n;
  }
  return state;
}

double cwpa_weight(const CwpaState& state) {
  const double positive = static_cast<double>(state.p) + state.alpha;
  const double total = static_cast<double>(state.p + state.n) + state.alpha;
  if (!(total > 0.0)) throw UndefinedWeightError("cwpa_weight: no evaluations and zero offset");
  return positive / total;
}

ParamVector merge(std::span<const ParamVector> params_list, std::span<const double> raw_weights) {
  if (params_list.empty()) throw InputError("merge: no parameter vectors");
  if (params_list.size() != raw_weights.size()) throw InputError("merge: weight count mismatch");
  double total = 0.0;
  for (const double w : raw_weights) {
    if (!std::isfinite(w) || w < 0.0) throw InputError("merge: weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw DegenerateMergeError("merge: all weights are zero");
  std::vector<double> normalized(raw_weights.size());
  for (std::size_t i = 0; i < raw_weights.size(); ++i) normalized[i] = raw_weights[i] / total;
  ParamVector out = axpy_params(normalized, params_list);
  // Normalized weights may sum to 1 +- ulp; clamp so the result stays in the
  // convex hull coordinate-wise, as the exact average would.
  for (std::size_t k = 0; k < out.values.size(); ++k) {
    double lo = params_list[0].values[k];
    double hi = lo;
    for (const auto& p : params_list) {
      lo = std::min(lo, p.values[k]);
      hi = std::max(hi, p.values[k]);
    }
    out.values[k] = std::clamp(out.values[k], lo, hi);
  }
  return out;
}

void SwarmConfig::validate() const {
  if (sync_cycles < 1) throw ConfigError("sync_cycles must be >= 1");
  if (local_epochs_per_cycle < 1) throw ConfigError("local_epochs_per_cycle must be >= 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and nonnegative");
  hyper.validate();
  arch.validate();
}

ParamVector shared_init(const SwarmConfig& config) {
  return init_params(config.arch, derive_seed(config.seed, {hash_label("init")}));
}

std::uint64_t epoch_seed(std::uint64_t run_seed, int node_id, std::size_t cycle, std::size_t epoch) {
  return derive_seed(run_seed, {hash_label("epoch"), static_cast<std::uint64_t>(node_id), cycle, epoch});
}

SyncOutcome sync_round(std::vector<NodeState>& nodes, const ParamVector& global_prev, const SampleSet& validation,
                       const TargetScale& scale, const SwarmConfig& config, std::size_t cycle) {
  if (nodes.empty()) throw InputError("sync_round: no nodes");
  if (validation.empty()) throw InputError("sync_round: empty validation set");

  // Reductions run in ascending node_id order regardless of input order.
  std::vector<std::size_t> order(nodes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return nodes[a].node_id < nodes[b].node_id; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (nodes[order[i]].node_id == nodes[order[i - 1]].node_id) throw InputError("sync_round: duplicate node_id");
  }

  SyncRecord record;
  record.cycle = cycle;
  record.coordinator = nodes[order[(cycle + config.coordinator_offset) % order.size()]].node_id;
  record.global_credibility = credibility(global_prev, validation, scale);

  std::vector<ParamVector> trained;
  std::vector<double> raw;
  trained.reserve(nodes.size());
  raw.reserve(nodes.size());
  for (const std::size_t idx : order) {
    NodeState& node = nodes[idx];
    if (node.data.empty()) throw InputError("sync_round: node " + std::to_string(node.node_id) + " has no data");
    node.cwpa.alpha = config.alpha;
    double loss = 0.0;
    for (std::size_t e = 0; e < config.local_epochs_per_cycle; ++e) {
      if (!config.carry_optimizer_state) node.optimizer = OptimizerState{};
      auto step = train_epoch(node.params, node.data, config.hyper, epoch_seed(config.seed, node.node_id, cycle, e),
                              node.optimizer);
      node.params = std::move(step.params);
      loss = step.loss;
    }
    NodeSyncEntry entry;
    entry.node_id = node.node_id;
    entry.train_loss = loss;
    entry.credibility = credibility(node.params, validation, scale);
    node.cwpa = cwpa_step(node.cwpa, entry.credibility, record.global_credibility);
    entry.p = node.cwpa.p;
    entry.n = node.cwpa.n;
    entry.raw_weight = config.use_cwpa ? cwpa_weight(node.cwpa) : 1.0;
    raw.push_back(entry.raw_weight);
    trained.push_back(node.params);
    record.nodes.push_back(entry);
  }

  SyncOutcome out{merge(trained, raw), {}};
  const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
  for (auto& entry : record.nodes) entry.weight = entry.raw_weight / total;
  record.merged_validation = evaluate(out.global, validation, scale);
  for (auto& node : nodes) node.params = out.global;
  out.record = std::move(record);
  return out;
}

SwarmResult run_swarm(std::vector<NodeState> nodes, const SampleSet& validation, const TargetScale& scale,
                      const SwarmConfig& config) {
  config.validate();
  if (nodes.empty()) throw InputError("run_swarm: no nodes");
  std::sort(nodes.begin(), nodes.end(), [](const NodeState& a, const NodeState& b) { return a.node_id < b.node_id; });

  SwarmResult result;
  result.global = shared_init(config);
  for (auto& node : nodes) {
    node.params = result.global;
    node.cwpa = CwpaState{0, 0, config.alpha};
    node.optimizer = OptimizerState{};
  }
  result.history.reserve(config.sync_cycles);
  for (std::size_t cycle = 1; cycle <= config.sync_cycles; ++cycle) {
    auto outcome = sync_round(nodes, result.global, validation, scale, config, cycle);
    result.global = std::move(outcome.global);
    result.history.push_back(std::move(outcome.record));
  }
  result.nodes = std::move(nodes);
  return result;
}

void write_history_csv(std::span<const SyncRecord> history, std::ostream& out) {
  out << kHistoryCsvHeader << '\n';
  for (const auto& r : history) {
    for (const auto& e : r.nodes) {
      out << r.cycle << ',' << e.node_id << ',' << format_double(e.credibility) << ','
          << format_double(r.global_credibility) << ',' << e.p << ',' << e.n << ',' << format_double(e.raw_weight)
          << ',' << format_double(e.weight) << ',' << format_double(r.merged_validation.mape) << '\n';
    }
  }
}

void write_history_json(std::span<const SyncRecord> history, std::ostream& out) {
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : history) {
    nlohmann::ordered_json rec;
    rec["cycle"] = r.cycle;
    rec["coordinator"] = r.coordinator;
    rec["c_a"] = r.global_credibility;
    rec["global_val_mape"] = r.merged_validation.mape;
    rec["global_val_rmse"] = r.merged_validation.rmse;
    rec["nodes"] = nlohmann::ordered_json::array();
    for (const auto& e : r.nodes) {
      rec["nodes"].push_back({{"node_id", e.node_id},
                              {"c_i", e.credibility},
                              {"p", e.p},
                              {"n", e.n},
                              {"w_raw", e.raw_weight},
                              {"w_norm", e.weight},
                              {"train_loss", e.train_loss}});
    }
    doc.push_back(std::move(rec));
  }
  out << doc.dump(2) << '\n';
}

}  // namespace swarmcap
