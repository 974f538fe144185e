#include "swarmcap/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>
#include <thread>

#include "swarmcap/errors.hpp"
#include "swarmcap/rng.hpp"

namespace swarmcap {

namespace {

constexpr std::array<Mode, 4> kModes{Mode::ll, Mode::sl, Mode::sl_no_cwpa, Mode::cl};

struct Moments {
  double mean = 0.0;
  double std = 0.0;
};

Moments population_moments(std::span<const double> xs) {
  Moments m;
  if (xs.empty()) return m;
  for (const double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (const double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(xs.size()));
  return m;
}

SummaryStat summarize_series(std::string label, std::span<const double> mape, std::span<const double> rmse) {
  const auto a = population_moments(mape);
  const auto b = population_moments(rmse);
  return SummaryStat{std::move(label), a.mean, a.std, b.mean, b.std, mape.size()};
}

SwarmConfig swarm_for_run(const ExperimentConfig& config, const FoldData& data) {
  SwarmConfig sc = config.swarm;
  sc.seed = run_seed(data.fold, data.seed);
  return sc;
}

// Trains one model alone for the full budget, drawing the same per-epoch
// shuffle seeds a swarm node with this id would use.
ParamVector train_isolated(const SampleSet& train, int node_id, const SwarmConfig& sc) {
  ParamVector params = shared_init(sc);
  OptimizerState optimizer;
  for (std::size_t cycle = 1; cycle <= sc.sync_cycles; ++cycle) {
    for (std::size_t e = 0; e < sc.local_epochs_per_cycle; ++e) {
      if (!sc.carry_optimizer_state) optimizer = OptimizerState{};
      params = train_epoch(params, train, sc.hyper, epoch_seed(sc.seed, node_id, cycle, e), optimizer).params;
    }
  }
  return params;
}

std::vector<std::string> labels_for(Mode mode, std::size_t node_count) {
  if (mode != Mode::ll) return {"global"};
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < node_count; ++i) labels.push_back("node" + std::to_string(i + 1));
  return labels;
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::ll: return "ll";
    case Mode::sl: return "sl";
    case Mode::sl_no_cwpa: return "sl_no_cwpa";
    case Mode::cl: return "cl";
  }
  return "unknown";
}

Mode parse_mode(std::string_view name) {
  for (const auto m : kModes) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

std::vector<Mode> parse_modes(std::string_view list) {
  std::vector<bool> seen(kModes.size(), false);
  std::size_t start = 0;
  while (start <= list.size()) {
    auto comma = list.find(',', start);
    if (comma == std::string_view::npos) comma = list.size();
    const auto item = list.substr(start, comma - start);
    if (!item.empty()) seen[static_cast<std::size_t>(parse_mode(item))] = true;
    start = comma + 1;
  }
  std::vector<Mode> modes;
  for (std::size_t i = 0; i < kModes.size(); ++i) {
    if (seen[i]) modes.push_back(kModes[i]);
  }
  if (modes.empty()) throw ConfigError("no modes selected");
  return modes;
}

std::uint64_t run_seed(std::size_t fold, std::uint64_t seed) {
  return derive_seed(seed, {hash_label("run"), fold});
}

FoldData prepare_fold(std::span<const DataPoint> pool, const ScenarioSpec& spec, std::size_t fold, std::uint64_t seed) {
  FoldData data;
  data.fold = fold;
  data.seed = seed;
  data.partition = partition(pool, spec, fold, seed);
  const auto pooled = data.partition.pooled_train();
  data.norm = fit_norm(pooled);
  for (const auto& node : data.partition.nodes) data.nodes.push_back(apply_norm(data.norm, node.points));
  data.central = apply_norm(data.norm, pooled);
  data.validation = apply_norm(data.norm, data.partition.validation.points);
  data.test = apply_norm(data.norm, data.partition.test.points);
  return data;
}

std::vector<Metrics> run_ll(const FoldData& data, const ExperimentConfig& config) {
  const SwarmConfig sc = swarm_for_run(config, data);
  sc.validate();
  std::vector<Metrics> out;
  for (std::size_t i = 0; i < data.nodes.size(); ++i) {
    const auto params = train_isolated(data.nodes[i], static_cast<int>(i + 1), sc);
    out.push_back(evaluate(params, data.test, data.norm.target_scale()));
  }
  return out;
}

Metrics run_cl(const FoldData& data, const ExperimentConfig& config) {
  const SwarmConfig sc = swarm_for_run(config, data);
  sc.validate();
  const auto params = train_isolated(data.central, 0, sc);
  return evaluate(params, data.test, data.norm.target_scale());
}

SlOutcome run_sl(const FoldData& data, const ExperimentConfig& config, bool use_cwpa) {
  SwarmConfig sc = swarm_for_run(config, data);
  sc.use_cwpa = use_cwpa;
  std::vector<NodeState> nodes(data.nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i].node_id = static_cast<int>(i + 1);
    nodes[i].data = data.nodes[i];
  }
  auto result = run_swarm(std::move(nodes), data.validation, data.norm.target_scale(), sc);
  SlOutcome out;
  out.metrics = evaluate(result.global, data.test, data.norm.target_scale());
  for (const auto& entry : result.history.back().nodes) out.final_weights.push_back(entry.weight);
  out.history = std::move(result.history);
  out.global = std::move(result.global);
  return out;
}

std::vector<SummaryStat> ModeReport::summarize() const {
  std::vector<SummaryStat> stats;
  for (std::size_t l = 0; l < labels.size(); ++l) {
    std::vector<double> mape;
    std::vector<double> rmse;
    for (const auto& run : runs) {
      mape.push_back(run.metrics.at(l).mape);
      rmse.push_back(run.metrics.at(l).rmse);
    }
    stats.push_back(summarize_series(labels[l], mape, rmse));
  }
  if (mode == Mode::ll && !labels.empty()) {
    std::vector<double> mape;
    std::vector<double> rmse;
    for (const auto& run : runs) {
      double m = 0.0;
      double r = 0.0;
      for (const auto& metric : run.metrics) {
        m += metric.mape;
        r += metric.rmse;
      }
      mape.push_back(m / static_cast<double>(run.metrics.size()));
      rmse.push_back(r / static_cast<double>(run.metrics.size()));
    }
    stats.push_back(summarize_series("node_mean", mape, rmse));
  }
  return stats;
}

SummaryStat ModeReport::headline() const {
  const auto found = find(mode == Mode::ll ? "node_mean" : "global");
  if (!found) throw InputError("mode report has no headline row");
  return *found;
}

std::optional<SummaryStat> ModeReport::find(std::string_view label) const {
  for (auto& s : summarize()) {
    if (s.label == label) return s;
  }
  return std::nullopt;
}

const ModeReport* RunReport::find(Mode mode) const {
  for (const auto& m : modes) {
    if (m.mode == mode) return &m;
  }
  return nullptr;
}

RunReport run_case_study(std::span<const DataPoint> pool, ScenarioName scenario, std::span<const Mode> modes,
                         std::size_t folds, std::span<const std::uint64_t> seeds, const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  const ScenarioSpec spec = make_scenario(scenario);
  if (folds < 1 || folds > spec.cv_folds) {
    throw ConfigError("folds must lie in [1, " + std::to_string(spec.cv_folds) + "]");
  }
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (modes.empty()) throw ConfigError("at least one mode is required");
  config.swarm.validate();

  std::vector<Mode> ordered(modes.begin(), modes.end());
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

  RunReport report;
  report.scenario = std::string(to_string(scenario));
  for (std::size_t f = 0; f < folds; ++f) report.folds.push_back(f);
  report.seeds.assign(seeds.begin(), seeds.end());
  for (const auto m : ordered) report.modes.push_back(ModeReport{m, labels_for(m, spec.node_count()), {}});

  // One slot per (fold, seed) so results land in canonical order whatever
  // thread finishes first.
  const std::size_t total = folds * seeds.size();
  std::vector<std::vector<RunRecord>> slots(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= total) return;
      try {
        const std::size_t fold = task / seeds.size();
        const std::uint64_t seed = seeds[task % seeds.size()];
        const FoldData data = prepare_fold(pool, spec, fold, seed);
        std::vector<RunRecord> records;
        for (const auto m : ordered) {
          RunRecord rec{fold, seed, {}, {}, {}};
          switch (m) {
            case Mode::ll: rec.metrics = run_ll(data, config); break;
            case Mode::cl: rec.metrics = {run_cl(data, config)}; break;
            case Mode::sl:
            case Mode::sl_no_cwpa: {
              auto sl = run_sl(data, config, m == Mode::sl);
              rec.metrics = {sl.metrics};
              rec.final_weights = std::move(sl.final_weights);
              rec.history = std::move(sl.history);
              break;
            }
          }
          records.push_back(std::move(rec));
        }
        slots[task] = std::move(records);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(total);
      }
    }
  };

  const std::size_t n_threads = std::clamp<std::size_t>(config.jobs, 1, total);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  for (auto& slot : slots) {
    for (std::size_t i = 0; i < ordered.size(); ++i) report.modes[i].runs.push_back(std::move(slot[i]));
  }
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace swarmcap
