#include <algorithm>
#include <array>
#include <deque>
#include <numeric>
#include <string>

#include "swarmcap/data.hpp"
#include "swarmcap/errors.hpp"
#include "swarmcap/rng.hpp"

namespace swarmcap {

namespace {

constexpr std::array<ScenarioName, 6> kScenarios{
    ScenarioName::balanced,
    ScenarioName::volume_biased,
    ScenarioName::feature_biased_absolute,
    ScenarioName::feature_biased_strong,
    ScenarioName::feature_biased_light,
    ScenarioName::quality_biased,
};

Assignment take(Condition c, std::size_t count) { return Assignment{c, count, Corruption::none, c}; }

// Node with a CY45 / CY25 mix; zero counts are dropped.
std::vector<Assignment> two_condition_node(std::size_t hot, std::size_t cold) {
  std::vector<Assignment> node;
  if (hot > 0) node.push_back(take(conditions::cy45_05(), hot));
  if (cold > 0) node.push_back(take(conditions::cy25_05(), cold));
  return node;
}

ScenarioSpec feature_biased(ScenarioName name, std::size_t minority) {
  ScenarioSpec spec;
  spec.name = name;
  spec.nodes = {two_condition_node(minority, 2400 - minority), two_condition_node(2400 - minority, minority)};
  spec.validation = two_condition_node(400, 400);
  spec.test = two_condition_node(400, 400);
  return spec;
}

}  // namespace

std::string_view to_string(ScenarioName name) {
  switch (name) {
    case ScenarioName::balanced: return "balanced";
    case ScenarioName::volume_biased: return "volume_biased";
    case ScenarioName::feature_biased_absolute: return "feature_biased_absolute";
    case ScenarioName::feature_biased_strong: return "feature_biased_strong";
    case ScenarioName::feature_biased_light: return "feature_biased_light";
    case ScenarioName::quality_biased: return "quality_biased";
  }
  return "unknown";
}

ScenarioName parse_scenario_name(std::string_view name) {
  for (const auto s : kScenarios) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

std::span<const ScenarioName> all_scenarios() { return kScenarios; }

std::size_t ScenarioSpec::node_size(std::size_t node) const {
  std::size_t total = 0;
  for (const auto& a : nodes.at(node)) total += a.count;
  return total;
}

std::size_t ScenarioSpec::train_size() const {
  std::size_t total = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) total += node_size(i);
  return total;
}

ScenarioSpec make_scenario(ScenarioName name) {
  const Condition hot = conditions::cy45_05();
  ScenarioSpec spec;
  spec.name = name;
  switch (name) {
    case ScenarioName::balanced:
      spec.nodes.assign(4, {take(hot, 2000)});
      break;
    case ScenarioName::volume_biased:
      spec.nodes = {{take(hot, 1000)}, {take(hot, 2000)}, {take(hot, 5000)}};
      break;
    case ScenarioName::feature_biased_absolute: return feature_biased(name, 0);
    case ScenarioName::feature_biased_strong: return feature_biased(name, 200);
    case ScenarioName::feature_biased_light: return feature_biased(name, 800);
    case ScenarioName::quality_biased: {
      // Node 2: 45 degC cells whose temperature sensor reports 25 degC.
      // Node 3: half of its points carry labels scrambled by a storage fault.
      Assignment biased = take(hot, 2000);
      biased.corruption = Corruption::sensor_bias;
      biased.recorded = conditions::cy25_05();
      Assignment tampered = take(hot, 1000);
      tampered.corruption = Corruption::tamper_labels;
      spec.nodes = {{take(hot, 2000)}, {biased}, {take(hot, 1000), tampered}};
      break;
    }
  }
  spec.validation = {take(hot, 1000)};
  spec.test = {take(hot, 1000)};
  return spec;
}

std::vector<DataPoint> Partition::pooled_train() const {
  std::vector<DataPoint> all;
  for (const auto& node : nodes) all.insert(all.end(), node.points.begin(), node.points.end());
  return all;
}

std::vector<std::vector<std::size_t>> kfold(std::span<const std::size_t> indices, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw InputError("kfold: k must be >= 2");
  if (indices.size() < k) {
    throw InputError("kfold: k = " + std::to_string(k) + " exceeds pool size " + std::to_string(indices.size()));
  }
  std::vector<std::size_t> order(indices.begin(), indices.end());
  SplitMix64 rng(seed);
  shuffle(std::span<std::size_t>(order), rng);
  const std::size_t base = order.size() / k;
  const std::size_t extra = order.size() % k;
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return folds;
}

std::vector<DataPoint> tamper_labels(std::vector<DataPoint> points, std::uint64_t seed) {
  if (points.size() < 2) throw InputError("tamper_labels: need at least 2 points");
  std::vector<double> labels(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) labels[i] = points[i].capacity_ah;
  // Sattolo's algorithm: a uniformly random single cycle, so no fixed points.
  SplitMix64 rng(seed);
  for (std::size_t i = labels.size() - 1; i > 0; --i) {
    std::swap(labels[i], labels[static_cast<std::size_t>(rng.below(i))]);
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    points[i].capacity_ah = labels[i];
    points[i].tampered = true;
  }
  return points;
}

std::vector<DataPoint> sensor_bias(std::vector<DataPoint> points, const Condition& recorded) {
  for (auto& p : points) p.recorded_condition = recorded;
  return points;
}

Partition partition(std::span<const DataPoint> pool, const ScenarioSpec& spec, std::size_t fold, std::uint64_t seed) {
  if (spec.cv_folds < 2) throw ConfigError("scenario needs cv_folds >= 2");
  if (fold >= spec.cv_folds) {
    throw ConfigError("fold " + std::to_string(fold) + " out of range for " + std::to_string(spec.cv_folds) +
                      "-fold split");
  }

  // Demand per condition, in order of first appearance.
  std::vector<Condition> conds;
  std::vector<std::size_t> demand;
  auto tally = [&](const Assignment& a) {
    const auto it = std::find(conds.begin(), conds.end(), a.condition);
    if (it == conds.end()) {
      conds.push_back(a.condition);
      demand.push_back(a.count);
    } else {
      demand[static_cast<std::size_t>(it - conds.begin())] += a.count;
    }
  };
  for (const auto& a : spec.validation) tally(a);
  for (const auto& a : spec.test) tally(a);
  for (const auto& node : spec.nodes) {
    for (const auto& a : node) tally(a);
  }

  std::vector<std::deque<std::size_t>> queues(conds.size());
  for (std::size_t c = 0; c < conds.size(); ++c) {
    std::vector<std::size_t> available;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (pool[i].condition == conds[c]) available.push_back(i);
    }
    if (available.size() < demand[c]) {
      throw ConfigError("scenario " + std::string(to_string(spec.name)) + " needs " + std::to_string(demand[c]) +
                        " points of " + conds[c].tag() + ", pool has " + std::to_string(available.size()));
    }
    const std::uint64_t cond_seed = derive_seed(seed, {hash_label(conds[c].tag())});
    SplitMix64 rng(derive_seed(cond_seed, {hash_label("select")}));
    shuffle(std::span<std::size_t>(available), rng);
    available.resize(demand[c]);
    if (demand[c] < spec.cv_folds) {
      queues[c].assign(available.begin(), available.end());
      continue;
    }
    const auto blocks = kfold(available, spec.cv_folds, derive_seed(cond_seed, {hash_label("folds")}));
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& block = blocks[(fold + b) % blocks.size()];
      queues[c].insert(queues[c].end(), block.begin(), block.end());
    }
  }

  auto draw = [&](const Assignment& a, Subset& into, std::uint64_t item_seed) {
    auto& q = queues[static_cast<std::size_t>(std::find(conds.begin(), conds.end(), a.condition) - conds.begin())];
    std::vector<DataPoint> picked;
    picked.reserve(a.count);
    for (std::size_t i = 0; i < a.count; ++i) {
      into.indices.push_back(q.front());
      picked.push_back(pool[q.front()]);
      q.pop_front();
    }
    switch (a.corruption) {
      case Corruption::none: break;
      case Corruption::tamper_labels: picked = tamper_labels(std::move(picked), item_seed); break;
      case Corruption::sensor_bias: picked = sensor_bias(std::move(picked), a.recorded); break;
    }
    into.points.insert(into.points.end(), std::make_move_iterator(picked.begin()),
                       std::make_move_iterator(picked.end()));
  };

  Partition out;
  for (const auto& a : spec.validation) draw(a, out.validation, 0);
  for (const auto& a : spec.test) draw(a, out.test, 0);
  out.nodes.resize(spec.nodes.size());
  for (std::size_t n = 0; n < spec.nodes.size(); ++n) {
    for (std::size_t j = 0; j < spec.nodes[n].size(); ++j) {
      draw(spec.nodes[n][j], out.nodes[n], derive_seed(seed, {hash_label("tamper"), fold, n, j}));
    }
  }
  return out;
}

NormStats fit_norm(std::span<const DataPoint> train) {
  if (train.empty()) throw InputError("fit_norm: empty training set");
  NormStats s;
  const auto first = train.front().features.as_array();
  s.feature_min = first;
  s.feature_max = first;
  s.capacity_min = s.capacity_max = train.front().capacity_ah;
  for (const auto& p : train) {
    const auto f = p.features.as_array();
    for (std::size_t j = 0; j < f.size(); ++j) {
      s.feature_min[j] = std::min(s.feature_min[j], f[j]);
      s.feature_max[j] = std::max(s.feature_max[j], f[j]);
    }
    s.capacity_min = std::min(s.capacity_min, p.capacity_ah);
    s.capacity_max = std::max(s.capacity_max, p.capacity_ah);
  }
  static constexpr std::array<const char*, 3> kNames{"feature_variance", "feature_skewness", "feature_max"};
  for (std::size_t j = 0; j < 3; ++j) {
    if (!(s.feature_max[j] > s.feature_min[j])) {
      throw ConfigError(std::string("fit_norm: column ") + kNames[j] + " is constant");
    }
  }
  if (!(s.capacity_max > s.capacity_min)) throw ConfigError("fit_norm: column capacity_ah is constant");
  return s;
}

SampleSet apply_norm(const NormStats& stats, std::span<const DataPoint> points) {
  SampleSet out;
  out.width = 3;
  out.x.reserve(points.size() * 3);
  out.y.reserve(points.size());
  for (const auto& p : points) {
    const auto f = p.features.as_array();
    for (std::size_t j = 0; j < 3; ++j) {
      out.x.push_back((f[j] - stats.feature_min[j]) / (stats.feature_max[j] - stats.feature_min[j]));
    }
    out.y.push_back((p.capacity_ah - stats.capacity_min) / (stats.capacity_max - stats.capacity_min));
  }
  return out;
}

}  // namespace swarmcap
