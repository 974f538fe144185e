#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "support.hpp"
#include "swarmcap/errors.hpp"
#include "swarmcap/swarm.hpp"

using namespace swarmcap;
using swarmcap::testing::positive_batch;
using swarmcap::testing::random_batch;
using swarmcap::testing::random_params;

namespace {

// Reference merge written without axpy_params: normalize, then accumulate
// node by node in list order.
std::vector<double> brute_force_merge(const std::vector<ParamVector>& list, const std::vector<double>& raw) {
  double total = 0.0;
  for (const double w : raw) total += w;
  std::vector<double> out(list.front().size(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < list.size(); ++i) acc += (raw[i] / total) * list[i].values[k];
    out[k] = acc;
  }
  return out;
}

std::vector<NodeState> make_nodes(std::size_t count, std::size_t points) {
  std::vector<NodeState> nodes(count);
  for (std::size_t i = 0; i < count; ++i) {
    nodes[i].node_id = static_cast<int>(i + 1);
    nodes[i].data = random_batch(points, 3, 50 + i);
  }
  return nodes;
}

SwarmConfig small_config(std::size_t cycles) {
  SwarmConfig c;
  c.sync_cycles = cycles;
  c.seed = 21;
  return c;
}

const SampleSet& validation() {
  static const SampleSet v = random_batch(64, 3, 999);
  return v;
}

constexpr TargetScale kScale{2.0, 3.5};

}  // namespace

TEST_SUITE("swarm") {

TEST_CASE("credibility is negated fractional MAPE") {
  const auto p = init_params(Architecture::default_regressor(), 1);
  const auto v = validation();
  const double c = credibility(p, v, kScale);
  CHECK(c == doctest::Approx(-evaluate(p, v, kScale).mape / 100.0));
  CHECK(c <= 0.0);
  CHECK(credibility(p, v, kScale) == c);
  CHECK_THROWS_AS(credibility(p, SampleSet{3, {}, {}}, kScale), InputError);

  // A model that reproduces the labels exactly scores 0.
  const ParamVector constant{Architecture{{3, 1}}, {0.0, 0.0, 0.0, 0.25}};
  SampleSet exact;
  exact.width = 3;
  const double row[] = {0.1, 0.2, 0.3};
  exact.push_back(row, 0.25);
  CHECK(credibility(constant, exact, kScale) == 0.0);
}

TEST_CASE("cwpa_step branches") {
  CHECK(cwpa_step({}, -0.01, -0.02) == CwpaState{1, 0, 1.0});
  CHECK(cwpa_step({}, -0.02, -0.01) == CwpaState{0, 1, 1.0});
  CHECK(cwpa_step({}, -0.02, -0.02) == CwpaState{0, 1, 1.0});
  CHECK_THROWS_AS(cwpa_step({}, std::numeric_limits<double>::quiet_NaN(), 0.0), InputError);
  CHECK_THROWS_AS(cwpa_step({}, 0.0, -std::numeric_limits<double>::infinity()), InputError);
}

TEST_CASE("cwpa_weight values") {
  CHECK(cwpa_weight({0, 0, 1.0}) == 1.0);
  CHECK(cwpa_weight({3, 1, 1.0}) == doctest::Approx(0.8));
  CHECK(cwpa_weight({0, 5, 0.0}) == 0.0);
  CHECK_THROWS_AS(cwpa_weight({0, 0, 0.0}), UndefinedWeightError);
  // Always dominating vs never dominating after c cycles.
  const std::uint64_t c = 100;
  CHECK(cwpa_weight({c, 0, 1.0}) == 1.0);
  CHECK(cwpa_weight({0, c, 1.0}) == doctest::Approx(1.0 / (c + 1.0)));
}

TEST_CASE("merge matches a brute-force weighted average") {
  const auto arch = Architecture::default_regressor();
  SplitMix64 rng(77);
  for (std::size_t nodes = 2; nodes <= 8; ++nodes) {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<ParamVector> list;
      std::vector<double> raw;
      for (std::size_t i = 0; i < nodes; ++i) {
        list.push_back(random_params(arch, rng.next()));
        raw.push_back(rng.uniform(0.0, 1.0));
      }
      const auto merged = merge(list, raw);
      const auto expected = brute_force_merge(list, raw);
      for (std::size_t k = 0; k < expected.size(); ++k) CHECK(std::abs(merged.values[k] - expected[k]) <= 1e-12);
    }
  }
}

TEST_CASE("merge examples") {
  const auto arch = Architecture::default_regressor();
  const std::vector<ParamVector> two{random_params(arch, 1), random_params(arch, 2)};
  const std::vector<double> ones{1.0, 1.0};
  const auto mean = merge(two, ones);
  for (std::size_t k = 0; k < mean.size(); ++k) {
    CHECK(mean.values[k] == doctest::Approx((two[0].values[k] + two[1].values[k]) / 2.0));
  }
  const std::vector<double> twos{2.0, 2.0};
  CHECK(merge(two, twos) == mean);
  const std::vector<double> first_only{1.0, 0.0};
  CHECK(merge(two, first_only) == two[0]);
}

TEST_CASE("merge errors") {
  const auto arch = Architecture::default_regressor();
  const std::vector<ParamVector> two{random_params(arch, 1), random_params(arch, 2)};
  const std::vector<double> zeros{0.0, 0.0};
  const std::vector<double> negative{1.0, -0.5};
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(merge(two, zeros), DegenerateMergeError);
  CHECK_THROWS_AS(merge(two, negative), InputError);
  CHECK_THROWS_AS(merge(two, one), InputError);
  const std::vector<ParamVector> mixed{random_params(arch, 1), random_params(Architecture{{3, 2, 1}}, 2)};
  const std::vector<double> ones{1.0, 1.0};
  CHECK_THROWS_AS(merge(mixed, ones), ShapeError);
}

TEST_CASE("merge is a convex combination") {
  const auto arch = Architecture::default_regressor();
  SplitMix64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t nodes = 2 + rng.below(7);
    std::vector<ParamVector> list;
    std::vector<double> raw;
    for (std::size_t i = 0; i < nodes; ++i) {
      list.push_back(random_params(arch, rng.next(), 3.0));
      raw.push_back(rng.uniform(0.01, 1.0));
    }
    const auto merged = merge(list, raw);
    for (std::size_t k = 0; k < merged.size(); ++k) {
      double lo = list[0].values[k];
      double hi = lo;
      for (const auto& p : list) {
        lo = std::min(lo, p.values[k]);
        hi = std::max(hi, p.values[k]);
      }
      CHECK(merged.values[k] >= lo - 1e-12);
      CHECK(merged.values[k] <= hi + 1e-12);
    }
  }
}

TEST_CASE("single node round returns that node's trained params") {
  auto nodes = make_nodes(1, 64);
  const auto cfg = small_config(1);
  const auto start = shared_init(cfg);
  nodes[0].params = start;
  const auto expected = train_epoch(start, nodes[0].data, cfg.hyper, epoch_seed(cfg.seed, 1, 1, 0)).params;
  const auto out = sync_round(nodes, start, validation(), kScale, cfg, 1);
  CHECK(out.global == expected);
  CHECK(nodes[0].params == expected);
  REQUIRE(out.record.nodes.size() == 1);
  CHECK(out.record.nodes[0].weight == 1.0);
}

TEST_CASE("counters and weights stay consistent every cycle") {
  const auto result = run_swarm(make_nodes(3, 96), validation(), kScale, small_config(12));
  REQUIRE(result.history.size() == 12);
  for (const auto& rec : result.history) {
    double sum = 0.0;
    for (const auto& e : rec.nodes) {
      CHECK(e.p + e.n == rec.cycle);
      CHECK(e.raw_weight == doctest::Approx((e.p + 1.0) / (e.p + e.n + 1.0)));
      sum += e.weight;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
  for (const auto& node : result.nodes) {
    CHECK(node.cwpa.p + node.cwpa.n == 12);
    CHECK(node.params == result.global);
  }
}

TEST_CASE("C_a is the credibility of the model entering the cycle") {
  const auto cfg = small_config(4);
  const auto result = run_swarm(make_nodes(2, 64), validation(), kScale, cfg);
  CHECK(result.history[0].global_credibility == credibility(shared_init(cfg), validation(), kScale));
  for (std::size_t c = 1; c < result.history.size(); ++c) {
    CHECK(result.history[c].global_credibility ==
          doctest::Approx(-result.history[c - 1].merged_validation.mape / 100.0).epsilon(1e-14));
  }
}

TEST_CASE("uniform weights without CWPA") {
  auto cfg = small_config(5);
  cfg.use_cwpa = false;
  const auto result = run_swarm(make_nodes(3, 64), validation(), kScale, cfg);
  for (const auto& rec : result.history) {
    for (const auto& e : rec.nodes) {
      CHECK(e.raw_weight == 1.0);
      CHECK(e.weight == doctest::Approx(1.0 / 3.0));
    }
  }
}

TEST_CASE("identical nodes reach a merge fixed point without CWPA") {
  auto cfg = small_config(3);
  cfg.use_cwpa = false;
  const auto data = random_batch(64, 3, 8);
  // Identical data and shuffle seed give identical local models.
  const auto trained = train_epoch(shared_init(cfg), data, cfg.hyper, epoch_seed(cfg.seed, 1, 1, 0)).params;
  std::vector<ParamVector> copies(3, trained);
  const std::vector<double> ones{1.0, 1.0, 1.0};
  const auto merged = merge(copies, ones);
  for (std::size_t k = 0; k < merged.size(); ++k) CHECK(merged.values[k] == doctest::Approx(trained.values[k]).epsilon(1e-15));
}

TEST_CASE("coordinator rotation is numerically inert") {
  auto a = small_config(6);
  auto b = a;
  b.coordinator_offset = 2;
  const auto ra = run_swarm(make_nodes(3, 64), validation(), kScale, a);
  const auto rb = run_swarm(make_nodes(3, 64), validation(), kScale, b);
  CHECK(ra.global == rb.global);
  CHECK(ra.history[0].coordinator != rb.history[0].coordinator);
  for (std::size_t c = 0; c < ra.history.size(); ++c) {
    for (std::size_t i = 0; i < 3; ++i) CHECK(ra.history[c].nodes[i].weight == rb.history[c].nodes[i].weight);
  }
}

TEST_CASE("run_swarm is deterministic and independent of node order") {
  const auto cfg = small_config(5);
  const auto a = run_swarm(make_nodes(3, 64), validation(), kScale, cfg);
  auto reversed = make_nodes(3, 64);
  std::reverse(reversed.begin(), reversed.end());
  const auto b = run_swarm(reversed, validation(), kScale, cfg);
  CHECK(a.global == b.global);
  CHECK(a.global == run_swarm(make_nodes(3, 64), validation(), kScale, cfg).global);
}

TEST_CASE("optimizer state reset is an option") {
  auto carry = small_config(3);
  auto fresh = carry;
  fresh.carry_optimizer_state = false;
  const auto a = run_swarm(make_nodes(2, 64), validation(), kScale, carry);
  const auto b = run_swarm(make_nodes(2, 64), validation(), kScale, fresh);
  CHECK_FALSE(a.global == b.global);
  CHECK(a.nodes[0].optimizer.step == 3 * 2);
  CHECK(b.nodes[0].optimizer.step == 2);
}

TEST_CASE("invalid swarm input") {
  auto nodes = make_nodes(2, 32);
  nodes[1].node_id = 1;
  const auto cfg = small_config(1);
  CHECK_THROWS_AS(sync_round(nodes, shared_init(cfg), validation(), kScale, cfg, 1), InputError);
  CHECK_THROWS_AS(run_swarm({}, validation(), kScale, cfg), InputError);
  auto empty = make_nodes(2, 32);
  empty[0].data = SampleSet{3, {}, {}};
  CHECK_THROWS_AS(run_swarm(empty, validation(), kScale, cfg), InputError);
  auto bad = cfg;
  bad.sync_cycles = 0;
  CHECK_THROWS_AS(run_swarm(make_nodes(2, 32), validation(), kScale, bad), ConfigError);
  bad = cfg;
  bad.alpha = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("history export") {
  const auto result = run_swarm(make_nodes(2, 32), validation(), kScale, small_config(3));
  std::ostringstream csv;
  write_history_csv(result.history, csv);
  const auto text = csv.str();
  CHECK(text.rfind(std::string(kHistoryCsvHeader) + "\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 3 * 2);
  std::ostringstream json;
  write_history_json(result.history, json);
  CHECK(json.str().find("\"w_norm\"") != std::string::npos);
}

TEST_CASE("positive targets keep credibility finite") {
  const auto p = init_params(Architecture::default_regressor(), 2);
  CHECK(std::isfinite(credibility(p, positive_batch(20, 3, 4), TargetScale{})));
}

}  // TEST_SUITE
