#include <cmath>
#include <cstdio>
#include <string>
#include <utility>

#include <json.hpp>

#include "swarmcap/data.hpp"
#include "swarmcap/errors.hpp"
#include "swarmcap/rng.hpp"

namespace swarmcap {

namespace {

using Field = double GeneratorParams::*;

// Every real-valued constant, by its config key. Order is the JSON output order.
const std::pair<const char*, Field> kRealFields[] = {
    {"nominal_capacity_ah", &GeneratorParams::nominal_capacity_ah},
    {"cell_capacity_spread", &GeneratorParams::cell_capacity_spread},
    {"fade_depth_mean", &GeneratorParams::fade_depth_mean},
    {"fade_depth_spread", &GeneratorParams::fade_depth_spread},
    {"fade_depth_hot_offset", &GeneratorParams::fade_depth_hot_offset},
    {"fade_shape_min", &GeneratorParams::fade_shape_min},
    {"fade_shape_max", &GeneratorParams::fade_shape_max},
    {"ocv_base_v", &GeneratorParams::ocv_base_v},
    {"ocv_soh_gain_v", &GeneratorParams::ocv_soh_gain_v},
    {"amp_fast_v", &GeneratorParams::amp_fast_v},
    {"amp_fast_fade_gain_v", &GeneratorParams::amp_fast_fade_gain_v},
    {"amp_slow_v", &GeneratorParams::amp_slow_v},
    {"amp_slow_fade_gain_v", &GeneratorParams::amp_slow_fade_gain_v},
    {"amp_hot_offset_v", &GeneratorParams::amp_hot_offset_v},
    {"amp_charge_rate_gain", &GeneratorParams::amp_charge_rate_gain},
    {"tau_fast_s", &GeneratorParams::tau_fast_s},
    {"tau_slow_s", &GeneratorParams::tau_slow_s},
    {"tau_fast_hot_offset_s", &GeneratorParams::tau_fast_hot_offset_s},
    {"tau_slow_hot_offset_s", &GeneratorParams::tau_slow_hot_offset_s},
    {"voltage_noise_v", &GeneratorParams::voltage_noise_v},
    {"curve_duration_s", &GeneratorParams::curve_duration_s},
};

double heat_fraction(const Condition& c) { return (c.temperature_c - 25.0) / 20.0; }

std::string two_digits(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", i);
  return buf;
}

}  // namespace

void GeneratorParams::validate() const {
  for (const auto& [key, field] : kRealFields) {
    if (!std::isfinite(this->*field)) throw ConfigError(std::string("generator constant '") + key + "' is not finite");
  }
  if (!(nominal_capacity_ah > 0.0)) throw ConfigError("nominal_capacity_ah must be positive");
  if (cell_capacity_spread < 0.0 || cell_capacity_spread >= 0.5) {
    throw ConfigError("cell_capacity_spread must lie in [0, 0.5)");
  }
  if (fade_depth_spread < 0.0) throw ConfigError("fade_depth_spread must be nonnegative");
  const double deepest = fade_depth_mean + std::max(0.0, fade_depth_hot_offset) + fade_depth_spread;
  const double shallowest = fade_depth_mean + std::min(0.0, fade_depth_hot_offset) - fade_depth_spread;
  if (shallowest < 0.0 || deepest >= 1.0) throw ConfigError("fade depth must stay within [0, 1)");
  if (!(fade_shape_min > 0.0) || fade_shape_max < fade_shape_min) {
    throw ConfigError("fade shape range must be positive and ordered");
  }
  if (!(tau_fast_s + std::min(0.0, tau_fast_hot_offset_s) > 0.0) ||
      !(tau_slow_s + std::min(0.0, tau_slow_hot_offset_s) > 0.0)) {
    throw ConfigError("relaxation time constants must stay positive");
  }
  if (voltage_noise_v < 0.0) throw ConfigError("voltage_noise_v must be nonnegative");
  if (curve_samples < RelaxationCurve::kMinSamples) throw ConfigError("curve_samples must be >= 8");
  if (!(curve_duration_s > 0.0)) throw ConfigError("curve_duration_s must be positive");
}

GeneratorParams generator_params_from_json(std::string_view json_text, GeneratorParams base) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("generator config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("generator config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "curve_samples") {
      if (!value.is_number_unsigned()) throw ConfigError("generator key 'curve_samples' must be a positive integer");
      base.curve_samples = value.get<std::size_t>();
      continue;
    }
    bool known = false;
    for (const auto& [name, field] : kRealFields) {
      if (key != name) continue;
      if (!value.is_number()) throw ConfigError("generator key '" + key + "' must be a number");
      base.*field = value.get<double>();
      known = true;
      break;
    }
    if (!known) throw ConfigError("unknown generator key '" + key + "'");
  }
  base.validate();
  return base;
}

std::string generator_params_to_json(const GeneratorParams& params) {
  nlohmann::ordered_json doc;
  for (const auto& [key, field] : kRealFields) doc[key] = params.*field;
  doc["curve_samples"] = params.curve_samples;
  return doc.dump(2);
}

RelaxationCurve relaxation_curve(const Condition& condition, double soh, const GeneratorParams& params,
                                 std::uint64_t noise_seed) {
  const double heat = heat_fraction(condition);
  const double wear = 1.0 - soh;
  const double rate_factor = 1.0 + params.amp_charge_rate_gain * (condition.charge_c_rate - 0.5);
  const double amp_fast =
      (params.amp_fast_v + params.amp_fast_fade_gain_v * wear + params.amp_hot_offset_v * heat) * rate_factor;
  const double amp_slow = params.amp_slow_v + params.amp_slow_fade_gain_v * wear + params.amp_hot_offset_v * heat;
  const double tau_fast = (params.tau_fast_s + params.tau_fast_hot_offset_s * heat) * (2.0 - soh);
  const double tau_slow = (params.tau_slow_s + params.tau_slow_hot_offset_s * heat) * (2.0 - soh);
  const double v_ocv = params.ocv_base_v + params.ocv_soh_gain_v * soh;

  const std::size_t n = params.curve_samples;
  const double dt = params.curve_duration_s / static_cast<double>(n - 1);
  SplitMix64 noise(noise_seed);
  RelaxationCurve curve;
  curve.time_s.resize(n);
  curve.voltage_v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = dt * static_cast<double>(i);
    curve.time_s[i] = t;
    curve.voltage_v[i] = v_ocv + amp_fast * std::exp(-t / tau_fast) + amp_slow * std::exp(-t / tau_slow) +
                         params.voltage_noise_v * noise.normal();
  }
  return curve;
}

std::vector<DataPoint> generate_cell(const Condition& condition, std::uint64_t cell_seed, std::size_t n_cycles,
                                     const GeneratorParams& params, std::string_view cell_id) {
  if (!is_supported(condition)) throw ConfigError("unsupported condition " + condition.tag());
  if (n_cycles < 1) throw ConfigError("generate_cell: n_cycles must be >= 1");
  params.validate();

  const double heat = heat_fraction(condition);
  SplitMix64 rng(derive_seed(cell_seed, {hash_label("fade")}));
  const double depth = params.fade_depth_mean + params.fade_depth_hot_offset * heat +
                       rng.uniform(-params.fade_depth_spread, params.fade_depth_spread);
  const double shape = rng.uniform(params.fade_shape_min, params.fade_shape_max);
  const double q0 =
      params.nominal_capacity_ah * (1.0 + rng.uniform(-params.cell_capacity_spread, params.cell_capacity_spread));

  const double horizon = static_cast<double>(n_cycles > 1 ? n_cycles - 1 : 1);
  std::vector<DataPoint> points;
  points.reserve(n_cycles);
  for (std::size_t k = 0; k < n_cycles; ++k) {
    const double soh = 1.0 - depth * std::pow(static_cast<double>(k) / horizon, shape);
    const auto curve = relaxation_curve(condition, soh, params, derive_seed(cell_seed, {hash_label("curve"), k}));
    DataPoint p;
    p.cell_id = std::string(cell_id);
    p.cycle_index = static_cast<std::uint32_t>(k);
    p.condition = condition;
    p.recorded_condition = condition;
    p.features = extract_features(curve);
    p.capacity_ah = q0 * soh;
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<DataPoint> generate_dataset(std::uint64_t seed, const GeneratorParams& params) {
  params.validate();
  std::vector<DataPoint> pool;
  std::size_t cell_index = 0;
  for (const auto& quota : reference_composition()) {
    const std::size_t base = quota.points / quota.cells;
    const std::size_t extra = quota.points % quota.cells;
    for (std::size_t c = 0; c < quota.cells; ++c, ++cell_index) {
      const std::size_t n = base + (c < extra ? 1 : 0);
      const std::string id = quota.condition.tag() + "-c" + two_digits(c + 1);
      auto cell = generate_cell(quota.condition, derive_seed(seed, {cell_index}), n, params, id);
      pool.insert(pool.end(), std::make_move_iterator(cell.begin()), std::make_move_iterator(cell.end()));
    }
  }
  return pool;
}

}  // namespace swarmcap
