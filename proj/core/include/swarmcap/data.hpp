#pragma once

// Battery relaxation data: operating conditions, feature extraction,
// the synthetic degradation generator, corruption operators, scenario
// partitioning, k-fold splits, min-max normalization and CSV I/O.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swarmcap/model.hpp"

namespace swarmcap {

/// Cycling condition, written as "CY{temperature}-{charge}/{discharge}",
/// e.g. CY45-0.5/1 is 45 degC, 0.5C charge, 1C discharge.
struct Condition {
  double temperature_c = 25.0;
  double charge_c_rate = 0.5;
  double discharge_c_rate = 1.0;

  std::string tag() const;
  /// Throws InputError on a malformed tag.
  static Condition parse(std::string_view tag);

  friend bool operator==(const Condition&, const Condition&) = default;
};

namespace conditions {
Condition cy25_025();
Condition cy25_05();
Condition cy25_1();
Condition cy45_05();
}  // namespace conditions

/// Per-condition cell and point counts of the reference dataset, in table order.
struct ConditionQuota {
  Condition condition;
  std::size_t cells;
  std::size_t points;
};
std::span<const ConditionQuota> reference_composition();

bool is_supported(const Condition& c);

struct RelaxationCurve {
  std::vector<double> time_s;
  std::vector<double> voltage_v;

  static constexpr std::size_t kMinSamples = 8;
  /// Throws InputError unless sizes match, >= 8 samples, voltages finite and
  /// times strictly increasing.
  void validate() const;
};

struct FeatureVector {
  double variance = 0.0;  // V^2
  double skewness = 0.0;
  double max_voltage = 0.0;  // V

  std::array<double, 3> as_array() const { return {variance, skewness, max_voltage}; }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Population variance, skewness m3 / m2^1.5 (0 when m2 < 1e-15) and maximum
/// of the voltage samples. Independent of sample order.
FeatureVector extract_features(const RelaxationCurve& curve);

/// The same statistics over a bare voltage sample (any nonempty size).
FeatureVector moment_features(std::span<const double> voltages);

struct DataPoint {
  std::string cell_id;
  std::uint32_t cycle_index = 0;
  Condition condition;           // true generation condition
  Condition recorded_condition;  // what the node's metadata claims
  FeatureVector features;
  double capacity_ah = 0.0;
  bool tampered = false;  // ground truth only; never fed to learners

  friend bool operator==(const DataPoint&, const DataPoint&) = default;
};

/// Constants of the synthetic degradation and relaxation model. Temperature
/// offsets scale with (T - 25) / 20, so they apply in full at 45 degC.
struct GeneratorParams {
  double nominal_capacity_ah = 3.5;
  double cell_capacity_spread = 0.0;  // relative half-width of per-cell Q0 jitter

  double fade_depth_mean = 0.21;
  double fade_depth_spread = 0.05;  // per-cell uniform half-width
  double fade_depth_hot_offset = 0.08;
  double fade_shape_min = 0.8;
  double fade_shape_max = 1.2;

  double ocv_base_v = 3.9;   // V_ocv = ocv_base_v + ocv_soh_gain * SOH
  double ocv_soh_gain_v = 0.3;

  double amp_fast_v = 0.02;   // A1 at SOH = 1
  double amp_fast_fade_gain_v = 0.06;
  double amp_slow_v = 0.03;   // A2 at SOH = 1
  double amp_slow_fade_gain_v = 0.08;
  double amp_hot_offset_v = -0.008;
  double amp_charge_rate_gain = 1.0;  // A1 *= 1 + gain * (charge rate - 0.5)

  double tau_fast_s = 10.0;  // scaled by (2 - SOH)
  double tau_slow_s = 100.0;
  double tau_fast_hot_offset_s = -2.0;
  double tau_slow_hot_offset_s = -55.0;

  double voltage_noise_v = 1e-3;
  std::size_t curve_samples = 120;
  double curve_duration_s = 1800.0;

  /// Throws ConfigError on out-of-range constants.
  void validate() const;
};

/// Overrides any constant from a JSON object; unknown keys throw ConfigError
/// naming the key.
GeneratorParams generator_params_from_json(std::string_view json_text, GeneratorParams base = {});
std::string generator_params_to_json(const GeneratorParams& params);

/// Relaxation curve of one cell at a given state of health.
RelaxationCurve relaxation_curve(const Condition& condition, double soh, const GeneratorParams& params,
                                 std::uint64_t noise_seed);

/// Capacity fade trajectory plus one relaxation curve per cycle.
std::vector<DataPoint> generate_cell(const Condition& condition, std::uint64_t cell_seed, std::size_t n_cycles,
                                     const GeneratorParams& params = {}, std::string_view cell_id = {});

/// The full pool with the reference composition (21166 points over 63 cells).
std::vector<DataPoint> generate_dataset(std::uint64_t seed, const GeneratorParams& params = {});

// Corruption operators.

/// Labels permuted by a seeded single-cycle permutation (no label keeps its
/// position); features untouched, tampered flag set. Needs >= 2 points.
std::vector<DataPoint> tamper_labels(std::vector<DataPoint> points, std::uint64_t seed);

/// Rewrites recorded_condition only.
std::vector<DataPoint> sensor_bias(std::vector<DataPoint> points, const Condition& recorded);

// Scenarios.

enum class ScenarioName {
  balanced,
  volume_biased,
  feature_biased_absolute,
  feature_biased_strong,
  feature_biased_light,
  quality_biased,
};

std::string_view to_string(ScenarioName name);
/// Throws ConfigError for unknown names.
ScenarioName parse_scenario_name(std::string_view name);
std::span<const ScenarioName> all_scenarios();

enum class Corruption { none, tamper_labels, sensor_bias };

struct Assignment {
  Condition condition;
  std::size_t count = 0;
  Corruption corruption = Corruption::none;
  Condition recorded{};  // used by sensor_bias
};

struct ScenarioSpec {
  ScenarioName name = ScenarioName::balanced;
  std::vector<std::vector<Assignment>> nodes;
  std::vector<Assignment> validation;
  std::vector<Assignment> test;
  std::size_t cv_folds = 5;

  std::size_t node_count() const { return nodes.size(); }
  std::size_t node_size(std::size_t node) const;
  std::size_t train_size() const;
};

ScenarioSpec make_scenario(ScenarioName name);

/// Points plus their indices into the pool they were drawn from.
struct Subset {
  std::vector<std::size_t> indices;
  std::vector<DataPoint> points;
};

struct Partition {
  std::vector<Subset> nodes;
  Subset validation;
  Subset test;

  /// Union of all node data in node order (the central-learning train set).
  std::vector<DataPoint> pooled_train() const;
};

/// Draws node, validation and test sets without replacement. Per condition a
/// fixed seeded selection is split into cv_folds blocks; validation and test
/// are taken starting at block `fold`, so they rotate across folds.
Partition partition(std::span<const DataPoint> pool, const ScenarioSpec& spec, std::size_t fold, std::uint64_t seed);

/// Seeded shuffle then contiguous split; the first (n mod k) folds get one
/// extra element.
std::vector<std::vector<std::size_t>> kfold(std::span<const std::size_t> indices, std::size_t k, std::uint64_t seed);

// Normalization.

struct NormStats {
  std::array<double, 3> feature_min{};
  std::array<double, 3> feature_max{};
  double capacity_min = 0.0;
  double capacity_max = 1.0;

  TargetScale target_scale() const { return {capacity_min, capacity_max}; }
  double restore_feature(std::size_t j, double normalized) const {
    return feature_min[j] + normalized * (feature_max[j] - feature_min[j]);
  }
  double restore_capacity(double normalized) const { return target_scale().to_physical(normalized); }
};

/// Throws InputError on empty input, ConfigError on a constant column.
NormStats fit_norm(std::span<const DataPoint> train);
SampleSet apply_norm(const NormStats& stats, std::span<const DataPoint> points);

// CSV.

inline constexpr std::string_view kDatasetCsvHeader =
    "cell_id,cycle_index,condition,recorded_condition,feature_variance,feature_skewness,feature_max,capacity_ah";

void save_csv(std::span<const DataPoint> points, std::ostream& out);
void save_csv(std::span<const DataPoint> points, const std::filesystem::path& path);
std::vector<DataPoint> load_csv(std::istream& in);
std::vector<DataPoint> load_csv(const std::filesystem::path& path);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double value);

}  // namespace swarmcap
