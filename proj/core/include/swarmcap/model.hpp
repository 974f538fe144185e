#pragma once

// Small fully-connected regressor trained from scratch: ReLU hidden layers,
// linear scalar output, mean-squared-error loss on normalized targets.
//
// Parameters live in one flat vector so that nodes can exchange and merge
// them without knowing the layer structure. Canonical order, per layer:
// weight matrix (n_out rows x n_in columns, row-major), then the n_out biases.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace swarmcap {

struct Architecture {
  std::vector<std::size_t> layer_sizes;

  /// [3, 12, 8, 1]: three relaxation features into hidden layers of 12 and 8.
  static Architecture default_regressor();

  /// Throws ConfigError unless there are >= 2 layers, every size >= 1 and the
  /// output width is 1.
  void validate() const;

  std::size_t input_width() const { return layer_sizes.front(); }
  std::size_t param_count() const;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct ParamVector {
  Architecture arch;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool all_finite() const;

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

enum class Optimizer { sgd, adam };

struct TrainHyper {
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;

  void validate() const;
};

/// Error summary in physical units. `mape` is in percent.
struct Metrics {
  double mape = 0.0;
  double rmse = 0.0;  // Ah
  std::size_t n = 0;

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

/// Row-major feature matrix plus targets, both already normalized.
struct SampleSet {
  std::size_t width = 0;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return y.size(); }
  bool empty() const { return y.empty(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * width, width}; }
  void push_back(std::span<const double> features, double target);
};

/// Affine map from normalized target back to Ah.
struct TargetScale {
  double min = 0.0;
  double max = 1.0;

  double to_physical(double normalized) const { return min + normalized * (max - min); }
};

/// Glorot-uniform weights in +-sqrt(6 / (n_in + n_out)), zero biases. Each
/// layer draws from its own sub-stream of `seed`.
ParamVector init_params(const Architecture& arch, std::uint64_t seed);

/// Throws InputError on non-finite or wrongly sized input.
double predict(const ParamVector& params, std::span<const double> features);

std::vector<double> predict_all(const ParamVector& params, const SampleSet& data);

/// Gradient of mean((y_hat - y)^2) over the batch, in canonical layout.
std::vector<double> gradient(const ParamVector& params, const SampleSet& batch);

double mse(const ParamVector& params, const SampleSet& data);

/// Optimizer memory that a node carries between epochs. Empty moments are
/// lazily sized on first use.
struct OptimizerState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

struct EpochResult {
  ParamVector params;
  double loss = 0.0;  // mean squared error over the pass, pre-update per batch
};

/// One pass over `train` in mini-batches, order shuffled by `seed`.
EpochResult train_epoch(const ParamVector& params, const SampleSet& train, const TrainHyper& hyper,
                        std::uint64_t seed, OptimizerState& state);

/// Same, starting from a fresh optimizer state.
EpochResult train_epoch(const ParamVector& params, const SampleSet& train, const TrainHyper& hyper,
                        std::uint64_t seed);

/// MAPE (percent) and RMSE between physical-unit predictions and labels.
/// Throws InputError on empty/mismatched input or a nonpositive label.
Metrics compute_metrics(std::span<const double> predicted, std::span<const double> actual);

Metrics evaluate(const ParamVector& params, const SampleSet& data, const TargetScale& scale);

/// sum_i coefficients[i] * params_list[i], element-wise. Throws ShapeError if
/// architectures differ, InputError on empty or mismatched lists.
ParamVector axpy_params(std::span<const double> coefficients, std::span<const ParamVector> params_list);

}  // namespace swarmcap
