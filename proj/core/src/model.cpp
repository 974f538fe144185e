#include "swarmcap/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "swarmcap/errors.hpp"
#include "swarmcap/rng.hpp"

namespace swarmcap {

namespace {

struct LayerSlot {
  std::size_t n_in;
  std::size_t n_out;
  std::size_t weights;  // offset of the weight block
  std::size_t biases;   // offset of the bias block
};

std::vector<LayerSlot> layout(const Architecture& arch) {
  std::vector<LayerSlot> slots;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < arch.layer_sizes.size(); ++l) {
    const std::size_t n_in = arch.layer_sizes[l];
    const std::size_t n_out = arch.layer_sizes[l + 1];
    slots.push_back({n_in, n_out, offset, offset + n_in * n_out});
    offset += n_in * n_out + n_out;
  }
  return slots;
}

void check_params(const ParamVector& params) {
  params.arch.validate();
  if (params.values.size() != params.arch.param_count()) {
    throw ShapeError("parameter vector has " + std::to_string(params.values.size()) +
                     " values, architecture expects " + std::to_string(params.arch.param_count()));
  }
}

// Forward/backward buffers for one network; reused across samples.
class Workspace {
 public:
  explicit Workspace(const Architecture& arch) : slots_(layout(arch)) {
    activations_.resize(arch.layer_sizes.size());
    deltas_.resize(arch.layer_sizes.size());
    for (std::size_t l = 0; l < arch.layer_sizes.size(); ++l) {
      activations_[l].assign(arch.layer_sizes[l], 0.0);
      deltas_[l].assign(arch.layer_sizes[l], 0.0);
    }
  }

  double forward(const double* p, std::span<const double> input) {
    std::copy(input.begin(), input.end(), activations_[0].begin());
    const std::size_t last = slots_.size() - 1;
    for (std::size_t l = 0; l < slots_.size(); ++l) {
      const LayerSlot& s = slots_[l];
      const double* in = activations_[l].data();
      double* out = activations_[l + 1].data();
      for (std::size_t j = 0; j < s.n_out; ++j) {
        const double* w = p + s.weights + j * s.n_in;
        double z = p[s.biases + j];
        for (std::size_t i = 0; i < s.n_in; ++i) z += w[i] * in[i];
        out[j] = (l == last || z > 0.0) ? z : 0.0;
      }
    }
    return activations_.back()[0];
  }

  // Accumulates d(output)/d(params) * scale into grad. Must follow forward().
  void backward(const double* p, double scale, double* grad) {
    deltas_.back()[0] = scale;
    for (std::size_t l = slots_.size(); l-- > 0;) {
      const LayerSlot& s = slots_[l];
      const double* in = activations_[l].data();
      const double* d_out = deltas_[l + 1].data();
      double* d_in = deltas_[l].data();
      if (l > 0) std::fill(d_in, d_in + s.n_in, 0.0);
      for (std::size_t j = 0; j < s.n_out; ++j) {
        const double d = d_out[j];
        if (d == 0.0) continue;
        grad[s.biases + j] += d;
        double* gw = grad + s.weights + j * s.n_in;
        const double* w = p + s.weights + j * s.n_in;
        for (std::size_t i = 0; i < s.n_in; ++i) {
          gw[i] += d * in[i];
          if (l > 0) d_in[i] += d * w[i];
        }
      }
      if (l > 0) {
        // ReLU derivative: hidden activations are zero exactly where inactive.
        for (std::size_t i = 0; i < s.n_in; ++i) {
          if (in[i] <= 0.0) d_in[i] = 0.0;
        }
      }
    }
  }

 private:
  std::vector<LayerSlot> slots_;
  std::vector<std::vector<double>> activations_;
  std::vector<std::vector<double>> deltas_;
};

// Sum of squared errors over the selected rows; adds the gradient of
// (sum of squared errors) * grad_scale into grad when grad is non-null.
double accumulate(const ParamVector& params, const SampleSet& data, std::span<const std::size_t> rows,
                  Workspace& ws, double grad_scale, double* grad) {
  const double* p = params.values.data();
  double sse = 0.0;
  for (const std::size_t r : rows) {
    const double residual = ws.forward(p, data.row(r)) - data.y[r];
    sse += residual * residual;
    if (grad != nullptr) ws.backward(p, 2.0 * residual * grad_scale, grad);
  }
  return sse;
}

void check_samples(const ParamVector& params, const SampleSet& data, const char* what) {
  if (data.empty()) throw InputError(std::string(what) + ": empty sample set");
  if (data.width != params.arch.input_width() || data.x.size() != data.size() * data.width) {
    throw ShapeError(std::string(what) + ": sample width does not match the input layer");
  }
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

}  // namespace

Architecture Architecture::default_regressor() { return Architecture{{3, 12, 8, 1}}; }

void Architecture::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("architecture needs at least an input and an output layer");
  for (const auto n : layer_sizes) {
    if (n < 1) throw ConfigError("architecture layer sizes must be >= 1");
  }
  if (layer_sizes.back() != 1) throw ConfigError("architecture output width must be 1");
}

std::size_t Architecture::param_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    total += layer_sizes[l] * layer_sizes[l + 1] + layer_sizes[l + 1];
  }
  return total;
}

bool ParamVector::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void TrainHyper::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning_rate must be finite and nonnegative");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (optimizer == Optimizer::adam) {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
  }
}

void SampleSet::push_back(std::span<const double> features, double target) {
  if (width == 0 && empty()) width = features.size();
  if (features.size() != width) throw ShapeError("sample width mismatch");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(target);
}

ParamVector init_params(const Architecture& arch, std::uint64_t seed) {
  arch.validate();
  ParamVector params{arch, std::vector<double>(arch.param_count(), 0.0)};
  const auto slots = layout(arch);
  for (std::size_t l = 0; l < slots.size(); ++l) {
    const LayerSlot& s = slots[l];
    SplitMix64 rng(derive_seed(seed, {l}));
    const double limit = std::sqrt(6.0 / static_cast<double>(s.n_in + s.n_out));
    for (std::size_t k = 0; k < s.n_in * s.n_out; ++k) {
      params.values[s.weights + k] = rng.uniform(-limit, limit);
    }
  }
  return params;
}

double predict(const ParamVector& params, std::span<const double> features) {
  check_params(params);
  if (features.size() != params.arch.input_width()) throw InputError("predict: wrong feature count");
  for (const double f : features) {
    if (!std::isfinite(f)) throw InputError("predict: non-finite feature");
  }
  Workspace ws(params.arch);
  return ws.forward(params.values.data(), features);
}

std::vector<double> predict_all(const ParamVector& params, const SampleSet& data) {
  check_params(params);
  if (!data.empty()) check_samples(params, data, "predict_all");
  Workspace ws(params.arch);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = ws.forward(params.values.data(), data.row(i));
  return out;
}

std::vector<double> gradient(const ParamVector& params, const SampleSet& batch) {
  check_params(params);
  check_samples(params, batch, "gradient");
  Workspace ws(params.arch);
  std::vector<double> grad(params.size(), 0.0);
  const auto rows = iota_rows(batch.size());
  accumulate(params, batch, rows, ws, 1.0 / static_cast<double>(batch.size()), grad.data());
  return grad;
}

double mse(const ParamVector& params, const SampleSet& data) {
  check_params(params);
  check_samples(params, data, "mse");
  Workspace ws(params.arch);
  const auto rows = iota_rows(data.size());
  return accumulate(params, data, rows, ws, 0.0, nullptr) / static_cast<double>(data.size());
}

EpochResult train_epoch(const ParamVector& params, const SampleSet& train, const TrainHyper& hyper,
                        std::uint64_t seed, OptimizerState& state) {
  check_params(params);
  check_samples(params, train, "train_epoch");
  hyper.validate();

  EpochResult result{params, 0.0};
  std::vector<double>& p = result.params.values;
  const std::size_t n_params = p.size();
  if (hyper.optimizer == Optimizer::adam && state.m.size() != n_params) {
    state.m.assign(n_params, 0.0);
    state.v.assign(n_params, 0.0);
    state.step = 0;
  }

  auto order = iota_rows(train.size());
  SplitMix64 rng(seed);
  shuffle(std::span<std::size_t>(order), rng);

  Workspace ws(params.arch);
  std::vector<double> grad(n_params);
  double sse = 0.0;
  for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
    const std::size_t stop = std::min(order.size(), start + hyper.batch_size);
    const std::span<const std::size_t> rows(order.data() + start, stop - start);
    std::fill(grad.begin(), grad.end(), 0.0);
    sse += accumulate(result.params, train, rows, ws, 1.0 / static_cast<double>(rows.size()), grad.data());

    if (hyper.optimizer == Optimizer::sgd) {
      for (std::size_t k = 0; k < n_params; ++k) p[k] -= hyper.learning_rate * grad[k];
      continue;
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(hyper.beta1, t);
    const double correction2 = 1.0 - std::pow(hyper.beta2, t);
    for (std::size_t k = 0; k < n_params; ++k) {
      const double g = grad[k];
      state.m[k] = hyper.beta1 * state.m[k] + (1.0 - hyper.beta1) * g;
      state.v[k] = hyper.beta2 * state.v[k] + (1.0 - hyper.beta2) * g * g;
      const double m_hat = state.m[k] / correction1;
      const double v_hat = state.v[k] / correction2;
      p[k] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
    }
  }
  result.loss = sse / static_cast<double>(train.size());
  return result;
}

EpochResult train_epoch(const ParamVector& params, const SampleSet& train, const TrainHyper& hyper,
                        std::uint64_t seed) {
  OptimizerState fresh;
  return train_epoch(params, train, hyper, seed, fresh);
}

Metrics compute_metrics(std::span<const double> predicted, std::span<const double> actual) {
  if (actual.empty()) throw InputError("metrics: no data points");
  if (predicted.size() != actual.size()) throw InputError("metrics: prediction/label count mismatch");
  double ape = 0.0;
  double se = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double q = actual[i];
    if (!(q > 0.0)) throw InputError("metrics: label " + std::to_string(i) + " is not positive");
    const double err = predicted[i] - q;
    ape += std::abs(err) / q;
    se += err * err;
  }
  const auto n = static_cast<double>(actual.size());
  return Metrics{100.0 * ape / n, std::sqrt(se / n), actual.size()};
}

Metrics evaluate(const ParamVector& params, const SampleSet& data, const TargetScale& scale) {
  check_params(params);
  check_samples(params, data, "evaluate");
  auto predicted = predict_all(params, data);
  std::vector<double> actual(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    predicted[i] = scale.to_physical(predicted[i]);
    actual[i] = scale.to_physical(data.y[i]);
  }
  return compute_metrics(predicted, actual);
}

ParamVector axpy_params(std::span<const double> coefficients, std::span<const ParamVector> params_list) {
  if (params_list.empty()) throw InputError("axpy_params: empty parameter list");
  if (coefficients.size() != params_list.size()) throw InputError("axpy_params: coefficient count mismatch");
  const ParamVector& first = params_list.front();
  for (const auto& pv : params_list) {
    if (pv.arch != first.arch || pv.values.size() != first.values.size()) {
      throw ShapeError("axpy_params: architecture mismatch");
    }
  }
  ParamVector out{first.arch, std::vector<double>(first.values.size(), 0.0)};
  for (std::size_t i = 0; i < params_list.size(); ++i) {
    const double c = coefficients[i];
    const auto& src = params_list[i].values;
    for (std::size_t k = 0; k < src.size(); ++k) out.values[k] += c * src[k];
  }
  return out;
}

}  // namespace swarmcap
