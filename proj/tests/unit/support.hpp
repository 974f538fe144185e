#pragma once

#include <cmath>
#include <vector>

#include "swarmcap/model.hpp"
#include "swarmcap/rng.hpp"

namespace swarmcap::testing {

// Random batch with targets from a fixed smooth function of the inputs.
inline SampleSet random_batch(std::size_t n, std::size_t width, std::uint64_t seed) {
  SplitMix64 rng(seed);
  SampleSet s;
  s.width = width;
  std::vector<double> row(width);
  for (std::size_t i = 0; i < n; ++i) {
    double t = 0.0;
    for (auto& v : row) {
      v = rng.uniform(-1.0, 1.0);
      t += v;
    }
    s.push_back(row, 0.5 + 0.3 * std::sin(t));
  }
  return s;
}

// Positive targets so that MAPE is defined.
inline SampleSet positive_batch(std::size_t n, std::size_t width, std::uint64_t seed) {
  SampleSet s = random_batch(n, width, seed);
  for (auto& y : s.y) y += 1.0;
  return s;
}

inline ParamVector random_params(const Architecture& arch, std::uint64_t seed, double scale = 1.0) {
  ParamVector p{arch, std::vector<double>(arch.param_count())};
  SplitMix64 rng(seed);
  for (auto& v : p.values) v = rng.uniform(-scale, scale);
  return p;
}

}  // namespace swarmcap::testing
