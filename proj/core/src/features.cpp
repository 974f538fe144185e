#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

#include "swarmcap/data.hpp"
#include "swarmcap/errors.hpp"

namespace swarmcap {

namespace {

double parse_number(std::string_view text, std::string_view context) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc{} || ptr != last) {
    throw InputError("malformed number '" + std::string(text) + "' in " + std::string(context));
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

std::string Condition::tag() const {
  return "CY" + format_double(temperature_c) + "-" + format_double(charge_c_rate) + "/" +
         format_double(discharge_c_rate);
}

Condition Condition::parse(std::string_view tag) {
  if (tag.size() < 7 || tag.substr(0, 2) != "CY") throw InputError("malformed condition tag '" + std::string(tag) + "'");
  // The temperature may carry its own sign, so search for the separator after it.
  const auto dash = tag.find('-', 3);
  const auto slash = tag.find('/', dash == std::string_view::npos ? 0 : dash);
  if (dash == std::string_view::npos || slash == std::string_view::npos) {
    throw InputError("malformed condition tag '" + std::string(tag) + "'");
  }
  Condition c;
  c.temperature_c = parse_number(tag.substr(2, dash - 2), tag);
  c.charge_c_rate = parse_number(tag.substr(dash + 1, slash - dash - 1), tag);
  c.discharge_c_rate = parse_number(tag.substr(slash + 1), tag);
  return c;
}

namespace conditions {
Condition cy25_025() { return {25.0, 0.25, 1.0}; }
Condition cy25_05() { return {25.0, 0.5, 1.0}; }
Condition cy25_1() { return {25.0, 1.0, 1.0}; }
Condition cy45_05() { return {45.0, 0.5, 1.0}; }
}  // namespace conditions

std::span<const ConditionQuota> reference_composition() {
  static const std::array<ConditionQuota, 4> table{{
      {conditions::cy25_025(), 7, 1853},
      {conditions::cy25_05(), 19, 3278},
      {conditions::cy25_1(), 9, 260},
      {conditions::cy45_05(), 28, 15775},
  }};
  return table;
}

bool is_supported(const Condition& c) {
  const auto table = reference_composition();
  return std::any_of(table.begin(), table.end(), [&](const ConditionQuota& q) { return q.condition == c; });
}

void RelaxationCurve::validate() const {
  if (time_s.size() != voltage_v.size()) throw InputError("relaxation curve: time/voltage length mismatch");
  if (voltage_v.size() < kMinSamples) {
    throw InputError("relaxation curve: need at least 8 samples, got " + std::to_string(voltage_v.size()));
  }
  for (std::size_t i = 0; i < voltage_v.size(); ++i) {
    if (!std::isfinite(voltage_v[i]) || !std::isfinite(time_s[i])) {
      throw InputError("relaxation curve: non-finite sample");
    }
    if (i > 0 && !(time_s[i] > time_s[i - 1])) throw InputError("relaxation curve: time not strictly increasing");
  }
}

FeatureVector moment_features(std::span<const double> voltages) {
  if (voltages.empty()) throw InputError("moment_features: empty sample");
  // Sorted accumulation makes the result independent of sample order.
  // Moments are taken about the minimum first, so a constant sample gives
  // exactly zero.
  std::vector<double> v(voltages.begin(), voltages.end());
  std::sort(v.begin(), v.end());
  const auto n = static_cast<double>(v.size());
  const double lo = v.front();
  double sum = 0.0;
  for (const double x : v) sum += x - lo;
  const double mean = sum / n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (const double x : v) {
    const double d = (x - lo) - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  FeatureVector f;
  f.variance = m2;
  f.skewness = m2 < 1e-15 ? 0.0 : m3 / std::pow(m2, 1.5);
  f.max_voltage = v.back();
  return f;
}

FeatureVector extract_features(const RelaxationCurve& curve) {
  curve.validate();
  return moment_features(curve.voltage_v);
}

}  // namespace swarmcap
