#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "swarmcap/data.hpp"
#include "swarmcap/errors.hpp"

namespace swarmcap {

namespace {

constexpr std::array<std::string_view, 8> kColumns{
    "cell_id",        "cycle_index",      "condition",   "recorded_condition",
    "feature_variance", "feature_skewness", "feature_max", "capacity_ah",
};

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_real(std::string_view text, std::size_t row, std::string_view column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ParseError(row, "column " + std::string(column) + ": malformed number '" + std::string(text) + "'");
  }
  return v;
}

std::uint32_t parse_count(std::string_view text, std::size_t row) {
  std::uint32_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(row, "column cycle_index: malformed integer '" + std::string(text) + "'");
  }
  return v;
}

Condition parse_condition(std::string_view text, std::size_t row, std::string_view column) {
  try {
    return Condition::parse(text);
  } catch (const InputError& e) {
    throw ParseError(row, "column " + std::string(column) + ": " + e.what());
  }
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

void save_csv(std::span<const DataPoint> points, std::ostream& out) {
  out << kDatasetCsvHeader << '\n';
  for (const auto& p : points) {
    if (p.cell_id.find_first_of(",\"\r\n") != std::string::npos) {
      throw InputError("save_csv: cell_id '" + p.cell_id + "' contains a delimiter");
    }
    out << p.cell_id << ',' << p.cycle_index << ',' << p.condition.tag() << ',' << p.recorded_condition.tag() << ','
        << format_double(p.features.variance) << ',' << format_double(p.features.skewness) << ','
        << format_double(p.features.max_voltage) << ',' << format_double(p.capacity_ah) << '\n';
  }
}

void save_csv(std::span<const DataPoint> points, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_csv(points, out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<DataPoint> load_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(0, "missing header");
  strip_cr(line);

  // Map each schema column to its position in this file.
  std::array<std::size_t, kColumns.size()> position{};
  position.fill(kColumns.size());
  const auto header = split(line);
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::size_t c = 0;
    while (c < kColumns.size() && kColumns[c] != header[i]) ++c;
    if (c == kColumns.size()) throw ParseError(0, "unknown column '" + std::string(header[i]) + "'");
    if (position[c] != kColumns.size()) throw ParseError(0, "duplicate column '" + std::string(header[i]) + "'");
    position[c] = i;
  }
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    if (position[c] == kColumns.size()) throw ParseError(0, "missing column '" + std::string(kColumns[c]) + "'");
  }

  std::vector<DataPoint> points;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    strip_cr(line);
    if (line.empty()) throw ParseError(row, "empty line");
    const auto f = split(line);
    if (f.size() != kColumns.size()) {
      throw ParseError(row, "expected " + std::to_string(kColumns.size()) + " fields, got " + std::to_string(f.size()));
    }
    DataPoint p;
    p.cell_id = std::string(f[position[0]]);
    p.cycle_index = parse_count(f[position[1]], row);
    p.condition = parse_condition(f[position[2]], row, kColumns[2]);
    p.recorded_condition = parse_condition(f[position[3]], row, kColumns[3]);
    p.features.variance = parse_real(f[position[4]], row, kColumns[4]);
    p.features.skewness = parse_real(f[position[5]], row, kColumns[5]);
    p.features.max_voltage = parse_real(f[position[6]], row, kColumns[6]);
    p.capacity_ah = parse_real(f[position[7]], row, kColumns[7]);
    if (p.features.variance < 0.0) throw ParseError(row, "feature_variance must be nonnegative");
    if (!(p.capacity_ah > 0.0)) throw ParseError(row, "capacity_ah must be positive");
    points.push_back(std::move(p));
  }
  return points;
}

std::vector<DataPoint> load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_csv(in);
}

}  // namespace swarmcap
