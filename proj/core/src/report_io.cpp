#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "swarmcap/errors.hpp"
#include "swarmcap/harness.hpp"

namespace swarmcap {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

template <class T>
T parse_field(std::string_view text, std::size_t row, std::string_view column) {
  T v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ParseError(row, "column " + std::string(column) + ": malformed value '" + std::string(text) + "'");
  }
  return v;
}

// Accumulates rows into a report, creating modes, labels and runs on first
// sight. Runs are keyed by (fold, seed) and kept in insertion order.
class ReportBuilder {
 public:
  void scenario(std::string_view name, std::size_t row) {
    if (report_.scenario.empty()) {
      report_.scenario = std::string(name);
    } else if (report_.scenario != name) {
      throw ParseError(row, "mixed scenarios in one report");
    }
  }

  RunRecord& run(Mode mode, std::size_t fold, std::uint64_t seed) {
    ModeReport& m = mode_report(mode);
    for (auto& r : m.runs) {
      if (r.fold == fold && r.seed == seed) return r;
    }
    m.runs.push_back(RunRecord{fold, seed, {}, {}, {}});
    if (std::find(report_.folds.begin(), report_.folds.end(), fold) == report_.folds.end()) report_.folds.push_back(fold);
    if (std::find(report_.seeds.begin(), report_.seeds.end(), seed) == report_.seeds.end()) report_.seeds.push_back(seed);
    return m.runs.back();
  }

  void metric(Mode mode, std::string_view label, std::size_t fold, std::uint64_t seed, Metrics value,
              std::size_t row) {
    ModeReport& m = mode_report(mode);
    auto it = std::find(m.labels.begin(), m.labels.end(), label);
    if (it == m.labels.end()) {
      m.labels.emplace_back(label);
      it = m.labels.end() - 1;
    }
    const auto index = static_cast<std::size_t>(it - m.labels.begin());
    RunRecord& r = run(mode, fold, seed);
    if (r.metrics.size() != index) throw ParseError(row, "metric rows out of label order");
    r.metrics.push_back(value);
  }

  RunReport finish() {
    std::sort(report_.modes.begin(), report_.modes.end(),
              [](const ModeReport& a, const ModeReport& b) { return a.mode < b.mode; });
    for (const auto& m : report_.modes) {
      for (const auto& r : m.runs) {
        if (r.metrics.size() != m.labels.size()) throw ParseError(0, "incomplete run in mode " + std::string(to_string(m.mode)));
      }
    }
    return std::move(report_);
  }

 private:
  ModeReport& mode_report(Mode mode) {
    for (auto& m : report_.modes) {
      if (m.mode == mode) return m;
    }
    report_.modes.push_back(ModeReport{mode, {}, {}});
    return report_.modes.back();
  }

  RunReport report_;
};

Mode parse_mode_field(std::string_view text, std::size_t row) {
  try {
    return parse_mode(text);
  } catch (const ConfigError& e) {
    throw ParseError(row, e.what());
  }
}

}  // namespace

std::string_view to_string(ReportFormat format) {
  switch (format) {
    case ReportFormat::csv: return "csv";
    case ReportFormat::json: return "json";
    case ReportFormat::plotdata: return "plotdata";
  }
  return "unknown";
}

ReportFormat parse_report_format(std::string_view name) {
  for (const auto f : {ReportFormat::csv, ReportFormat::json, ReportFormat::plotdata}) {
    if (to_string(f) == name) return f;
  }
  throw ConfigError("unknown report format '" + std::string(name) + "'");
}

void write_report_csv(const RunReport& report, std::ostream& out) {
  out << kReportCsvHeader << '\n';
  for (const auto& m : report.modes) {
    const auto mode = to_string(m.mode);
    for (const auto& r : m.runs) {
      for (std::size_t l = 0; l < m.labels.size(); ++l) {
        const Metrics& x = r.metrics.at(l);
        out << "raw," << report.scenario << ',' << mode << ',' << m.labels[l] << ',' << r.fold << ',' << r.seed << ','
            << format_double(x.mape) << ',' << format_double(x.rmse) << ',' << x.n << ",\n";
      }
      for (std::size_t i = 0; i < r.final_weights.size(); ++i) {
        out << "weight," << report.scenario << ',' << mode << ",node" << (i + 1) << ',' << r.fold << ',' << r.seed
            << ",,,," << format_double(r.final_weights[i]) << '\n';
      }
    }
    for (const auto& s : m.summarize()) {
      out << "mean," << report.scenario << ',' << mode << ',' << s.label << ",,," << format_double(s.mean_mape) << ','
          << format_double(s.mean_rmse) << ',' << s.count << ",\n";
      out << "std," << report.scenario << ',' << mode << ',' << s.label << ",,," << format_double(s.std_mape) << ','
          << format_double(s.std_rmse) << ',' << s.count << ",\n";
    }
  }
}

void write_report_json(const RunReport& report, std::ostream& out) {
  ordered_json doc;
  doc["scenario"] = report.scenario;
  doc["folds"] = report.folds;
  doc["seeds"] = report.seeds;
  doc["modes"] = ordered_json::array();
  for (const auto& m : report.modes) {
    ordered_json jm;
    jm["mode"] = to_string(m.mode);
    jm["labels"] = m.labels;
    jm["runs"] = ordered_json::array();
    for (const auto& r : m.runs) {
      ordered_json jr;
      jr["fold"] = r.fold;
      jr["seed"] = r.seed;
      jr["metrics"] = ordered_json::array();
      for (std::size_t l = 0; l < m.labels.size(); ++l) {
        jr["metrics"].push_back(
            {{"label", m.labels[l]}, {"mape", r.metrics[l].mape}, {"rmse", r.metrics[l].rmse}, {"n", r.metrics[l].n}});
      }
      if (!r.final_weights.empty()) jr["final_weights"] = r.final_weights;
      jm["runs"].push_back(std::move(jr));
    }
    jm["summary"] = ordered_json::array();
    for (const auto& s : m.summarize()) {
      jm["summary"].push_back({{"label", s.label},
                               {"mean_mape", s.mean_mape},
                               {"std_mape", s.std_mape},
                               {"mean_rmse", s.mean_rmse},
                               {"std_rmse", s.std_rmse},
                               {"count", s.count}});
    }
    doc["modes"].push_back(std::move(jm));
  }
  out << doc.dump(2) << '\n';
}

std::vector<PlotRow> plot_rows(const RunReport& report) {
  std::vector<PlotRow> rows;
  for (const auto& m : report.modes) {
    const auto s = m.headline();
    rows.push_back(PlotRow{std::string(to_string(m.mode)), s.label, s.mean_mape, s.std_mape, s.mean_rmse, s.std_rmse});
  }
  return rows;
}

void write_plot_rows(std::span<const PlotRow> rows, std::ostream& out) {
  out << kPlotdataHeader << '\n';
  for (const auto& r : rows) {
    out << r.mode << ',' << r.label << ',' << format_double(r.mean_mape) << ',' << format_double(r.std_mape) << ','
        << format_double(r.mean_rmse) << ',' << format_double(r.std_rmse) << '\n';
  }
}

void write_plotdata(const RunReport& report, std::ostream& out) { write_plot_rows(plot_rows(report), out); }

void emit_report(const RunReport& report, ReportFormat format, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  switch (format) {
    case ReportFormat::csv: write_report_csv(report, out); break;
    case ReportFormat::json: write_report_json(report, out); break;
    case ReportFormat::plotdata: write_plotdata(report, out); break;
  }
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

RunReport load_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kReportCsvHeader) throw ParseError(0, "not a report CSV (header mismatch)");
  ReportBuilder builder;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto f = split_fields(line);
    if (f.size() != 10) throw ParseError(row, "expected 10 fields");
    builder.scenario(f[1], row);
    const Mode mode = parse_mode_field(f[2], row);
    if (f[0] == "raw") {
      Metrics m{parse_field<double>(f[6], row, "mape"), parse_field<double>(f[7], row, "rmse"),
                parse_field<std::size_t>(f[8], row, "n")};
      builder.metric(mode, f[3], parse_field<std::size_t>(f[4], row, "fold"),
                     parse_field<std::uint64_t>(f[5], row, "seed"), m, row);
    } else if (f[0] == "weight") {
      auto& run = builder.run(mode, parse_field<std::size_t>(f[4], row, "fold"),
                              parse_field<std::uint64_t>(f[5], row, "seed"));
      run.final_weights.push_back(parse_field<double>(f[9], row, "value"));
    } else if (f[0] != "mean" && f[0] != "std") {
      throw ParseError(row, "unknown row kind '" + std::string(f[0]) + "'");
    }
  }
  return builder.finish();
}

RunReport load_report_json(std::istream& in) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("invalid JSON: ") + e.what());
  }
  try {
    RunReport report;
    report.scenario = doc.at("scenario").get<std::string>();
    report.folds = doc.at("folds").get<std::vector<std::size_t>>();
    report.seeds = doc.at("seeds").get<std::vector<std::uint64_t>>();
    for (const auto& jm : doc.at("modes")) {
      ModeReport m;
      m.mode = parse_mode_field(jm.at("mode").get<std::string>(), 0);
      m.labels = jm.at("labels").get<std::vector<std::string>>();
      for (const auto& jr : jm.at("runs")) {
        RunRecord r;
        r.fold = jr.at("fold").get<std::size_t>();
        r.seed = jr.at("seed").get<std::uint64_t>();
        for (const auto& jx : jr.at("metrics")) {
          r.metrics.push_back(
              Metrics{jx.at("mape").get<double>(), jx.at("rmse").get<double>(), jx.at("n").get<std::size_t>()});
        }
        if (r.metrics.size() != m.labels.size()) throw ParseError(0, "run metric count does not match labels");
        if (jr.contains("final_weights")) r.final_weights = jr.at("final_weights").get<std::vector<double>>();
        m.runs.push_back(std::move(r));
      }
      report.modes.push_back(std::move(m));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, std::string("report JSON schema mismatch: ") + e.what());
  }
}

RunReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return path.extension() == ".json" ? load_report_json(in) : load_report_csv(in);
}

}  // namespace swarmcap
