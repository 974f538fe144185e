#include "cli.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "swarmcap/errors.hpp"
#include "swarmcap/swarm.hpp"

namespace swarmcap::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::uint64_t parse_u64(const std::string& text, const char* what) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(std::string("invalid ") + what + " '" + text + "'");
  }
  return v;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& s : split_list(text)) seeds.push_back(parse_u64(s, "seed"));
  if (seeds.empty()) throw ConfigError("seed list is empty");
  return seeds;
}

std::vector<ReportFormat> parse_formats(const std::vector<std::string>& names) {
  std::vector<ReportFormat> formats;
  for (const auto& n : names) {
    for (const auto& item : split_list(n)) {
      const auto f = parse_report_format(item);
      if (std::find(formats.begin(), formats.end(), f) == formats.end()) formats.push_back(f);
    }
  }
  if (formats.empty()) throw ConfigError("no report format selected");
  std::sort(formats.begin(), formats.end());
  return formats;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

template <class T>
T json_get(const nlohmann::json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::string report_extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::csv: return "report.csv";
    case ReportFormat::json: return "report.json";
    case ReportFormat::plotdata: return "plotdata.csv";
  }
  return "report";
}

// Flags recorded as optionals so that only the ones actually given override
// the config file.
struct Flags {
  std::string config_path;
  std::optional<std::string> case_name;
  std::optional<std::string> modes;
  std::optional<std::size_t> folds;
  std::optional<std::string> seeds;
  std::optional<std::uint64_t> dataset_seed;
  std::optional<std::string> out;
  std::vector<std::string> formats;
  std::optional<std::size_t> jobs;
  std::optional<std::string> data;
  std::optional<std::size_t> cycles;
};

CliConfig resolve(const Flags& flags) {
  CliConfig config;
  if (const char* env = std::getenv("SWARMCAP_SEED"); env != nullptr && *env != '\0') {
    config.dataset_seed = parse_u64(env, "SWARMCAP_SEED");
  }
  if (!flags.config_path.empty()) apply_config_json(config, read_file(flags.config_path));
  if (flags.case_name) config.case_name = *flags.case_name;
  if (flags.modes) config.modes = parse_modes(*flags.modes);
  if (flags.folds) config.folds = *flags.folds;
  if (flags.seeds) config.seeds = parse_seeds(*flags.seeds);
  if (flags.dataset_seed) config.dataset_seed = *flags.dataset_seed;
  if (flags.out) config.out = *flags.out;
  if (!flags.formats.empty()) config.formats = parse_formats(flags.formats);
  if (flags.jobs) config.jobs = *flags.jobs;
  if (flags.data) config.data = *flags.data;
  if (flags.cycles) config.sync_cycles = *flags.cycles;
  parse_scenario_name(config.case_name);
  config.experiment().swarm.validate();
  if (config.jobs < 1) throw ConfigError("jobs must be >= 1");
  return config;
}

int cmd_gen(const CliConfig& config, std::ostream& out) {
  const fs::path dir(config.out);
  ensure_dir(dir);
  const auto pool = generate_dataset(config.dataset_seed, config.generator);
  save_csv(pool, dir / "dataset.csv");

  ordered_json manifest;
  manifest["dataset_seed"] = config.dataset_seed;
  manifest["rows"] = pool.size();
  manifest["composition"] = ordered_json::array();
  for (const auto& q : reference_composition()) {
    manifest["composition"].push_back({{"condition", q.condition.tag()}, {"cells", q.cells}, {"points", q.points}});
  }
  manifest["generator"] = ordered_json::parse(generator_params_to_json(config.generator));
  write_text(dir / "generation_manifest.json", manifest.dump(2) + "\n");
  write_text(dir / "resolved_config.json", to_json(config));
  out << "wrote " << pool.size() << " rows to " << (dir / "dataset.csv").string() << '\n';
  return kOk;
}

int cmd_run(const CliConfig& config, std::ostream& out, std::ostream& err) {
  const fs::path dir(config.out);
  ensure_dir(dir);
  const auto pool = config.data ? load_csv(fs::path(*config.data)) : generate_dataset(config.dataset_seed, config.generator);
  const auto report = run_case_study(pool, parse_scenario_name(config.case_name), config.modes, config.folds,
                                     config.seeds, config.experiment());
  for (const auto f : config.formats) emit_report(report, f, dir / report_extension(f));

  for (const auto& m : report.modes) {
    if (m.mode != Mode::sl && m.mode != Mode::sl_no_cwpa) continue;
    const fs::path hist = dir / "history";
    ensure_dir(hist);
    for (const auto& r : m.runs) {
      const std::string stem =
          std::string(to_string(m.mode)) + "_fold" + std::to_string(r.fold) + "_seed" + std::to_string(r.seed);
      std::ostringstream csv;
      write_history_csv(r.history, csv);
      write_text(hist / (stem + ".csv"), csv.str());
      std::ostringstream json;
      write_history_json(r.history, json);
      write_text(hist / (stem + ".json"), json.str());
    }
  }
  write_text(dir / "resolved_config.json", to_json(config));

  write_plotdata(report, out);
  err << "case " << report.scenario << " finished in " << report.wall_time_s << " s\n";
  return kOk;
}

int cmd_compare(const std::vector<std::string>& paths, const std::optional<std::string>& out_dir, std::ostream& out) {
  if (paths.empty()) throw ConfigError("compare needs at least one report");
  std::vector<RunReport> reports;
  for (const auto& p : paths) {
    try {
      reports.push_back(load_report(p));
    } catch (const ParseError& e) {
      throw ConfigError(p + ": " + e.what());
    } catch (const IoError& e) {
      throw ConfigError(e.what());
    }
  }
  std::vector<PlotRow> rows;
  if (reports.size() == 1) {
    rows = plot_rows(reports.front());
  } else {
    std::map<std::string, int> scenario_count;
    for (const auto& r : reports) ++scenario_count[r.scenario];
    for (std::size_t i = 0; i < reports.size(); ++i) {
      std::string prefix = reports[i].scenario;
      if (scenario_count[prefix] > 1) prefix += "@" + fs::path(paths[i]).filename().string();
      for (auto row : plot_rows(reports[i])) {
        row.label = prefix + "/" + row.label;
        rows.push_back(std::move(row));
      }
    }
  }
  std::ostringstream text;
  write_plot_rows(rows, text);
  if (out_dir) {
    ensure_dir(*out_dir);
    write_text(fs::path(*out_dir) / "compare_plotdata.csv", text.str());
  } else {
    out << text.str();
  }
  return kOk;
}

}  // namespace

ExperimentConfig CliConfig::experiment() const {
  ExperimentConfig e;
  e.swarm.sync_cycles = sync_cycles;
  e.swarm.local_epochs_per_cycle = local_epochs_per_cycle;
  e.swarm.alpha = alpha;
  e.swarm.carry_optimizer_state = carry_optimizer_state;
  e.swarm.hyper = hyper;
  e.jobs = jobs;
  return e;
}

void apply_config_json(CliConfig& config, const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "dataset_seed") {
      config.dataset_seed = json_get<std::uint64_t>(value, key);
    } else if (key == "generator") {
      config.generator = generator_params_from_json(value.dump(), config.generator);
    } else if (key == "case") {
      config.case_name = json_get<std::string>(value, key);
    } else if (key == "modes") {
      config.modes = value.is_string() ? parse_modes(value.get<std::string>())
                                       : parse_modes([&] {
                                           std::string joined;
                                           for (const auto& m : json_get<std::vector<std::string>>(value, key)) joined += m + ",";
                                           return joined;
                                         }());
    } else if (key == "folds") {
      config.folds = json_get<std::size_t>(value, key);
    } else if (key == "seeds") {
      config.seeds = json_get<std::vector<std::uint64_t>>(value, key);
      if (config.seeds.empty()) throw ConfigError("config key 'seeds' is empty");
    } else if (key == "hyper") {
      if (!value.is_object()) throw ConfigError("config key 'hyper' must be an object");
      for (const auto& [hk, hv] : value.items()) {
        const std::string full = "hyper." + hk;
        if (hk == "learning_rate") {
          config.hyper.learning_rate = json_get<double>(hv, full);
        } else if (hk == "optimizer") {
          const auto name = json_get<std::string>(hv, full);
          if (name == "adam") {
            config.hyper.optimizer = Optimizer::adam;
          } else if (name == "sgd") {
            config.hyper.optimizer = Optimizer::sgd;
          } else {
            throw ConfigError("unknown optimizer '" + name + "'");
          }
        } else if (hk == "beta1") {
          config.hyper.beta1 = json_get<double>(hv, full);
        } else if (hk == "beta2") {
          config.hyper.beta2 = json_get<double>(hv, full);
        } else if (hk == "epsilon") {
          config.hyper.epsilon = json_get<double>(hv, full);
        } else if (hk == "batch_size") {
          config.hyper.batch_size = json_get<std::size_t>(hv, full);
        } else {
          throw ConfigError("unknown config key '" + full + "'");
        }
      }
    } else if (key == "sync_cycles") {
      config.sync_cycles = json_get<std::size_t>(value, key);
    } else if (key == "local_epochs_per_cycle") {
      config.local_epochs_per_cycle = json_get<std::size_t>(value, key);
    } else if (key == "alpha") {
      config.alpha = json_get<double>(value, key);
    } else if (key == "carry_optimizer_state") {
      config.carry_optimizer_state = json_get<bool>(value, key);
    } else if (key == "out") {
      config.out = json_get<std::string>(value, key);
    } else if (key == "formats") {
      config.formats = parse_formats(json_get<std::vector<std::string>>(value, key));
    } else if (key == "jobs") {
      config.jobs = json_get<std::size_t>(value, key);
    } else if (key == "data") {
      config.data = json_get<std::string>(value, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

std::string to_json(const CliConfig& config) {
  ordered_json doc;
  doc["dataset_seed"] = config.dataset_seed;
  doc["generator"] = ordered_json::parse(generator_params_to_json(config.generator));
  doc["case"] = config.case_name;
  doc["modes"] = ordered_json::array();
  for (const auto m : config.modes) doc["modes"].push_back(to_string(m));
  doc["folds"] = config.folds;
  doc["seeds"] = config.seeds;
  doc["hyper"] = {{"learning_rate", config.hyper.learning_rate},
                  {"optimizer", config.hyper.optimizer == Optimizer::adam ? "adam" : "sgd"},
                  {"beta1", config.hyper.beta1},
                  {"beta2", config.hyper.beta2},
                  {"epsilon", config.hyper.epsilon},
                  {"batch_size", config.hyper.batch_size}};
  doc["sync_cycles"] = config.sync_cycles;
  doc["local_epochs_per_cycle"] = config.local_epochs_per_cycle;
  doc["alpha"] = config.alpha;
  doc["carry_optimizer_state"] = config.carry_optimizer_state;
  doc["out"] = config.out;
  doc["formats"] = ordered_json::array();
  for (const auto f : config.formats) doc["formats"].push_back(to_string(f));
  doc["jobs"] = config.jobs;
  doc["data"] = config.data ? ordered_json(*config.data) : ordered_json(nullptr);
  return doc.dump(2) + "\n";
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Swarm learning simulator for battery capacity estimation"};
  app.require_subcommand(1);
  Flags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config_path, "JSON config file (flags override it)");
    sub->add_option("--out", flags.out, "Output directory");
    sub->add_option("--dataset-seed", flags.dataset_seed, "Seed of the synthetic dataset (default: $SWARMCAP_SEED or 0)");
  };

  auto* gen = app.add_subcommand("gen", "Generate the synthetic relaxation-feature dataset");
  add_common(gen);

  auto* run_cmd = app.add_subcommand("run", "Run one case study and write reports");
  add_common(run_cmd);
  run_cmd->add_option("--case", flags.case_name, "Scenario name");
  run_cmd->add_option("--modes", flags.modes, "Comma-separated subset of ll,sl,sl_no_cwpa,cl");
  run_cmd->add_option("--folds", flags.folds, "Number of cross-validation folds to run (1-5)");
  run_cmd->add_option("--seeds", flags.seeds, "Comma-separated run seeds");
  run_cmd->add_option("--format", flags.formats, "Report formats: csv, json, plotdata (repeat or comma-separate)");
  run_cmd->add_option("--jobs", flags.jobs, "Concurrent (fold, seed) runs");
  run_cmd->add_option("--data", flags.data, "Dataset CSV to use instead of generating one");
  run_cmd->add_option("--cycles", flags.cycles, "Synchronization cycles (training budget)");

  auto* compare = app.add_subcommand("compare", "Merge plot data of several reports");
  std::vector<std::string> report_paths;
  std::optional<std::string> compare_out;
  compare->add_option("reports", report_paths, "Report files (.json or report CSV)");
  compare->add_option("--out", compare_out, "Directory for compare_plotdata.csv (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (compare->parsed()) return cmd_compare(report_paths, compare_out, out);
    const CliConfig config = resolve(flags);
    if (gen->parsed()) return cmd_gen(config, out);
    return cmd_run(config, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"swarmcap"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace swarmcap::cli
