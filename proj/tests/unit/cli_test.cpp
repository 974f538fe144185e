#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "swarmcap/errors.hpp"

namespace fs = std::filesystem;
using namespace swarmcap;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("swarmcap_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::size_t lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

// A small but complete run: one fold, one seed, two cycles.
std::vector<std::string> quick_run(const fs::path& out, const std::string& scenario, const std::string& modes) {
  return {"run", "--case", scenario, "--modes", modes, "--folds", "1", "--seeds", "1", "--cycles", "2", "--out", out.string()};
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config file keys and precedence") {
  cli::CliConfig c;
  cli::apply_config_json(c, R"({"case": "volume_biased", "folds": 2, "seeds": [4, 5],
                                 "hyper": {"batch_size": 64}, "generator": {"voltage_noise_v": 0.0}})");
  CHECK(c.case_name == "volume_biased");
  CHECK(c.folds == 2);
  CHECK(c.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(c.hyper.batch_size == 64);
  CHECK(c.generator.voltage_noise_v == 0.0);
  CHECK(c.experiment().swarm.hyper.batch_size == 64);

  try {
    cli::apply_config_json(c, R"({"foldz": 2})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("foldz") != std::string::npos);
  }
  CHECK_THROWS_AS(cli::apply_config_json(c, R"({"folds": "two"})"), ConfigError);
  CHECK_THROWS_AS(cli::apply_config_json(c, R"({"hyper": {"lr": 1}})"), ConfigError);
  CHECK_THROWS_AS(cli::apply_config_json(c, "not json"), ConfigError);
}

TEST_CASE("resolved config round-trips through JSON") {
  cli::CliConfig c;
  c.case_name = "quality_biased";
  c.modes = {Mode::sl, Mode::sl_no_cwpa};
  c.data = "x.csv";
  cli::CliConfig back;
  cli::apply_config_json(back, cli::to_json(c));
  CHECK(cli::to_json(back) == cli::to_json(c));
}

TEST_CASE("usage errors exit with 2") {
  CHECK(invoke({}).code == cli::kUsageError);
  CHECK(invoke({"frobnicate"}).code == cli::kUsageError);
  const auto dir = scratch("usage");
  const auto unknown = invoke({"run", "--case", "nosuch", "--out", dir.string()});
  CHECK(unknown.code == cli::kUsageError);
  CHECK(unknown.err.find("nosuch") != std::string::npos);
  CHECK(invoke({"run", "--modes", "ll,xx", "--out", dir.string()}).code == cli::kUsageError);
  CHECK(invoke({"run", "--folds", "9", "--cycles", "1", "--out", dir.string()}).code == cli::kUsageError);
  CHECK(invoke({"compare"}).code == cli::kUsageError);
  CHECK(invoke({"compare", (dir / "missing.csv").string()}).code == cli::kUsageError);

  write(dir / "bad.json", R"({"generator": {"tau_fast": 3}})");
  const auto bad = invoke({"gen", "--config", (dir / "bad.json").string(), "--out", dir.string()});
  CHECK(bad.code == cli::kUsageError);
  CHECK(bad.err.find("tau_fast") != std::string::npos);

  write(dir / "garbage.csv", "not,a,report\n");
  CHECK(invoke({"compare", (dir / "garbage.csv").string()}).code == cli::kUsageError);
}

TEST_CASE("runtime failures exit with 1") {
  const auto dir = scratch("runtime");
  write(dir / "blocker", "");
  CHECK(invoke({"gen", "--out", (dir / "blocker" / "sub").string()}).code == cli::kRuntimeFailure);
  CHECK(invoke({"run", "--data", (dir / "nope.csv").string(), "--cycles", "1", "--out", dir.string()}).code ==
        cli::kRuntimeFailure);
}

TEST_CASE("help exits cleanly") { CHECK(invoke({"--help"}).code == cli::kOk); }

TEST_CASE("gen writes dataset, manifest and resolved config") {
  const auto dir = scratch("gen");
  const auto r = invoke({"gen", "--dataset-seed", "7", "--out", dir.string()});
  REQUIRE(r.code == cli::kOk);
  CHECK(lines(slurp(dir / "dataset.csv")) == 21167);
  CHECK(slurp(dir / "generation_manifest.json").find("\"dataset_seed\": 7") != std::string::npos);
  CHECK(slurp(dir / "resolved_config.json").find("\"dataset_seed\": 7") != std::string::npos);
}

TEST_CASE("environment seed is a fallback below the config file") {
  const auto dir = scratch("env");
  ::setenv("SWARMCAP_SEED", "11", 1);
  REQUIRE(invoke({"gen", "--out", (dir / "a").string()}).code == cli::kOk);
  write(dir / "cfg.json", R"({"dataset_seed": 12})");
  REQUIRE(invoke({"gen", "--config", (dir / "cfg.json").string(), "--out", (dir / "b").string()}).code == cli::kOk);
  ::unsetenv("SWARMCAP_SEED");
  CHECK(slurp(dir / "a" / "resolved_config.json").find("\"dataset_seed\": 11") != std::string::npos);
  CHECK(slurp(dir / "b" / "resolved_config.json").find("\"dataset_seed\": 12") != std::string::npos);
}

TEST_CASE("run writes every report format and SL history") {
  const auto dir = scratch("run");
  const auto r = invoke(quick_run(dir, "quality_biased", "sl,sl_no_cwpa"));
  REQUIRE(r.code == cli::kOk);
  CHECK(lines(r.out) == 3);
  CHECK(r.out == slurp(dir / "plotdata.csv"));
  CHECK(fs::exists(dir / "report.csv"));
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "resolved_config.json"));
  CHECK(lines(slurp(dir / "history" / "sl_fold0_seed1.csv")) == 1 + 2 * 3);
  CHECK(fs::exists(dir / "history" / "sl_no_cwpa_fold0_seed1.json"));
  const auto report = slurp(dir / "report.csv");
  CHECK(report.find(",sl,global,") != std::string::npos);
  CHECK(report.find(",sl_no_cwpa,global,") != std::string::npos);
}

TEST_CASE("run with an explicit format and dataset file") {
  const auto dir = scratch("data");
  REQUIRE(invoke({"gen", "--out", dir.string()}).code == cli::kOk);
  auto args = quick_run(dir / "r", "balanced", "ll,sl,cl");
  args.insert(args.end(), {"--format", "csv", "--data", (dir / "dataset.csv").string()});
  REQUIRE(invoke(args).code == cli::kOk);
  CHECK(fs::exists(dir / "r" / "report.csv"));
  CHECK_FALSE(fs::exists(dir / "r" / "report.json"));
  CHECK(slurp(dir / "r" / "resolved_config.json").find("dataset.csv") != std::string::npos);
}

TEST_CASE("compare passes one report through and labels several") {
  const auto dir = scratch("compare");
  REQUIRE(invoke(quick_run(dir / "a", "balanced", "ll,cl")).code == cli::kOk);
  REQUIRE(invoke(quick_run(dir / "b", "volume_biased", "ll,cl")).code == cli::kOk);

  const auto one = invoke({"compare", (dir / "a" / "report.json").string()});
  REQUIRE(one.code == cli::kOk);
  CHECK(one.out == slurp(dir / "a" / "plotdata.csv"));

  const auto two = invoke({"compare", (dir / "a" / "report.csv").string(), (dir / "b" / "report.json").string()});
  REQUIRE(two.code == cli::kOk);
  CHECK(lines(two.out) == 5);
  CHECK(two.out.find("ll,balanced/node_mean,") != std::string::npos);
  CHECK(two.out.find("cl,volume_biased/global,") != std::string::npos);

  const auto same = invoke({"compare", (dir / "a" / "report.csv").string(), (dir / "a" / "report.json").string(),
                            "--out", (dir / "c").string()});
  REQUIRE(same.code == cli::kOk);
  const auto merged = slurp(dir / "c" / "compare_plotdata.csv");
  CHECK(merged.find("balanced@report.csv/node_mean") != std::string::npos);
  CHECK(merged.find("balanced@report.json/node_mean") != std::string::npos);
}

}  // TEST_SUITE
