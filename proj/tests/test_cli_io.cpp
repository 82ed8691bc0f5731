#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "repeaterlab/chart.h"
#include "repeaterlab/cli.h"
#include "repeaterlab/config.h"
#include "repeaterlab/errors.h"
#include "repeaterlab/results_io.h"

using namespace repeaterlab;
using Catch::Approx;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

const char* const kSmallConfig = R"({
  "base_seed": 11,
  "attempts": 5,
  "t_sim_s": 5,
  "profiles": {"fast": {"base": "swap-limited", "swap_success": 0.6}},
  "sweeps": {
    "nodes": {"kind": "fixed_distance_node_sweep", "profile": "fast",
              "distances_km": [1000], "min_routers": 2, "max_routers": 19},
    "nothing": {"kind": "fixed_distance_node_sweep", "profile": "ideal",
                "distances_km": [1000], "min_routers": 2, "max_routers": 3,
                "f_threshold": 1.0},
    "search": {"kind": "min_repeater_search", "profile": "ideal",
               "distances_km": [1000, 2000], "max_routers": 6}
  }
})";

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("repeaterlab-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

fs::path write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
  std::ostringstream out;
  std::ostringstream err;
  const int rc = run_cli(args, out, err);
  if (out_text != nullptr) {
    *out_text = out.str();
  }
  if (err_text != nullptr) {
    *err_text = err.str();
  }
  return rc;
}

std::size_t count_matches(const std::string& text, const std::string& pattern) {
  const std::regex re(pattern);
  return static_cast<std::size_t>(
      std::distance(std::sregex_iterator(text.begin(), text.end(), re), std::sregex_iterator()));
}

}  // namespace

TEST_CASE("config defaults and inheritance", "[config]") {
  const ConfigFile c = parse_config_text(kSmallConfig);
  CHECK(c.global.base_seed == 11);
  CHECK(c.global.output_dir == "results");
  CHECK(c.global.settings.retry_budget == 10);
  CHECK(c.sweeps.size() == 3);
  const SweepSpec& s = c.sweep("nodes");
  CHECK(s.settings.attempts == 5);
  CHECK(s.base_seed == 11);
  CHECK(s.kind == SweepKind::kFixedDistanceNodeSweep);
  CHECK(*c.profile("fast").swap_success == Approx(0.6));
  CHECK(c.profile("fast").tau_coh_s == builtin_profiles().at("swap-limited").tau_coh_s);
  CHECK(c.profile("idealized").name == "idealized");
  CHECK_THROWS_AS(c.profile("missing"), ConfigError);
  CHECK_THROWS_AS(c.sweep("missing"), ConfigError);
}

TEST_CASE("config errors name the offending key", "[config]") {
  CHECK_THROWS_WITH(parse_config_text(R"({"profiles": {"bad": {"tau_coh_s": -1}}})"),
                    ContainsSubstring("tau_coh_s must be > 0"));
  CHECK_THROWS_WITH(parse_config_text(R"({"colour": 3})"), ContainsSubstring("colour"));
  CHECK_THROWS_WITH(parse_config_text(R"({"profiles": {"p": {"shade": 1}}})"),
                    ContainsSubstring("shade"));
  CHECK_THROWS_AS(parse_config_text(R"({"sweeps": {"s": {"kind": "homogeneous_scaling"}}})"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config_text(R"({"sweeps": {"s": {"kind": "cross_distance", "profile": "nope"}}})"),
      ConfigError);
  CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
  CHECK_THROWS_AS(parse_config_text(R"({"attempts": "many"})"), ConfigError);
}

TEST_CASE("config round-trips through its explicit form", "[config][property]") {
  const ConfigFile a = parse_config_text(kSmallConfig);
  const nlohmann::ordered_json once = config_to_json(a);
  const ConfigFile b = parse_config(once);
  CHECK(config_to_json(b) == once);
  CHECK(b.sweep("search").distances_km == a.sweep("search").distances_km);
  CHECK(profile_to_json(b.profile("fast")) == profile_to_json(a.profile("fast")));
}

TEST_CASE("results CSV writer", "[results_io]") {
  std::ostringstream empty;
  write_results({}, empty);
  CHECK(empty.str() == std::string(kResultHeader) + "\n");

  ResultRow r;
  r.sweep_kind = "fixed_distance_node_sweep";
  r.total_distance_km = 1000.0;
  r.router_count = 3;
  r.bsm_count = 2;
  r.hop_km = 500.0;
  r.attempts = 20;
  r.e_count = 7;
  r.failures = 13;
  r.mean_f_e2e = 0.8123456789;
  r.parity = "odd";
  r.odd_subclass = "center";
  r.seed = 42;
  ResultRow earlier = r;
  earlier.router_count = 2;
  earlier.bsm_count = 1;
  earlier.mean_f_e2e.reset();
  earlier.parity = "even";
  earlier.odd_subclass.clear();
  std::ostringstream out;
  write_results({r, earlier}, out);
  const std::string text = out.str();
  CHECK(text == std::string(kResultHeader) + "\n" +
                    "fixed_distance_node_sweep,1000,2,1,500,20,7,13,,even,,42\n"
                    "fixed_distance_node_sweep,1000,3,2,500,20,7,13,0.812346,odd,center,42\n");

  std::istringstream in(text);
  const std::vector<ResultRow> back = read_results(in);
  REQUIRE(back.size() == 2);
  CHECK_FALSE(back[0].mean_f_e2e);
  CHECK(*back[1].mean_f_e2e == Approx(0.812346));
  CHECK(back[1].odd_subclass == "center");

  std::istringstream bad("a,b,c\n");
  CHECK_THROWS_AS(read_results(bad), ConfigError);
  CHECK_THROWS_AS(write_results({}, fs::path("/nonexistent-dir/x.csv")), ResourceError);
}

TEST_CASE("run writes deterministic results", "[cli]") {
  TempDir dir;
  const fs::path cfg = write_file(dir.path() / "c.json", kSmallConfig);
  const fs::path out1 = dir.path() / "a";
  const fs::path out2 = dir.path() / "b";
  REQUIRE(cli({"run", "--config", cfg.string(), "--sweep", "nodes", "--out", out1.string()}) ==
          kExitOk);
  REQUIRE(cli({"run", "--config", cfg.string(), "--sweep", "nodes", "--out", out2.string(),
               "--jobs", "2"}) == kExitOk);
  const std::string csv = slurp(out1 / "nodes.csv");
  CHECK(csv == slurp(out2 / "nodes.csv"));
  CHECK(csv.rfind(kResultHeader, 0) == 0);
  CHECK(count_matches(csv, "\n") == 19);

  const auto summary = nlohmann::json::parse(slurp(out1 / "nodes.summary.json"));
  CHECK(summary.at("configurations") == 18);
  CHECK(summary.at("base_seed") == 11);

  const fs::path out3 = dir.path() / "c";
  REQUIRE(cli({"run", "--config", cfg.string(), "--sweep", "nodes", "--out", out3.string(),
               "--seed", "12"}) == kExitOk);
  CHECK(slurp(out3 / "nodes.csv") != csv);
}

TEST_CASE("run with no successes still writes every row", "[cli]") {
  TempDir dir;
  const fs::path cfg = write_file(dir.path() / "c.json", kSmallConfig);
  REQUIRE(cli({"run", "--config", cfg.string(), "--sweep", "nothing", "--out",
               dir.path().string()}) == kExitOk);
  const std::vector<ResultRow> rows = read_results(dir.path() / "nothing.csv");
  REQUIRE(rows.size() == 2);
  for (const ResultRow& r : rows) {
    CHECK(r.e_count == 0);
  }
}

TEST_CASE("trace output is one JSON object per line", "[cli]") {
  TempDir dir;
  const fs::path cfg = write_file(dir.path() / "c.json", kSmallConfig);
  REQUIRE(cli({"run", "--config", cfg.string(), "--sweep", "nothing", "--out",
               dir.path().string(), "--trace"}) == kExitOk);
  std::ifstream in(dir.path() / "nothing.trace.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("t"));
    CHECK(j.contains("kind"));
    ++lines;
  }
  CHECK(lines > 0);
}

TEST_CASE("environment seed sits between flag and config", "[cli]") {
  TempDir dir;
  const fs::path cfg = write_file(dir.path() / "c.json", kSmallConfig);
  const auto run_to = [&](const std::string& sub, std::vector<std::string> extra) {
    std::vector<std::string> args{"run", "--config", cfg.string(), "--sweep", "nodes", "--out",
                                  (dir.path() / sub).string()};
    args.insert(args.end(), extra.begin(), extra.end());
    REQUIRE(cli(args) == kExitOk);
    return slurp(dir.path() / sub / "nodes.csv");
  };
  const std::string with_flag = run_to("flag", {"--seed", "77"});
  ::setenv("REPEATERLAB_SEED", "77", 1);
  const std::string with_env = run_to("env", {});
  const std::string flag_wins = run_to("both", {"--seed", "11"});
  ::setenv("REPEATERLAB_SEED", "not-a-number", 1);
  CHECK(cli({"run", "--config", cfg.string(), "--sweep", "nodes", "--out",
             (dir.path() / "x").string()}) == kExitUsage);
  ::unsetenv("REPEATERLAB_SEED");
  const std::string from_config = run_to("cfg", {});
  CHECK(with_env == with_flag);
  CHECK(flag_wins == from_config);
  CHECK(with_env != from_config);
}

TEST_CASE("exit codes", "[cli]") {
  TempDir dir;
  const fs::path cfg = write_file(dir.path() / "c.json", kSmallConfig);
  const fs::path bad = write_file(dir.path() / "bad.json", R"({"profiles": {"p": {"tau_coh_s": 0}}})");
  std::string out;
  std::string err;
  CHECK(cli({"validate", "--config", cfg.string()}, &out) == kExitOk);
  CHECK_THAT(out, ContainsSubstring("1 profiles, 3 sweeps"));
  CHECK(cli({"validate", "--config", bad.string()}, nullptr, &err) == kExitUsage);
  CHECK_THAT(err, ContainsSubstring("tau_coh_s"));
  CHECK(cli({"validate", "--config", (dir.path() / "missing.json").string()}) == kExitUsage);
  CHECK(cli({"frobnicate"}) == kExitUsage);
  CHECK(cli({}) == kExitUsage);
  CHECK(cli({"--help"}) == kExitOk);
  CHECK(cli({"run", "--config", cfg.string(), "--sweep", "nope"}) == kExitUsage);
  CHECK(cli({"chart", "--input", (dir.path() / "none.csv").string(), "--kind", "rate_vs_nodes",
             "--out", (dir.path() / "x.svg").string()}) != kExitOk);
  CHECK(cli({"run", "--config", cfg.string(), "--sweep", "nodes", "--out",
             "/proc/forbidden/place"}) == kExitRuntime);
}

TEST_CASE("min-repeaters subcommand", "[cli]") {
  TempDir dir;
  const fs::path cfg = write_file(dir.path() / "c.json", kSmallConfig);
  REQUIRE(cli({"min-repeaters", "--config", cfg.string(), "--distances", "1000,3000", "--out",
               dir.path().string()}) == kExitOk);
  const std::vector<ResultRow> rows = read_results(dir.path() / "min_repeaters.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].router_count == 2);
  CHECK(rows[1].total_distance_km == 3000.0);
  CHECK(cli({"min-repeaters", "--config", cfg.string(), "--distances", "abc"}) == kExitUsage);
}

TEST_CASE("chart structure", "[chart]") {
  TempDir dir;
  const fs::path cfg = write_file(dir.path() / "c.json", kSmallConfig);
  REQUIRE(cli({"run", "--config", cfg.string(), "--sweep", "nodes", "--out",
               dir.path().string()}) == kExitOk);
  const fs::path svg = dir.path() / "rate.svg";
  REQUIRE(cli({"chart", "--input", (dir.path() / "nodes.csv").string(), "--kind",
               "rate_vs_nodes", "--out", svg.string()}) == kExitOk);
  const std::string text = slurp(svg);
  CHECK_THAT(text, ContainsSubstring("<svg xmlns"));
  CHECK(count_matches(text, "class=\"point (even|odd)\"") == 18);
  CHECK(count_matches(text, "class=\"point even\"") == 9);

  std::vector<ResultRow> rows;
  for (int i = 0; i < 5; ++i) {
    ResultRow r;
    r.total_distance_km = 1000.0 * (i + 1);
    r.router_count = static_cast<std::size_t>(2 + 2 * i);
    r.e_count = 1;
    r.mean_f_e2e = 0.9 - 0.1 * i;
    rows.push_back(r);
  }
  std::ostringstream fit;
  render_chart(rows, ChartKind::kMinRepeatersVsDistance, fit);
  const std::string fit_text = fit.str();
  CHECK(count_matches(fit_text, "class=\"point repeaters\"") == 5);
  CHECK(count_matches(fit_text, "class=\"fit\"") == 1);
  CHECK_THAT(fit_text, ContainsSubstring("slope 0.002 repeaters/km"));
  CHECK_THAT(fit_text, ContainsSubstring("r^2 = 1"));

  // the fit line passes through the (collinear) points
  const std::regex circle_re(R"re(<circle class="point repeaters" cx="([0-9.]+)" cy="([0-9.]+)")re");
  const std::regex line_re(
      R"re(<line class="fit" x1="([0-9.]+)" y1="([0-9.]+)" x2="([0-9.]+)" y2="([0-9.]+)")re");
  std::smatch lm;
  REQUIRE(std::regex_search(fit_text, lm, line_re));
  const double x1 = std::stod(lm[1]);
  const double y1 = std::stod(lm[2]);
  const double x2 = std::stod(lm[3]);
  const double y2 = std::stod(lm[4]);
  for (auto it = std::sregex_iterator(fit_text.begin(), fit_text.end(), circle_re);
       it != std::sregex_iterator(); ++it) {
    const double cx = std::stod((*it)[1]);
    const double cy = std::stod((*it)[2]);
    const double on_line = y1 + (y2 - y1) * (cx - x1) / (x2 - x1);
    CHECK(cy == Approx(on_line).margin(0.05));
  }

  std::ostringstream fid;
  render_chart(rows, ChartKind::kFidelityVsDistance, fid);
  CHECK(count_matches(fid.str(), "class=\"point fidelity\"") == 5);
  CHECK_THAT(fid.str(), ContainsSubstring("class=\"trend\""));

  CHECK_THROWS_AS(render_chart({}, ChartKind::kRateVsNodes, fid), DomainError);
  CHECK_THROWS_AS(chart_kind_from_string("pie"), ConfigError);
}
