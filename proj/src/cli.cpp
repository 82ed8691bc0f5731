#include "repeaterlab/cli.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "repeaterlab/chart.h"
#include "repeaterlab/config.h"
#include "repeaterlab/errors.h"
#include "repeaterlab/experiments.h"
#include "repeaterlab/results_io.h"

namespace repeaterlab {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::optional<std::uint64_t> env_seed() {
  const char* raw = std::getenv("REPEATERLAB_SEED");
  if (raw == nullptr || *raw == '\0') {
    return std::nullopt;
  }
  const std::string s(raw);
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used == s.size() && s[0] != '-') {
      return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("REPEATERLAB_SEED must be a non-negative integer, got \"" + s + "\"");
}

std::uint64_t resolve_seed(std::uint64_t configured, const std::optional<std::uint64_t>& flag) {
  if (flag) {
    return *flag;
  }
  if (const auto env = env_seed()) {
    return *env;
  }
  return configured;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw ResourceError("cannot create " + dir.string() + ": " + ec.message());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) {
    throw ResourceError("cannot write " + path.string());
  }
}

ordered_json fit_json(const std::optional<RegressionFit>& fit) {
  if (!fit) {
    return nullptr;
  }
  return {{"slope", fit->slope},
          {"intercept", fit->intercept},
          {"r_squared", fit->r_squared},
          {"slope_se", fit->slope_se},
          {"n", fit->n}};
}

ordered_json class_json(const ClassSummary& c) {
  return {{"rows", c.rows}, {"mean_e_count", c.mean_e_count}, {"fit", fit_json(c.fit)}};
}

ordered_json summary_json(const SweepSpec& spec, const std::vector<ExperimentResult>& results) {
  ordered_json j;
  j["sweep"] = spec.name;
  j["kind"] = to_string(spec.kind);
  j["profile"] = spec.profile;
  j["base_seed"] = spec.base_seed;
  j["configurations"] = results.size();

  InvariantReport total;
  ordered_json errors = ordered_json::array();
  for (const ExperimentResult& r : results) {
    total.merge(r.invariants);
    if (r.error) {
      errors.push_back({{"key", r.config.key()}, {"error", *r.error}});
    }
  }
  j["invariants"] = {{"conservation_violations", total.conservation_violations},
                     {"slot_leaks", total.slot_leaks},
                     {"correction_mismatches", total.correction_mismatches},
                     {"events_checked", total.events_checked}};
  j["errors"] = errors;

  const TrendSummary trend = summarize_trend(results);
  ordered_json t;
  t["overall"] = fit_json(trend.overall);
  t["even"] = trend.even ? class_json(*trend.even) : ordered_json(nullptr);
  t["odd"] = trend.odd ? class_json(*trend.odd) : ordered_json(nullptr);
  ordered_json classes = ordered_json::object();
  for (const auto& [name, c] : trend.odd_classes) {
    classes[name] = class_json(c);
  }
  t["odd_classes"] = classes;
  j["trend"] = t;
  return j;
}

bool clean(const std::vector<ExperimentResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const ExperimentResult& r) {
    return !r.error && r.invariants.clean();
  });
}

int cmd_run(const std::string& config_path, const std::string& sweep_name,
            const std::optional<std::uint64_t>& seed, const std::string& out_dir, bool trace,
            unsigned jobs, std::ostream& out, std::ostream& err) {
  const ConfigFile config = load_config(config_path);
  SweepSpec spec = config.sweep(sweep_name);
  spec.base_seed = resolve_seed(spec.base_seed, seed);
  const HardwareProfile& profile = config.profile(spec.profile);
  const fs::path dir = out_dir.empty() ? fs::path(config.global.output_dir) : fs::path(out_dir);
  ensure_dir(dir);

  std::ostringstream trace_buffer;
  SweepOptions options;
  options.jobs = jobs;
  options.trace = trace ? &trace_buffer : nullptr;
  const std::vector<ExperimentResult> results = run_sweep(spec, profile, options);

  std::vector<ResultRow> rows;
  rows.reserve(results.size());
  for (const ExperimentResult& r : results) {
    rows.push_back(ResultRow::from(r));
  }
  const fs::path csv = dir / (spec.name + ".csv");
  write_results(rows, csv);
  write_text(dir / (spec.name + ".summary.json"), summary_json(spec, results).dump(2) + "\n");
  if (trace) {
    write_text(dir / (spec.name + ".trace.jsonl"), trace_buffer.str());
  }

  unsigned successes = 0;
  unsigned attempts = 0;
  for (const ExperimentResult& r : results) {
    successes += r.e_count;
    attempts += r.attempts;
    if (r.error) {
      err << "configuration " << r.config.key() << " failed: " << *r.error << '\n';
    }
  }
  out << spec.name << ": " << results.size() << " configurations, " << successes << '/'
      << attempts << " successful attempts, seed " << spec.base_seed << " -> " << csv.string()
      << '\n';
  if (!clean(results)) {
    err << "run finished with faults or invariant violations\n";
    return kExitRuntime;
  }
  return kExitOk;
}

std::string pick_min_repeater_profile(const ConfigFile& config, const std::string& requested) {
  if (!requested.empty()) {
    config.profile(requested);
    return requested;
  }
  for (const SweepSpec& s : config.sweeps) {
    if (s.kind == SweepKind::kMinRepeaterSearch) {
      return s.profile;
    }
  }
  return "idealized";
}

int cmd_min_repeaters(const std::string& config_path, const std::vector<double>& distances,
                      const std::string& profile_name, const std::optional<std::uint64_t>& seed,
                      const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const ConfigFile config = load_config(config_path);
  if (distances.empty()) {
    throw ConfigError("--distances must list at least one distance");
  }
  SweepSpec spec;
  spec.name = "min_repeaters";
  spec.kind = SweepKind::kMinRepeaterSearch;
  spec.profile = pick_min_repeater_profile(config, profile_name);
  spec.distances_km = distances;
  spec.base_seed = resolve_seed(config.global.base_seed, seed);
  spec.settings = config.global.settings;
  for (const SweepSpec& s : config.sweeps) {
    if (s.kind == SweepKind::kMinRepeaterSearch && s.profile == spec.profile) {
      spec.settings = s.settings;
      spec.max_routers = s.max_routers;
      break;
    }
  }
  spec.validate();
  const fs::path dir = out_dir.empty() ? fs::path(config.global.output_dir) : fs::path(out_dir);
  ensure_dir(dir);

  const std::vector<ExperimentResult> results = run_sweep(spec, config.profile(spec.profile));
  std::vector<ResultRow> rows;
  for (const ExperimentResult& r : results) {
    rows.push_back(ResultRow::from(r));
    out << format_float(r.config.total_distance_km) << " km: ";
    if (r.e_count > 0) {
      out << r.config.router_count - 2 << " repeaters\n";
    } else {
      out << "none within " << spec.max_routers - 2 << " repeaters\n";
    }
  }
  write_results(rows, dir / "min_repeaters.csv");
  if (!clean(results)) {
    err << "search finished with faults or invariant violations\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_chart(const std::string& input, const std::string& kind, const std::string& output,
              std::ostream& out) {
  const ChartKind k = chart_kind_from_string(kind);
  const std::vector<ResultRow> rows = read_results(fs::path(input));
  if (rows.empty()) {
    throw ConfigError(input + " holds no result rows");
  }
  render_chart(rows, k, fs::path(output));
  out << "wrote " << output << '\n';
  return kExitOk;
}

int cmd_validate(const std::string& config_path, std::ostream& out) {
  const ConfigFile config = load_config(config_path);
  out << "ok: " << config.profiles.size() << " profiles, " << config.sweeps.size()
      << " sweeps\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete-event simulator of linear quantum repeater chains", "repeaterlab"};
  app.require_subcommand(1);

  std::string config_path;
  std::string sweep_name;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool trace = false;
  unsigned jobs = std::max(1U, std::thread::hardware_concurrency());
  std::vector<double> distances;
  std::string profile_name;
  std::string input;
  std::string kind;
  std::string chart_out;

  CLI::App* run = app.add_subcommand("run", "Run one sweep from a config file");
  run->add_option("--config", config_path, "JSON config")->required();
  run->add_option("--sweep", sweep_name, "Sweep name")->required();
  run->add_option("--seed", seed, "Base seed override");
  run->add_option("--out", out_dir, "Output directory (default: config output_dir)");
  run->add_flag("--trace", trace, "Write the control-message trace");
  run->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

  CLI::App* minrep = app.add_subcommand("min-repeaters", "Minimum repeaters per distance");
  minrep->add_option("--config", config_path, "JSON config")->required();
  minrep->add_option("--distances", distances, "Comma-separated distances in km")
      ->required()
      ->delimiter(',');
  minrep->add_option("--profile", profile_name, "Hardware profile");
  minrep->add_option("--seed", seed, "Base seed override");
  minrep->add_option("--out", out_dir, "Output directory");

  CLI::App* chart = app.add_subcommand("chart", "Render an SVG chart from a results CSV");
  chart->add_option("--input", input, "Results CSV")->required();
  chart->add_option("--kind", kind,
                    "rate_vs_nodes, fidelity_vs_distance or min_repeaters_vs_distance")
      ->required();
  chart->add_option("--out", chart_out, "SVG path")->required();

  CLI::App* validate = app.add_subcommand("validate", "Parse and check a config file");
  validate->add_option("--config", config_path, "JSON config")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run->parsed()) {
      return cmd_run(config_path, sweep_name, seed, out_dir, trace, jobs, out, err);
    }
    if (minrep->parsed()) {
      return cmd_min_repeaters(config_path, distances, profile_name, seed, out_dir, out, err);
    }
    if (chart->parsed()) {
      return cmd_chart(input, kind, chart_out, out);
    }
    return cmd_validate(config_path, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "fault: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace repeaterlab
