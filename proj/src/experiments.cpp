#include "repeaterlab/experiments.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "repeaterlab/errors.h"
#include "repeaterlab/random.h"

namespace repeaterlab {

const char* to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::kHomogeneousScaling:
      return "homogeneous_scaling";
    case SweepKind::kFixedDistanceNodeSweep:
      return "fixed_distance_node_sweep";
    case SweepKind::kCrossDistance:
      return "cross_distance";
    case SweepKind::kMinRepeaterSearch:
      return "min_repeater_search";
    case SweepKind::kFixedNodesDistanceSweep:
      return "fixed_nodes_distance_sweep";
  }
  return "unknown";
}

SweepKind sweep_kind_from_string(const std::string& name) {
  for (SweepKind k : {SweepKind::kHomogeneousScaling, SweepKind::kFixedDistanceNodeSweep,
                      SweepKind::kCrossDistance, SweepKind::kMinRepeaterSearch,
                      SweepKind::kFixedNodesDistanceSweep}) {
    if (name == to_string(k)) {
      return k;
    }
  }
  throw ConfigError("unknown sweep kind \"" + name + "\"");
}

SimTime ExperimentSettings::attempt_window() const {
  return SimTime::from_seconds(t_sim_s / static_cast<double>(attempts));
}

void ExperimentSettings::validate() const {
  if (attempts < 1) {
    throw ConfigError("attempts must be >= 1");
  }
  if (retry_budget < 1) {
    throw ConfigError("retry_budget must be >= 1");
  }
  if (!(f_threshold >= 0.25 && f_threshold <= 1.0)) {
    throw ConfigError("f_threshold must be in [0.25, 1]");
  }
  if (!(std::isfinite(t_sim_s) && t_sim_s > 0.0 && t_sim_s <= 1.0e4)) {
    throw ConfigError("t_sim_s must be in (0, 10000]");
  }
}

void SweepSpec::validate() const {
  settings.validate();
  const auto need_distances = [&](bool exactly_one) {
    if (distances_km.empty() || (exactly_one && distances_km.size() != 1)) {
      throw ConfigError(exactly_one ? "distances_km must hold exactly one distance"
                                    : "distances_km must not be empty");
    }
    for (double d : distances_km) {
      if (!(std::isfinite(d) && d > 0.0)) {
        throw ConfigError("distances_km entries must be > 0");
      }
    }
  };
  const auto need_range = [&] {
    if (min_routers < 2 || max_routers < min_routers) {
      throw ConfigError("router range must satisfy 2 <= min_routers <= max_routers");
    }
  };
  switch (kind) {
    case SweepKind::kHomogeneousScaling:
      need_range();
      if (!(std::isfinite(hop_km) && hop_km > 0.0)) {
        throw ConfigError("hop_km must be > 0");
      }
      break;
    case SweepKind::kFixedDistanceNodeSweep:
      need_distances(true);
      need_range();
      break;
    case SweepKind::kCrossDistance:
      need_distances(false);
      need_range();
      break;
    case SweepKind::kMinRepeaterSearch:
      need_distances(false);
      if (max_routers < 2) {
        throw ConfigError("max_routers must be >= 2");
      }
      break;
    case SweepKind::kFixedNodesDistanceSweep:
      need_distances(false);
      break;
  }
}

std::string Configuration::key() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s|%.6f|%zu", to_string(kind), total_distance_km, router_count);
  return buf;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool result_order(const ExperimentResult& a, const ExperimentResult& b) {
  if (a.config.total_distance_km != b.config.total_distance_km) {
    return a.config.total_distance_km < b.config.total_distance_km;
  }
  return a.config.router_count < b.config.router_count;
}

}  // namespace

std::vector<Configuration> configurations(const SweepSpec& spec) {
  spec.validate();
  std::vector<Configuration> out;
  const auto node_range = [&](double distance) {
    for (std::size_t n = spec.min_routers; n <= spec.max_routers; ++n) {
      out.push_back({spec.kind, distance, n});
    }
  };
  switch (spec.kind) {
    case SweepKind::kHomogeneousScaling:
      for (std::size_t n = spec.min_routers; n <= spec.max_routers; ++n) {
        out.push_back({spec.kind, spec.hop_km * static_cast<double>(n - 1), n});
      }
      break;
    case SweepKind::kFixedDistanceNodeSweep:
    case SweepKind::kCrossDistance:
      for (double d : spec.distances_km) {
        node_range(d);
      }
      break;
    case SweepKind::kMinRepeaterSearch:
      for (double d : spec.distances_km) {
        out.push_back({spec.kind, d, 2});
      }
      break;
    case SweepKind::kFixedNodesDistanceSweep:
      for (double d : spec.distances_km) {
        out.push_back({spec.kind, d, spec.repeaters + 2});
      }
      break;
  }
  return out;
}

std::uint64_t configuration_seed(std::uint64_t base_seed, const Configuration& config) {
  return base_seed ^ fnv1a(config.key());
}

std::uint64_t request_index_for(std::size_t router_count) {
  return router_count % 2 == 1 && router_count >= 3 ? (router_count - 3) / 2 : 0;
}

double ExperimentResult::hop_km() const {
  return config.total_distance_km / static_cast<double>(config.router_count - 1);
}

const char* ExperimentResult::parity() const {
  return config.router_count % 2 == 0 ? "even" : "odd";
}

std::string ExperimentResult::odd_subclass() const {
  if (config.router_count % 2 == 0) {
    return "";
  }
  return to_string(placement);
}

double ExperimentResult::mean_duration_s() const {
  if (records.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (const AttemptRecord& r : records) {
    total += r.duration.seconds();
  }
  return total / static_cast<double>(records.size());
}

ExperimentResult run_configuration(const Configuration& config, const HardwareProfile& profile,
                                   const ExperimentSettings& settings, std::uint64_t seed,
                                   TraceSink* trace) {
  settings.validate();
  const TopologySpec topology =
      TopologySpec::homogeneous(profile, config.router_count, config.total_distance_km);
  const SimTime window = settings.attempt_window();

  ManagerOptions options;
  options.retry_budget = settings.retry_budget;
  options.seed = seed;
  options.trace = trace;
  options.horizon = SimTime::picoseconds(window.ps() * settings.attempts);
  NetworkManager manager(topology, options);

  ExperimentResult result;
  result.config = config;
  result.attempts = settings.attempts;
  result.seed = seed;
  double fidelity_sum = 0.0;
  const std::uint64_t index = request_index_for(config.router_count);
  for (unsigned k = 0; k < settings.attempts; ++k) {
    EntanglementRequest request{0, config.router_count - 1, window, settings.f_threshold, index};
    const AttemptOutcome outcome = manager.handle_request(request);
    result.placement = outcome.placement;
    result.records.push_back({outcome.success, outcome.fidelity, outcome.reason, outcome.duration()});
    if (outcome.success) {
      ++result.e_count;
      fidelity_sum += *outcome.fidelity;
    }
  }
  result.failures = result.attempts - result.e_count;
  if (result.e_count > 0) {
    result.mean_f_e2e = fidelity_sum / result.e_count;
  }
  result.invariants = manager.invariants();
  return result;
}

namespace {

ExperimentResult run_guarded(const Configuration& config, const HardwareProfile& profile,
                             const ExperimentSettings& settings, std::uint64_t seed,
                             TraceSink* trace) {
  try {
    return run_configuration(config, profile, settings, seed, trace);
  } catch (const std::exception& e) {
    ExperimentResult failed;
    failed.config = config;
    failed.attempts = settings.attempts;
    failed.failures = settings.attempts;
    failed.seed = seed;
    failed.error = e.what();
    return failed;
  }
}

}  // namespace

std::vector<ExperimentResult> run_sweep(const SweepSpec& spec, const HardwareProfile& profile,
                                        const SweepOptions& options) {
  const std::vector<Configuration> configs = configurations(spec);
  std::vector<ExperimentResult> results(configs.size());
  std::vector<std::ostringstream> traces(options.trace != nullptr ? configs.size() : 0);

  const auto work = [&](std::size_t i) {
    std::optional<TraceSink> sink;
    if (options.trace != nullptr) {
      sink.emplace(traces[i]);
    }
    TraceSink* trace = sink ? &*sink : nullptr;
    if (spec.kind == SweepKind::kMinRepeaterSearch) {
      MinRepeaterResult found =
          min_repeaters(configs[i].total_distance_km, profile, spec.settings, spec.base_seed,
                        spec.max_routers - 2);
      results[i] = std::move(found.last);
      results[i].invariants = found.invariants;
      if (found.errors > 0 && !results[i].error) {
        results[i].error = std::to_string(found.errors) + " chain lengths failed with an error";
      }
      return;
    }
    results[i] = run_guarded(configs[i], profile, spec.settings,
                             configuration_seed(spec.base_seed, configs[i]), trace);
  };

  const unsigned jobs = std::max(1U, std::min<unsigned>(options.jobs, configs.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < configs.size(); ++i) {
      work(i);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
          work(i);
        }
      });
    }
    for (std::thread& t : pool) {
      t.join();
    }
  }

  std::vector<std::size_t> order(configs.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result_order(results[a], results[b]);
  });
  std::vector<ExperimentResult> sorted;
  sorted.reserve(results.size());
  for (std::size_t i : order) {
    if (options.trace != nullptr) {
      *options.trace << traces[i].str();
    }
    sorted.push_back(std::move(results[i]));
  }
  return sorted;
}

MinRepeaterResult min_repeaters(double distance_km, const HardwareProfile& profile,
                                const ExperimentSettings& settings, std::uint64_t base_seed,
                                std::size_t max_repeaters) {
  if (!(std::isfinite(distance_km) && distance_km > 0.0)) {
    throw ConfigError("distance must be > 0 km");
  }
  MinRepeaterResult out;
  out.distance_km = distance_km;
  for (std::size_t m = 0; m <= max_repeaters; ++m) {
    const Configuration config{SweepKind::kMinRepeaterSearch, distance_km, m + 2};
    out.last = run_guarded(config, profile, settings, configuration_seed(base_seed, config),
                           nullptr);
    out.invariants.merge(out.last.invariants);
    out.errors += out.last.error ? 1 : 0;
    if (out.last.e_count >= 1) {
      out.repeaters = m;
      break;
    }
  }
  return out;
}

std::vector<StaircasePoint> fidelity_staircase(const std::vector<double>& distances_km,
                                               const HardwareProfile& profile,
                                               const ExperimentSettings& settings,
                                               std::uint64_t base_seed, unsigned replicates,
                                               std::size_t start_routers,
                                               std::size_t max_routers,
                                               double recovery_fraction) {
  if (replicates == 0) {
    throw ConfigError("replicates must be >= 1");
  }
  if (!(recovery_fraction >= 0.0 && recovery_fraction <= 1.0)) {
    throw ConfigError("recovery_fraction must be in [0, 1]");
  }
  std::vector<StaircasePoint> points;
  std::size_t routers = std::max<std::size_t>(start_routers, 2);
  for (double d : distances_km) {
    bool stepping = false;
    InvariantReport seen;
    while (true) {
      StaircasePoint p{d, routers, 0, 0, std::nullopt, {}};
      double fidelity_sum = 0.0;
      const Configuration config{SweepKind::kFixedNodesDistanceSweep, d, routers};
      for (unsigned r = 0; r < replicates; ++r) {
        const ExperimentResult res = run_configuration(
            config, profile, settings, configuration_seed(base_seed ^ mix64(r), config));
        p.successes += res.e_count;
        p.attempts += res.attempts;
        seen.merge(res.invariants);
        if (res.mean_f_e2e) {
          fidelity_sum += *res.mean_f_e2e * res.e_count;
        }
      }
      if (p.successes > 0) {
        p.mean_f_e2e = fidelity_sum / p.successes;
      }
      const double needed =
          stepping ? std::max(1.0, std::ceil(recovery_fraction * p.attempts)) : 1.0;
      if (static_cast<double>(p.successes) >= needed || routers >= max_routers) {
        p.invariants = seen;
        points.push_back(p);
        break;
      }
      stepping = true;
      ++routers;
    }
  }
  return points;
}

RegressionFit fit_linear(const std::vector<std::pair<double, double>>& points) {
  const std::size_t n = points.size();
  if (n < 2) {
    throw DomainError("fit_linear needs at least two points");
  }
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (!(sxx > 0.0)) {
    throw DomainError("fit_linear needs at least two distinct x values");
  }
  RegressionFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (const auto& [x, y] : points) {
    const double e = y - (fit.intercept + fit.slope * x);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  if (n > 2) {
    fit.slope_se = std::sqrt(ss_res / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

namespace {

ClassSummary summarize_class(const std::vector<const ExperimentResult*>& rows) {
  ClassSummary s;
  s.rows = rows.size();
  std::vector<std::pair<double, double>> pts;
  double total = 0.0;
  for (const ExperimentResult* r : rows) {
    total += r->e_count;
    pts.emplace_back(static_cast<double>(r->config.router_count), r->e_count);
  }
  s.mean_e_count = total / static_cast<double>(rows.size());
  const bool spread = std::any_of(pts.begin(), pts.end(),
                                  [&](const auto& p) { return p.first != pts.front().first; });
  if (spread) {
    s.fit = fit_linear(pts);
  }
  return s;
}

}  // namespace

int TrendSummary::slope_sign() const {
  if (!overall) {
    return 0;
  }
  constexpr double kEps = 1e-12;
  return overall->slope > kEps ? 1 : (overall->slope < -kEps ? -1 : 0);
}

TrendSummary summarize_trend(const std::vector<ExperimentResult>& results) {
  std::vector<const ExperimentResult*> all;
  std::vector<const ExperimentResult*> even;
  std::vector<const ExperimentResult*> odd;
  std::map<std::string, std::vector<const ExperimentResult*>> classes;
  for (const ExperimentResult& r : results) {
    if (r.error) {
      continue;
    }
    all.push_back(&r);
    if (r.config.router_count % 2 == 0) {
      even.push_back(&r);
    } else {
      odd.push_back(&r);
      classes[r.odd_subclass()].push_back(&r);
    }
  }
  TrendSummary t;
  if (!all.empty()) {
    t.overall = summarize_class(all).fit;
  }
  if (!even.empty()) {
    t.even = summarize_class(even);
  }
  if (!odd.empty()) {
    t.odd = summarize_class(odd);
  }
  for (const auto& [name, rows] : classes) {
    t.odd_classes[name] = summarize_class(rows);
  }
  return t;
}

const std::map<std::string, HardwareProfile>& builtin_profiles() {
  static const std::map<std::string, HardwareProfile> profiles = [] {
    std::map<std::string, HardwareProfile> m;

    HardwareProfile swap_limited;
    swap_limited.name = "swap-limited";
    swap_limited.tau_coh_s = 10.0;
    swap_limited.f_init = 0.99;
    swap_limited.attenuation_db_per_km = 0.001;
    swap_limited.bsm_intrinsic_success = 0.5;
    swap_limited.swap_success = 0.5;
    m.emplace(swap_limited.name, swap_limited);

    HardwareProfile loss_limited;
    loss_limited.name = "loss-limited";
    loss_limited.tau_coh_s = 10.0;
    loss_limited.f_init = 0.99;
    loss_limited.attenuation_db_per_km = 0.005;
    loss_limited.bsm_intrinsic_success = 0.5;
    loss_limited.swap_success = 1.0;
    m.emplace(loss_limited.name, loss_limited);

    HardwareProfile idealized;
    idealized.name = "idealized";
    idealized.tau_coh_s = 5.0;
    idealized.f_init = 1.0;
    idealized.attenuation_db_per_km = 0.002;
    idealized.bsm_intrinsic_success = 0.5;
    idealized.swap_success = 1.0;
    m.emplace(idealized.name, idealized);

    // Lossy fiber with near-unit detection and long-lived memories: the
    // distance sweeps where waiting time, not swap failure, sets fidelity.
    HardwareProfile long_haul;
    long_haul.name = "long-haul";
    long_haul.tau_coh_s = 50.0;
    long_haul.f_init = 0.98;
    long_haul.attenuation_db_per_km = 0.02;
    long_haul.bsm_intrinsic_success = 1.0;
    long_haul.swap_success = 1.0;
    m.emplace(long_haul.name, long_haul);

    HardwareProfile ideal;
    ideal.name = "ideal";
    ideal.tau_coh_s = 1.0e6;
    ideal.f_init = 1.0;
    ideal.attenuation_db_per_km = 0.0;
    ideal.bsm_intrinsic_success = 1.0;
    ideal.swap_success = 1.0;
    m.emplace(ideal.name, ideal);
    return m;
  }();
  return profiles;
}

}  // namespace repeaterlab
