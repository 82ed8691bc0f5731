#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "repeaterlab/hardware.h"
#include "repeaterlab/network.h"

namespace repeaterlab {

enum class SweepKind : std::uint8_t {
  kHomogeneousScaling,
  kFixedDistanceNodeSweep,
  kCrossDistance,
  kMinRepeaterSearch,
  kFixedNodesDistanceSweep,
};

const char* to_string(SweepKind kind);
/// Accepts the snake_case names produced by to_string.
SweepKind sweep_kind_from_string(const std::string& name);

/// Run-wide knobs shared by every configuration of a sweep.
struct ExperimentSettings {
  unsigned attempts{20};
  unsigned retry_budget{10};
  double f_threshold{0.5};
  /// Simulated time for all attempts of one configuration; each attempt has
  /// t_sim_s / attempts to finish.
  double t_sim_s{20.0};

  SimTime attempt_window() const;
  void validate() const;
};

struct SweepSpec {
  std::string name;
  SweepKind kind{SweepKind::kFixedDistanceNodeSweep};
  std::string profile;
  /// Total distances; one entry for a fixed-distance sweep.
  std::vector<double> distances_km;
  std::size_t min_routers{2};
  std::size_t max_routers{19};
  /// Hop length for homogeneous scaling.
  double hop_km{0.0};
  /// Repeater count for the fixed-node distance sweep.
  std::size_t repeaters{10};
  std::uint64_t base_seed{1};
  ExperimentSettings settings;

  void validate() const;
};

struct Configuration {
  SweepKind kind{SweepKind::kFixedDistanceNodeSweep};
  double total_distance_km{0.0};
  std::size_t router_count{2};

  std::string key() const;
};

std::vector<Configuration> configurations(const SweepSpec& spec);

/// Seed for one configuration: independent of where it sits in the sweep.
std::uint64_t configuration_seed(std::uint64_t base_seed, const Configuration& config);

/// Request index used for a chain of `router_count` routers; odd counts
/// alternate between the left- and right-rooted swap trees.
std::uint64_t request_index_for(std::size_t router_count);

struct AttemptRecord {
  bool success{false};
  std::optional<double> fidelity;
  std::string reason;
  SimTime duration;
};

struct ExperimentResult {
  Configuration config;
  unsigned attempts{0};
  unsigned e_count{0};
  unsigned failures{0};
  std::optional<double> mean_f_e2e;
  std::vector<AttemptRecord> records;
  std::uint64_t seed{0};
  RootPlacement placement{RootPlacement::kLeaf};
  InvariantReport invariants;
  std::optional<std::string> error;

  std::size_t bsm_count() const { return config.router_count - 1; }
  double hop_km() const;
  const char* parity() const;
  /// "left"/"right"/"center" for odd router counts, empty for even ones.
  std::string odd_subclass() const;
  double mean_duration_s() const;
};

/// Runs `settings.attempts` serial end-to-end requests on one homogeneous chain.
ExperimentResult run_configuration(const Configuration& config, const HardwareProfile& profile,
                                   const ExperimentSettings& settings, std::uint64_t seed,
                                   TraceSink* trace = nullptr);

struct SweepOptions {
  unsigned jobs{1};
  /// When set, control-message traces of all configurations are written here
  /// in result order.
  std::ostream* trace{nullptr};
};

/// One result per configuration, ordered by (distance, router count). A
/// configuration that throws is reported through ExperimentResult::error.
std::vector<ExperimentResult> run_sweep(const SweepSpec& spec, const HardwareProfile& profile,
                                        const SweepOptions& options = {});

struct MinRepeaterResult {
  double distance_km{0.0};
  /// Smallest intermediate-router count with at least one success, if any
  /// up to the search limit.
  std::optional<std::size_t> repeaters;
  ExperimentResult last;
  /// Summed over every chain length tried.
  InvariantReport invariants;
  unsigned errors{0};
};

MinRepeaterResult min_repeaters(double distance_km, const HardwareProfile& profile,
                                const ExperimentSettings& settings, std::uint64_t base_seed,
                                std::size_t max_repeaters = 17);

struct StaircasePoint {
  double distance_km{0.0};
  std::size_t router_count{2};
  unsigned successes{0};
  unsigned attempts{0};
  std::optional<double> mean_f_e2e;
  /// Summed over every replicate run at this point, including stepped-over
  /// router counts.
  InvariantReport invariants;
};

/// Sweeps distance upward; whenever the current router count yields no
/// success over `replicates` seeds, adds routers until at least
/// `recovery_fraction` of the attempts succeed (one success at minimum) or the
/// limit is reached.
std::vector<StaircasePoint> fidelity_staircase(const std::vector<double>& distances_km,
                                               const HardwareProfile& profile,
                                               const ExperimentSettings& settings,
                                               std::uint64_t base_seed, unsigned replicates,
                                               std::size_t start_routers = 2,
                                               std::size_t max_routers = 19,
                                               double recovery_fraction = 0.0);

struct RegressionFit {
  double slope{0.0};
  double intercept{0.0};
  double r_squared{0.0};
  /// Standard error of the slope; 0 for an exact fit or two points.
  double slope_se{0.0};
  std::size_t n{0};
};

/// Ordinary least squares. Throws DomainError when x has no spread.
RegressionFit fit_linear(const std::vector<std::pair<double, double>>& points);

struct ClassSummary {
  std::size_t rows{0};
  double mean_e_count{0.0};
  std::optional<RegressionFit> fit;
};

struct TrendSummary {
  std::optional<RegressionFit> overall;
  std::optional<ClassSummary> even;
  std::optional<ClassSummary> odd;
  /// Odd rows keyed by their sub-class ("left", "right", "center").
  std::map<std::string, ClassSummary> odd_classes;

  int slope_sign() const;
};

/// E_count against router count, split by parity and odd sub-class.
TrendSummary summarize_trend(const std::vector<ExperimentResult>& results);

/// Built-in hardware profiles: swap-limited, loss-limited, idealized,
/// long-haul and ideal.
const std::map<std::string, HardwareProfile>& builtin_profiles();

}  // namespace repeaterlab
