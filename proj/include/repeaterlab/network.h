#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "repeaterlab/hardware.h"
#include "repeaterlab/protocols.h"

namespace repeaterlab {

/// One router-to-router hop through a BSM node placed at `bsm_fraction` of
/// the hop length from the left router.
struct HopSpec {
  double length_km{0.0};
  double bsm_fraction{0.5};
  double attenuation_db_per_km{0.2};
  double light_speed_km_per_s{2.0e5};
  /// Fixed processing delay added to each classical segment.
  double classical_delay_s{0.0};
  BsmSpec bsm;
};

struct TopologySpec {
  std::vector<MemorySpec> routers;
  std::vector<HopSpec> hops;
  BsmSpec swap_bsm;

  std::size_t router_count() const { return routers.size(); }
  std::size_t bsm_count() const { return hops.size(); }
  double total_km() const;
  bool homogeneous() const;
  /// Throws ConfigError for N < 2, mismatched hop count or bad distances.
  void validate() const;

  static TopologySpec homogeneous(const HardwareProfile& profile, std::size_t routers,
                                  double total_km);
  static TopologySpec from_hops(const HardwareProfile& profile,
                                const std::vector<double>& hop_km);
};

/// Node ids: routers 0..N-1, BSM node of hop i is N + i.
struct Chain {
  std::vector<Memory> memories;
  std::vector<RandomStream> rngs;
  std::vector<LinkSpec> links;
  /// Router-to-router classical delay prefix: delay(i, j) = prefix[j] - prefix[i].
  std::vector<SimTime> prefix;

  std::size_t router_count() const { return memories.size(); }
  NodeId bsm_node(std::size_t hop) const {
    return static_cast<NodeId>(memories.size() + hop);
  }
  SimTime classical_delay(std::size_t router_i, std::size_t router_j) const;
};

Chain build_chain(const TopologySpec& spec, const RandomStream& root);

enum class RootPlacement : std::uint8_t { kLeaf, kCenter, kCentralLink, kLeft, kRight };

const char* to_string(RootPlacement placement);

/// Merge tree over the N-1 elementary links. Leaves cover one link; an
/// internal node merges its children's pairs at the routers between them.
struct SwapTree {
  struct Node {
    std::size_t first_link{0};
    std::size_t last_link{0};
    std::vector<std::size_t> children;

    bool leaf() const { return children.empty(); }
  };

  std::vector<Node> nodes;
  std::size_t root{0};
  RootPlacement placement{RootPlacement::kLeaf};

  std::size_t leaf_count() const;
  /// Number of routers that perform a swap (N-2 for an N-router chain).
  std::size_t swap_points() const;
};

/// Even N: the root joins the two balanced halves and the central link; the
/// manager merges whichever neighbours of the central link are ready first.
/// Odd N: the root splits off-center, to the left for even request indices
/// and to the right for odd ones (N = 3 has a unique swap point and is
/// centered).
SwapTree plan_swap_order(std::size_t router_count, std::uint64_t request_index);

struct EntanglementRequest {
  std::size_t src{0};
  std::size_t dst{0};
  /// Budget measured from the moment the request is issued.
  SimTime deadline;
  double f_threshold{0.5};
  std::uint64_t index{0};
};

struct AttemptOutcome {
  bool success{false};
  std::optional<double> fidelity;
  std::string reason;
  SimTime started;
  SimTime finished;
  RootPlacement placement{RootPlacement::kLeaf};
  std::uint64_t generation_sessions{0};
  std::uint64_t swap_sessions{0};

  SimTime duration() const { return finished - started; }
};

struct InvariantReport {
  std::uint64_t conservation_violations{0};
  std::uint64_t slot_leaks{0};
  std::uint64_t correction_mismatches{0};
  std::uint64_t events_checked{0};

  bool clean() const {
    return conservation_violations == 0 && slot_leaks == 0 && correction_mismatches == 0;
  }

  void merge(const InvariantReport& other) {
    conservation_violations += other.conservation_violations;
    slot_leaks += other.slot_leaks;
    correction_mismatches += other.correction_mismatches;
    events_checked += other.events_checked;
  }
};

struct ManagerOptions {
  unsigned retry_budget{10};
  std::uint64_t seed{0};
  TraceSink* trace{nullptr};
  /// Total simulated time available to all requests issued on this manager.
  SimTime horizon{SimTime::max()};
};

/// Network manager for one chain: serves end-to-end requests one at a time on
/// a single timeline whose clock carries over from request to request.
class NetworkManager {
 public:
  NetworkManager(const TopologySpec& spec, const ManagerOptions& options);
  ~NetworkManager();

  NetworkManager(const NetworkManager&) = delete;
  NetworkManager& operator=(const NetworkManager&) = delete;

  AttemptOutcome handle_request(const EntanglementRequest& request);

  const Chain& chain() const { return chain_; }
  const ProtocolStats& stats() const { return stats_; }
  const PairLedger& ledger() const { return pairs_.ledger(); }
  const InvariantReport& invariants() const { return report_; }
  SimTime now() const { return timeline_.now(); }

 private:
  struct Attempt;

  static std::size_t request_links(const Attempt& attempt);
  static std::size_t leaf_for_link(const Attempt& attempt, std::size_t link);
  void start_leaf(Attempt& attempt, std::size_t node);
  void start_subtree(Attempt& attempt, std::size_t node);
  void reset_segments(Attempt& attempt, std::size_t node, std::size_t first, std::size_t last);
  void on_node_ready(Attempt& attempt, std::size_t node, PairId pair);
  void try_merge(Attempt& attempt, std::size_t node);
  void run_swap(Attempt& attempt, std::size_t node, std::size_t segment);
  void finish(Attempt& attempt, bool success, std::string reason, std::optional<double> fidelity);
  void teardown(Attempt& attempt);
  void check_invariants();

  TopologySpec spec_;
  ManagerOptions options_;
  Timeline timeline_;
  Chain chain_;
  PairStore pairs_;
  ProtocolStats stats_;
  ProtocolEnv env_;
  InvariantReport report_;
  SessionId next_session_{1};
};

}  // namespace repeaterlab
