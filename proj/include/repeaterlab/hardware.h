#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "repeaterlab/random.h"
#include "repeaterlab/sim_time.h"
#include "repeaterlab/werner.h"

namespace repeaterlab {

struct MemorySpec {
  std::uint32_t slots{50};
  SimTime tau_coh{SimTime::from_seconds(5.0)};
  double f_init{1.0};
  double emit_frequency_hz{1.0e6};

  /// Minimum spacing between two emissions from the same slot.
  SimTime emit_period() const;
  void validate() const;
};

struct QuantumChannelSpec {
  double length_km{0.0};
  double attenuation_db_per_km{0.2};
  double light_speed_km_per_s{2.0e5};

  void validate() const;
};

struct ClassicalChannelSpec {
  SimTime delay{SimTime::picoseconds(1)};
};

struct BsmSpec {
  double intrinsic_success{0.5};
  double detector_efficiency{1.0};

  double success_probability() const {
    return intrinsic_success * detector_efficiency * detector_efficiency;
  }
  void validate() const;
};

/// 10^(-alpha * d / 10).
double photon_survival(const QuantumChannelSpec& chan);

/// length / speed, rounded to the nearest picosecond.
SimTime propagation_delay(const QuantumChannelSpec& chan);

/// Classical delay over the fiber of a quantum segment plus a fixed
/// per-segment processing delay; never zero.
ClassicalChannelSpec classical_alongside(const QuantumChannelSpec& chan, SimTime extra);

struct Photon {
  Endpoint source;
  SimTime emitted_at;
};

enum class SlotState : std::uint8_t { kFree, kReserved, kHolding };

/// Trapped-ion register of one router.
class Memory {
 public:
  Memory(NodeId node, MemorySpec spec);

  /// Lowest free slot, or nullopt when the register is full.
  std::optional<SlotId> reserve();
  /// Attaches a live pair endpoint to a reserved slot.
  void bind(SlotId slot);
  void release(SlotId slot);

  /// Emission from a reserved slot at the earliest allowed instant not
  /// before `earliest`. Throws ProtocolFault for an unreserved slot.
  Photon try_emit(SlotId slot, SimTime earliest);

  SlotState state(SlotId slot) const { return slots_.at(slot); }
  std::uint32_t in_use() const { return in_use_; }
  bool all_free() const { return in_use_ == 0; }
  NodeId node() const { return node_; }
  const MemorySpec& spec() const { return spec_; }

 private:
  NodeId node_;
  MemorySpec spec_;
  SimTime period_;
  std::vector<SlotState> slots_;
  std::vector<SimTime> next_emit_;
  std::vector<SlotId> free_;
  std::uint32_t in_use_{0};
};

struct BsmOutcome {
  bool success{false};
  unsigned bell_index{0};
};

/// Joint measurement when the coincidence window closes. Draws nothing
/// unless both photons arrived.
BsmOutcome bsm_outcome(bool photon_a_present, bool photon_b_present, const BsmSpec& spec,
                       RandomStream& rng);

/// Named bundle of hardware parameters applied uniformly to a chain.
struct HardwareProfile {
  std::string name;
  std::uint32_t memory_slots{50};
  double tau_coh_s{5.0};
  double f_init{1.0};
  double emit_frequency_hz{1.0e6};
  double attenuation_db_per_km{0.2};
  double light_speed_km_per_s{2.0e5};
  double classical_delay_s{0.0};
  double bsm_intrinsic_success{0.5};
  double detector_efficiency{1.0};
  /// Success probability of the router-side swap measurement; when unset the
  /// swap uses the same detector model as the BSM nodes.
  std::optional<double> swap_success;
  double bsm_position_fraction{0.5};

  MemorySpec memory() const;
  BsmSpec bsm() const;
  BsmSpec swap_bsm() const;
  void validate() const;
};

}  // namespace repeaterlab
