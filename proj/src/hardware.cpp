#include "repeaterlab/hardware.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "repeaterlab/errors.h"

namespace repeaterlab {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) {
    throw ConfigError(message);
  }
}

}  // namespace

SimTime MemorySpec::emit_period() const { return SimTime::from_seconds(1.0 / emit_frequency_hz); }

void MemorySpec::validate() const {
  require(slots >= 1, "memory_slots must be >= 1");
  require(tau_coh.ps() > 0, "tau_coh_s must be > 0");
  require(f_init > 0.25 && f_init <= 1.0, "f_init must be in (0.25, 1]");
  require(std::isfinite(emit_frequency_hz) && emit_frequency_hz > 0.0,
          "emit_frequency_hz must be > 0");
}

void QuantumChannelSpec::validate() const {
  require(std::isfinite(length_km) && length_km >= 0.0, "length_km must be >= 0");
  require(std::isfinite(attenuation_db_per_km) && attenuation_db_per_km >= 0.0,
          "attenuation_db_per_km must be >= 0");
  require(std::isfinite(light_speed_km_per_s) && light_speed_km_per_s > 0.0,
          "light_speed_km_per_s must be > 0");
}

void BsmSpec::validate() const {
  require(intrinsic_success > 0.0 && intrinsic_success <= 1.0,
          "bsm_intrinsic_success must be in (0, 1]");
  require(detector_efficiency > 0.0 && detector_efficiency <= 1.0,
          "detector_efficiency must be in (0, 1]");
}

double photon_survival(const QuantumChannelSpec& chan) {
  return std::pow(10.0, -chan.attenuation_db_per_km * chan.length_km / 10.0);
}

SimTime propagation_delay(const QuantumChannelSpec& chan) {
  return SimTime::from_seconds(chan.length_km / chan.light_speed_km_per_s);
}

ClassicalChannelSpec classical_alongside(const QuantumChannelSpec& chan, SimTime extra) {
  const SimTime delay = propagation_delay(chan) + extra;
  return ClassicalChannelSpec{std::max(delay, SimTime::picoseconds(1))};
}

Memory::Memory(NodeId node, MemorySpec spec)
    : node_(node),
      spec_(spec),
      period_(spec.emit_period()),
      slots_(spec.slots, SlotState::kFree),
      next_emit_(spec.slots, SimTime::zero()) {
  free_.reserve(spec.slots);
  for (SlotId s = spec.slots; s-- > 0;) {
    free_.push_back(s);
  }
}

std::optional<SlotId> Memory::reserve() {
  if (free_.empty()) {
    return std::nullopt;
  }
  const SlotId slot = free_.back();
  free_.pop_back();
  if (slots_[slot] != SlotState::kFree) {
    throw ProtocolFault("memory slot " + std::to_string(slot) + " on node " +
                        std::to_string(node_) + " aliased");
  }
  slots_[slot] = SlotState::kReserved;
  ++in_use_;
  return slot;
}

void Memory::bind(SlotId slot) {
  if (slots_.at(slot) != SlotState::kReserved) {
    throw ProtocolFault("binding a pair to slot " + std::to_string(slot) + " on node " +
                        std::to_string(node_) + " which is not reserved");
  }
  slots_[slot] = SlotState::kHolding;
}

void Memory::release(SlotId slot) {
  if (slots_.at(slot) == SlotState::kFree) {
    throw ProtocolFault("double release of slot " + std::to_string(slot) + " on node " +
                        std::to_string(node_));
  }
  slots_[slot] = SlotState::kFree;
  free_.push_back(slot);
  --in_use_;
}

Photon Memory::try_emit(SlotId slot, SimTime earliest) {
  if (slots_.at(slot) != SlotState::kReserved) {
    throw ProtocolFault("emission from unreserved slot " + std::to_string(slot) + " on node " +
                        std::to_string(node_));
  }
  const SimTime at = std::max(earliest, next_emit_[slot]);
  next_emit_[slot] = at + period_;
  return Photon{Endpoint{node_, slot}, at};
}

BsmOutcome bsm_outcome(bool photon_a_present, bool photon_b_present, const BsmSpec& spec,
                       RandomStream& rng) {
  if (!photon_a_present || !photon_b_present) {
    return {};
  }
  if (!rng.bernoulli(spec.success_probability())) {
    return {};
  }
  return BsmOutcome{true, rng.below(4)};
}

MemorySpec HardwareProfile::memory() const {
  return MemorySpec{memory_slots, SimTime::from_seconds(tau_coh_s), f_init, emit_frequency_hz};
}

BsmSpec HardwareProfile::bsm() const { return BsmSpec{bsm_intrinsic_success, detector_efficiency}; }

BsmSpec HardwareProfile::swap_bsm() const {
  if (swap_success) {
    return BsmSpec{*swap_success, 1.0};
  }
  return bsm();
}

void HardwareProfile::validate() const {
  require(std::isfinite(tau_coh_s) && tau_coh_s > 0.0, "tau_coh_s must be > 0");
  require(memory_slots >= 1, "memory_slots must be >= 1");
  require(f_init > 0.25 && f_init <= 1.0, "f_init must be in (0.25, 1]");
  require(std::isfinite(emit_frequency_hz) && emit_frequency_hz > 0.0,
          "emit_frequency_hz must be > 0");
  require(std::isfinite(attenuation_db_per_km) && attenuation_db_per_km >= 0.0,
          "attenuation_db_per_km must be >= 0");
  require(std::isfinite(light_speed_km_per_s) && light_speed_km_per_s > 0.0,
          "light_speed_km_per_s must be > 0");
  require(std::isfinite(classical_delay_s) && classical_delay_s >= 0.0,
          "classical_delay_s must be >= 0");
  require(bsm_intrinsic_success > 0.0 && bsm_intrinsic_success <= 1.0,
          "bsm_intrinsic_success must be in (0, 1]");
  require(detector_efficiency > 0.0 && detector_efficiency <= 1.0,
          "detector_efficiency must be in (0, 1]");
  if (swap_success) {
    require(*swap_success > 0.0 && *swap_success <= 1.0, "swap_success must be in (0, 1]");
  }
  require(bsm_position_fraction > 0.0 && bsm_position_fraction < 1.0,
          "bsm_position_fraction must be in (0, 1)");
}

}  // namespace repeaterlab
