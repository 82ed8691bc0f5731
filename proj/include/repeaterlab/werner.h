#pragma once

#include <cstdint>
#include <span>

#include "repeaterlab/sim_time.h"
#include "repeaterlab/timeline.h"

namespace repeaterlab {

using SlotId = std::uint32_t;
using PairId = std::uint64_t;

struct Endpoint {
  NodeId node{0};
  SlotId slot{0};

  friend constexpr bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// Werner-state model of an entangled pair. The state is the Bell state mixed
/// with white noise; w is the weight of the Bell component.
struct WernerPair {
  PairId id{0};
  Endpoint end_a;
  Endpoint end_b;
  double w{1.0};
  SimTime created_at;
  SimTime last_touched;
  SimTime tau_coh{SimTime::picoseconds(1)};
};

/// Pauli frame owed to one endpoint after a heralded outcome. `outstanding`
/// is set when an outcome issues the frame and cleared by apply_correction,
/// so an identity outcome still counts as exactly one correction.
struct CorrectionFrame {
  bool pending_x{false};
  bool pending_z{false};
  bool outstanding{false};

  static CorrectionFrame from_bell_index(unsigned bell_index) {
    return CorrectionFrame{(bell_index & 1U) != 0, (bell_index & 2U) != 0, true};
  }
};

/// F = (1 + 3w) / 4. Throws DomainError outside [0, 1].
double fidelity_of(double w);

/// Inverse of fidelity_of; F must lie in [0.25, 1].
double werner_from_fidelity(double fidelity);

/// w * exp(-elapsed / tau_coh). Throws DomainError if tau_coh is zero.
double decay(double w, SimTime elapsed, SimTime tau_coh);

/// Werner parameter of the pair produced by swapping two Werner pairs.
double swap_compose(double w1, double w2);

/// Folds swap_compose over a chain of pairs (left to right).
double swap_compose_chain(std::span<const double> ws);

/// Clears the frame. Throws ProtocolFault if it was already cleared.
CorrectionFrame apply_correction(CorrectionFrame frame);

/// Brings the pair's w up to `now` and stamps last_touched.
void refresh(WernerPair& pair, SimTime now);

}  // namespace repeaterlab
