#include "repeaterlab/werner.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "repeaterlab/errors.h"

namespace repeaterlab {

namespace {

void check_unit(double w, const char* what) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throw DomainError(std::string(what) + " must lie in [0, 1], got " + std::to_string(w));
  }
}

}  // namespace

double fidelity_of(double w) {
  check_unit(w, "Werner parameter");
  return (1.0 + 3.0 * w) / 4.0;
}

double werner_from_fidelity(double fidelity) {
  if (!(fidelity >= 0.25 && fidelity <= 1.0)) {
    throw DomainError("fidelity must lie in [0.25, 1], got " + std::to_string(fidelity));
  }
  return std::clamp((4.0 * fidelity - 1.0) / 3.0, 0.0, 1.0);
}

double decay(double w, SimTime elapsed, SimTime tau_coh) {
  if (tau_coh.ps() == 0) {
    throw DomainError("coherence time must be positive");
  }
  if (elapsed.ps() == 0) {
    return w;
  }
  const double ratio =
      static_cast<double>(elapsed.ps()) / static_cast<double>(tau_coh.ps());
  return w * std::exp(-ratio);
}

double swap_compose(double w1, double w2) {
  check_unit(w1, "left operand");
  check_unit(w2, "right operand");
  return w1 * w2;
}

double swap_compose_chain(std::span<const double> ws) {
  double acc = 1.0;
  for (double w : ws) {
    acc = swap_compose(acc, w);
  }
  return acc;
}

CorrectionFrame apply_correction(CorrectionFrame frame) {
  if (!frame.outstanding) {
    throw ProtocolFault("correction applied to an already-cleared frame (double delivery)");
  }
  return CorrectionFrame{};
}

void refresh(WernerPair& pair, SimTime now) {
  pair.w = decay(pair.w, now - pair.last_touched, pair.tau_coh);
  pair.last_touched = std::max(pair.last_touched, now);
}

}  // namespace repeaterlab
