#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "repeaterlab/errors.h"
#include "repeaterlab/random.h"
#include "repeaterlab/werner.h"

using namespace repeaterlab;
using Catch::Approx;

namespace {

SimTime seconds(double s) { return SimTime::from_seconds(s); }

double rel_err(double a, double b) {
  const double scale = std::max(std::fabs(a), std::fabs(b));
  return scale == 0.0 ? 0.0 : std::fabs(a - b) / scale;
}

}  // namespace

TEST_CASE("fidelity_of examples", "[werner]") {
  CHECK(fidelity_of(1.0) == 1.0);
  CHECK(fidelity_of(0.0) == 0.25);
  CHECK(fidelity_of(2.0 / 3.0) == Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(fidelity_of(-0.01), DomainError);
  CHECK_THROWS_AS(fidelity_of(1.01), DomainError);
  CHECK(werner_from_fidelity(0.75) == Approx(2.0 / 3.0));
  CHECK_THROWS_AS(werner_from_fidelity(0.2), DomainError);
}

TEST_CASE("decay examples", "[werner]") {
  const SimTime tau = seconds(2.0);
  CHECK(decay(0.8, SimTime::zero(), tau) == 0.8);
  CHECK(decay(1.0, tau, tau) == Approx(0.367879).margin(1e-6));
  const double far = decay(1.0, seconds(2000.0), tau);
  CHECK(far < 1e-200);
  CHECK(fidelity_of(far) == Approx(0.25));
  CHECK_THROWS_AS(decay(1.0, tau, SimTime::zero()), DomainError);
}

TEST_CASE("swap_compose examples", "[werner]") {
  CHECK(swap_compose(1.0, 1.0) == 1.0);
  CHECK(swap_compose(0.7, 0.0) == 0.0);
  for (int k = 1; k <= 12; ++k) {
    const double w = 0.93;
    const std::vector<double> ws(static_cast<std::size_t>(k), w);
    const double folded = swap_compose_chain(ws);
    CHECK(rel_err(folded, std::pow(w, k)) < 1e-12);
    CHECK(fidelity_of(folded) == Approx((1.0 + 3.0 * std::pow(w, k)) / 4.0).epsilon(1e-12));
  }
}

TEST_CASE("apply_correction clears once and faults on double delivery", "[werner]") {
  const CorrectionFrame frame{true, false, true};
  const CorrectionFrame cleared = apply_correction(frame);
  CHECK_FALSE(cleared.pending_x);
  CHECK_FALSE(cleared.pending_z);
  CHECK_FALSE(cleared.outstanding);
  CHECK_THROWS_AS(apply_correction(cleared), ProtocolFault);
  for (unsigned b = 0; b < 4; ++b) {
    const CorrectionFrame f = CorrectionFrame::from_bell_index(b);
    CHECK(f.outstanding);
    CHECK(f.pending_x == ((b & 1U) != 0));
    CHECK(f.pending_z == ((b & 2U) != 0));
  }
}

TEST_CASE("decay splits multiplicatively", "[werner][property]") {
  RandomStream rng(2024);
  for (int i = 0; i < 300; ++i) {
    const double w = rng.uniform();
    const SimTime tau = seconds(0.001 + 10.0 * rng.uniform());
    const SimTime t1 = seconds(5.0 * rng.uniform());
    const SimTime t2 = seconds(5.0 * rng.uniform());
    const double split = decay(decay(w, t1, tau), t2, tau);
    const double whole = decay(w, t1 + t2, tau);
    CHECK(rel_err(split, whole) < 1e-12);
  }
}

TEST_CASE("swap composition is associative and commutative", "[werner][property]") {
  RandomStream rng(77);
  for (int i = 0; i < 300; ++i) {
    const double a = rng.uniform();
    const double b = rng.uniform();
    const double c = rng.uniform();
    CHECK(rel_err(swap_compose(a, b), swap_compose(b, a)) < 1e-12);
    CHECK(rel_err(swap_compose(swap_compose(a, b), c), swap_compose(a, swap_compose(b, c))) <
          1e-12);
  }
  for (int i = 0; i < 100; ++i) {
    std::vector<double> ws(2 + rng.below(10));
    for (double& w : ws) {
      w = rng.uniform();
    }
    const double forward = swap_compose_chain(ws);
    std::vector<double> reversed(ws.rbegin(), ws.rend());
    CHECK(rel_err(forward, swap_compose_chain(reversed)) < 1e-12);
  }
}

TEST_CASE("fidelity is monotone and w stays in [0, 1]", "[werner][property]") {
  RandomStream rng(5);
  for (int i = 0; i < 300; ++i) {
    const double a = rng.uniform();
    const double b = rng.uniform();
    if (a != b) {
      CHECK((fidelity_of(std::max(a, b)) > fidelity_of(std::min(a, b))));
    }
    const SimTime tau = seconds(0.01 + rng.uniform());
    const SimTime t1 = seconds(rng.uniform());
    const SimTime t2 = t1 + seconds(rng.uniform());
    const double d1 = decay(a, t1, tau);
    const double d2 = decay(a, t2, tau);
    CHECK(fidelity_of(d2) <= fidelity_of(d1));
    for (double v : {d1, d2, swap_compose(a, b)}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(fidelity_of(d2) >= 0.25);
  }
}

TEST_CASE("swap output never beats its weakest operand", "[werner][property]") {
  RandomStream rng(11);
  for (int i = 0; i < 300; ++i) {
    const double a = rng.uniform();
    const double b = rng.uniform();
    CHECK(fidelity_of(swap_compose(a, b)) <= std::min(fidelity_of(a), fidelity_of(b)));
  }
}

TEST_CASE("refresh is lazy decay up to now", "[werner]") {
  WernerPair p;
  p.w = 1.0;
  p.tau_coh = seconds(1.0);
  p.created_at = SimTime::zero();
  p.last_touched = SimTime::zero();
  refresh(p, seconds(0.5));
  refresh(p, seconds(1.0));
  CHECK(p.w == Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(p.last_touched == seconds(1.0));
  refresh(p, seconds(0.2));  // stale read: no change
  CHECK(p.w == Approx(std::exp(-1.0)).epsilon(1e-12));
}
