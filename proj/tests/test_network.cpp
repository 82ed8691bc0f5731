#include <cmath>
#include <set>
#include <sstream>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "repeaterlab/errors.h"
#include "repeaterlab/network.h"
#include "repeaterlab/stats.h"

using namespace repeaterlab;
using Catch::Approx;

namespace {

HardwareProfile ideal_profile(double tau_s) {
  HardwareProfile p;
  p.name = "test";
  p.tau_coh_s = tau_s;
  p.f_init = 1.0;
  p.attenuation_db_per_km = 0.0;
  p.bsm_intrinsic_success = 1.0;
  p.swap_success = 1.0;
  return p;
}

EntanglementRequest request(std::size_t n, double deadline_s, std::uint64_t index = 0) {
  return EntanglementRequest{0, n - 1, SimTime::from_seconds(deadline_s), 0.5, index};
}

/// Checks the structural properties of a swap tree over `links` links.
void check_tree(const SwapTree& tree, std::size_t links) {
  CHECK(tree.leaf_count() == links);
  CHECK(tree.swap_points() == links - 1);
  const SwapTree::Node& root = tree.nodes.at(tree.root);
  CHECK(root.first_link == 0);
  CHECK(root.last_link == links - 1);
  std::set<std::size_t> leaves;
  for (const SwapTree::Node& n : tree.nodes) {
    if (n.leaf()) {
      CHECK(n.first_link == n.last_link);
      CHECK(leaves.insert(n.first_link).second);
      continue;
    }
    REQUIRE(n.children.size() >= 2);
    std::size_t expect = n.first_link;
    for (std::size_t c : n.children) {
      CHECK(tree.nodes[c].first_link == expect);
      expect = tree.nodes[c].last_link + 1;
    }
    CHECK(expect == n.last_link + 1);
  }
}

}  // namespace

TEST_CASE("build_chain geometry", "[network]") {
  const HardwareProfile p = ideal_profile(1.0);
  SECTION("two routers over 100 km") {
    const Chain c = build_chain(TopologySpec::homogeneous(p, 2, 100.0), RandomStream(1));
    REQUIRE(c.links.size() == 1);
    CHECK(c.links[0].chan_a.length_km == Approx(50.0));
    CHECK(c.links[0].chan_b.length_km == Approx(50.0));
    CHECK(c.links[0].bsm == 2);
    CHECK(c.rngs.size() == 3);
    CHECK(c.memories[0].all_free());
  }
  SECTION("uneven hops put BSM nodes at their midpoints") {
    const Chain c = build_chain(TopologySpec::from_hops(p, {400.0, 600.0}), RandomStream(1));
    REQUIRE(c.links.size() == 2);
    CHECK(c.links[0].chan_a.length_km == Approx(200.0));
    CHECK(c.links[1].chan_a.length_km == Approx(300.0));
    CHECK(c.classical_delay(0, 2) == SimTime::from_seconds(1000.0 / 2.0e5));
  }
  SECTION("homogeneous eleven routers over 1000 km") {
    const TopologySpec spec = TopologySpec::homogeneous(p, 11, 1000.0);
    CHECK(spec.bsm_count() == 10);
    for (const HopSpec& h : spec.hops) {
      CHECK(h.length_km == Approx(100.0));
    }
    CHECK(spec.homogeneous());
    CHECK(spec.total_km() == Approx(1000.0));
  }
  SECTION("invalid topologies") {
    CHECK_THROWS_AS(TopologySpec::homogeneous(p, 1, 100.0), ConfigError);
    CHECK_THROWS_AS(TopologySpec::from_hops(p, {100.0, -1.0}), ConfigError);
    CHECK_THROWS_AS(TopologySpec::homogeneous(p, 3, 0.0), ConfigError);
  }
}

TEST_CASE("swap tree shapes", "[network]") {
  const SwapTree two = plan_swap_order(2, 0);
  CHECK(two.placement == RootPlacement::kLeaf);
  CHECK(two.swap_points() == 0);

  const SwapTree four = plan_swap_order(4, 0);
  CHECK(four.placement == RootPlacement::kCentralLink);
  check_tree(four, 3);

  const SwapTree three = plan_swap_order(3, 5);
  CHECK(three.placement == RootPlacement::kCenter);

  const SwapTree left = plan_swap_order(5, 0);
  const SwapTree right = plan_swap_order(5, 1);
  CHECK(left.placement == RootPlacement::kLeft);
  CHECK(right.placement == RootPlacement::kRight);
  const auto split_point = [](const SwapTree& t) {
    return t.nodes[t.nodes[t.root].children.front()].last_link;
  };
  CHECK(split_point(left) == 0);
  CHECK(split_point(right) == 2);
  CHECK(plan_swap_order(5, 2).placement == RootPlacement::kLeft);
}

TEST_CASE("swap tree invariants for every chain length", "[network][property]") {
  for (std::size_t n = 2; n <= 24; ++n) {
    for (std::uint64_t index = 0; index < 3; ++index) {
      const SwapTree t = plan_swap_order(n, index);
      check_tree(t, n - 1);
      if (n % 2 == 0 && n > 2) {
        // symmetric around the central link
        const SwapTree::Node& root = t.nodes[t.root];
        REQUIRE(root.children.size() == 3);
        const SwapTree::Node& l = t.nodes[root.children[0]];
        const SwapTree::Node& r = t.nodes[root.children[2]];
        CHECK(l.last_link - l.first_link == r.last_link - r.first_link);
      }
    }
  }
}

TEST_CASE("two ideal routers reach f_init after the round-trip decay", "[network]") {
  const double tau = 0.05;
  NetworkManager m(TopologySpec::homogeneous(ideal_profile(tau), 2, 1000.0), ManagerOptions{});
  const AttemptOutcome o = m.handle_request(request(2, 1.0));
  REQUIRE(o.success);
  // EmitNow reaches router 1 after 5 ms, then the 10 ms heralding round trip
  CHECK(o.duration() == SimTime::from_seconds(0.015));
  CHECK(*o.fidelity == Approx(fidelity_of(std::exp(-0.01 / tau))).epsilon(1e-9));
  CHECK(m.invariants().clean());
}

TEST_CASE("three ideal routers match the hand-derived timeline", "[network]") {
  // hop h = 500 km, h/c = 2.5 ms. Link 0 emits at h/c and is usable at 3h/c,
  // link 1 emits at 2h/c and is usable at 4h/c; the swap at 4h/c sees ages
  // 3h/c and 2h/c, and the result reaches both ends h/c later.
  const double tau = 0.05;
  const double hc = 500.0 / 2.0e5;
  NetworkManager m(TopologySpec::homogeneous(ideal_profile(tau), 3, 1000.0), ManagerOptions{});
  const AttemptOutcome o = m.handle_request(request(3, 1.0));
  REQUIRE(o.success);
  CHECK(o.placement == RootPlacement::kCenter);
  CHECK(std::fabs(*o.fidelity - fidelity_of(std::exp(-6.0 * hc / tau))) < 1e-9);
  CHECK(o.duration() == SimTime::from_seconds(5.0 * hc));
}

TEST_CASE("a dark link makes the request fail", "[network]") {
  HardwareProfile p = ideal_profile(1.0);
  p.attenuation_db_per_km = 1000.0;
  ManagerOptions opt;
  opt.retry_budget = 4;
  NetworkManager m(TopologySpec::homogeneous(p, 4, 300.0), opt);
  const AttemptOutcome o = m.handle_request(request(4, 1.0));
  CHECK_FALSE(o.success);
  CHECK_FALSE(o.fidelity);
  CHECK(o.reason == "budget");
  CHECK(m.invariants().clean());
}

TEST_CASE("a tight deadline ends the request with reason horizon", "[network]") {
  NetworkManager m(TopologySpec::homogeneous(ideal_profile(1.0), 5, 4000.0), ManagerOptions{});
  const AttemptOutcome o = m.handle_request(request(5, 0.001));
  CHECK_FALSE(o.success);
  CHECK(o.reason == "horizon");
  for (const Memory& mem : m.chain().memories) {
    CHECK(mem.all_free());
  }
  CHECK(m.invariants().clean());
}

TEST_CASE("fidelity below the threshold is a failure", "[network]") {
  NetworkManager m(TopologySpec::homogeneous(ideal_profile(0.001), 2, 1000.0), ManagerOptions{});
  const AttemptOutcome o = m.handle_request(request(2, 1.0));
  CHECK_FALSE(o.success);
  CHECK(o.reason == "fidelity");
  REQUIRE(o.fidelity);
  CHECK(*o.fidelity < 0.5);
}

TEST_CASE("bad requests are rejected", "[network]") {
  NetworkManager m(TopologySpec::homogeneous(ideal_profile(1.0), 3, 100.0), ManagerOptions{});
  CHECK_THROWS_AS(m.handle_request(EntanglementRequest{2, 1, SimTime::from_seconds(1.0)}),
                  ConfigError);
  CHECK_THROWS_AS(m.handle_request(EntanglementRequest{0, 3, SimTime::from_seconds(1.0)}),
                  ConfigError);
}

TEST_CASE("serial requests leave no residue and keep the books balanced", "[network][property]") {
  HardwareProfile p = ideal_profile(2.0);
  p.bsm_intrinsic_success = 0.5;
  p.swap_success = 0.7;
  p.attenuation_db_per_km = 0.002;
  for (std::size_t n : {2U, 3U, 4U, 5U, 6U, 9U}) {
    ManagerOptions opt;
    opt.seed = 100 + n;
    NetworkManager m(TopologySpec::homogeneous(p, n, 2000.0), opt);
    SimTime last_end = SimTime::zero();
    for (std::uint64_t k = 0; k < 15; ++k) {
      const AttemptOutcome o = m.handle_request(request(n, 0.5, k));
      CHECK(o.started >= last_end);
      last_end = o.finished;
      for (const Memory& mem : m.chain().memories) {
        CHECK(mem.all_free());
      }
    }
    CHECK(m.invariants().clean());
    CHECK(m.invariants().events_checked > 0);
    const ProtocolStats& s = m.stats();
    CHECK(s.corrections_applied + s.corrections_discarded ==
          s.generation_successes + s.swap_successes);
  }
}

TEST_CASE("identical seeds give identical traces", "[network]") {
  HardwareProfile p = ideal_profile(2.0);
  p.bsm_intrinsic_success = 0.5;
  p.swap_success = 0.6;
  const auto run = [&](std::uint64_t seed) {
    std::ostringstream out;
    TraceSink sink(out);
    ManagerOptions opt;
    opt.seed = seed;
    opt.trace = &sink;
    NetworkManager m(TopologySpec::homogeneous(p, 5, 800.0), opt);
    std::ostringstream results;
    for (std::uint64_t k = 0; k < 10; ++k) {
      const AttemptOutcome o = m.handle_request(request(5, 0.5, k));
      results << o.success << ' ' << o.fidelity.value_or(-1.0) << ' ' << o.finished.ps() << '\n';
    }
    return out.str() + results.str();
  };
  CHECK(run(7) == run(7));
  CHECK(run(7) != run(8));
}

TEST_CASE("reversing an even chain leaves the success distribution unchanged",
          "[network][property]") {
  HardwareProfile p = ideal_profile(5.0);
  p.bsm_intrinsic_success = 0.5;
  p.swap_success = 0.8;
  p.attenuation_db_per_km = 0.004;
  const std::vector<double> hops{300.0, 900.0, 500.0};
  const std::vector<double> reversed(hops.rbegin(), hops.rend());
  const auto successes = [&](const std::vector<double>& layout, std::uint64_t salt) {
    unsigned total = 0;
    for (std::uint64_t seed = 0; seed < 150; ++seed) {
      ManagerOptions opt;
      opt.seed = mix64(seed ^ salt);
      NetworkManager m(TopologySpec::from_hops(p, layout), opt);
      for (std::uint64_t k = 0; k < 10; ++k) {
        total += m.handle_request(request(4, 1.0, k)).success ? 1 : 0;
      }
    }
    return total;
  };
  const double n = 1500.0;
  const double a = successes(hops, 1) / n;
  const double b = successes(reversed, 2) / n;
  const double pooled = (a + b) / 2.0;
  const double z = (a - b) / std::sqrt(2.0 * pooled * (1.0 - pooled) / n);
  CHECK(std::fabs(z) < 3.29);  // two-sided alpha = 0.001
}
