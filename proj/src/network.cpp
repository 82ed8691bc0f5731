#include "repeaterlab/network.h"

#include <cmath>
#include <numeric>

#include "repeaterlab/errors.h"

namespace repeaterlab {

namespace {

bool same_memory(const MemorySpec& a, const MemorySpec& b) {
  return a.slots == b.slots && a.tau_coh == b.tau_coh && a.f_init == b.f_init &&
         a.emit_frequency_hz == b.emit_frequency_hz;
}

bool same_hop(const HopSpec& a, const HopSpec& b) {
  return a.length_km == b.length_km && a.bsm_fraction == b.bsm_fraction &&
         a.attenuation_db_per_km == b.attenuation_db_per_km &&
         a.light_speed_km_per_s == b.light_speed_km_per_s &&
         a.classical_delay_s == b.classical_delay_s &&
         a.bsm.intrinsic_success == b.bsm.intrinsic_success &&
         a.bsm.detector_efficiency == b.bsm.detector_efficiency;
}

HopSpec hop_from_profile(const HardwareProfile& profile, double length_km) {
  return HopSpec{length_km,
                 profile.bsm_position_fraction,
                 profile.attenuation_db_per_km,
                 profile.light_speed_km_per_s,
                 profile.classical_delay_s,
                 profile.bsm()};
}

}  // namespace

double TopologySpec::total_km() const {
  return std::accumulate(hops.begin(), hops.end(), 0.0,
                         [](double acc, const HopSpec& h) { return acc + h.length_km; });
}

bool TopologySpec::homogeneous() const {
  for (std::size_t i = 1; i < hops.size(); ++i) {
    if (!same_hop(hops[i], hops[0])) {
      return false;
    }
  }
  for (std::size_t i = 1; i < routers.size(); ++i) {
    if (!same_memory(routers[i], routers[0])) {
      return false;
    }
  }
  return true;
}

void TopologySpec::validate() const {
  if (routers.size() < 2) {
    throw ConfigError("router_count must be >= 2");
  }
  if (hops.size() + 1 != routers.size()) {
    throw ConfigError("hop count must be router_count - 1");
  }
  for (const MemorySpec& m : routers) {
    m.validate();
  }
  for (const HopSpec& h : hops) {
    if (!(std::isfinite(h.length_km) && h.length_km > 0.0)) {
      throw ConfigError("hop distance must be > 0 km");
    }
    if (!(h.bsm_fraction > 0.0 && h.bsm_fraction < 1.0)) {
      throw ConfigError("bsm_position_fraction must be in (0, 1)");
    }
    if (!(std::isfinite(h.classical_delay_s) && h.classical_delay_s >= 0.0)) {
      throw ConfigError("classical_delay_s must be >= 0");
    }
    QuantumChannelSpec{h.length_km, h.attenuation_db_per_km, h.light_speed_km_per_s}.validate();
    h.bsm.validate();
  }
  swap_bsm.validate();
}

TopologySpec TopologySpec::homogeneous(const HardwareProfile& profile, std::size_t routers,
                                       double total_km) {
  if (routers < 2) {
    throw ConfigError("router_count must be >= 2");
  }
  return from_hops(profile,
                   std::vector<double>(routers - 1, total_km / static_cast<double>(routers - 1)));
}

TopologySpec TopologySpec::from_hops(const HardwareProfile& profile,
                                     const std::vector<double>& hop_km) {
  profile.validate();
  TopologySpec spec;
  spec.routers.assign(hop_km.size() + 1, profile.memory());
  for (double d : hop_km) {
    spec.hops.push_back(hop_from_profile(profile, d));
  }
  spec.swap_bsm = profile.swap_bsm();
  spec.validate();
  return spec;
}

SimTime Chain::classical_delay(std::size_t router_i, std::size_t router_j) const {
  const SimTime a = prefix.at(router_i);
  const SimTime b = prefix.at(router_j);
  return a < b ? b - a : a - b;
}

Chain build_chain(const TopologySpec& spec, const RandomStream& root) {
  spec.validate();
  const std::size_t n = spec.router_count();
  Chain chain;
  chain.memories.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    chain.memories.emplace_back(static_cast<NodeId>(i), spec.routers[i]);
  }
  for (std::size_t id = 0; id < n + spec.bsm_count(); ++id) {
    chain.rngs.push_back(root.fork(id));
  }
  chain.prefix.push_back(SimTime::zero());
  for (std::size_t i = 0; i < spec.hops.size(); ++i) {
    const HopSpec& hop = spec.hops[i];
    LinkSpec link;
    link.router_a = static_cast<NodeId>(i);
    link.router_b = static_cast<NodeId>(i + 1);
    link.bsm = chain.bsm_node(i);
    link.chan_a = {hop.length_km * hop.bsm_fraction, hop.attenuation_db_per_km,
                   hop.light_speed_km_per_s};
    link.chan_b = {hop.length_km * (1.0 - hop.bsm_fraction), hop.attenuation_db_per_km,
                   hop.light_speed_km_per_s};
    const SimTime extra = SimTime::from_seconds(hop.classical_delay_s);
    link.cls_a = classical_alongside(link.chan_a, extra);
    link.cls_b = classical_alongside(link.chan_b, extra);
    link.bsm_spec = hop.bsm;
    chain.prefix.push_back(chain.prefix.back() + link.cls_a.delay + link.cls_b.delay);
    chain.links.push_back(link);
  }
  return chain;
}

// ---------------------------------------------------------------------------

const char* to_string(RootPlacement placement) {
  switch (placement) {
    case RootPlacement::kLeaf:
      return "leaf";
    case RootPlacement::kCenter:
      return "center";
    case RootPlacement::kCentralLink:
      return "central_link";
    case RootPlacement::kLeft:
      return "left";
    case RootPlacement::kRight:
      return "right";
  }
  return "unknown";
}

std::size_t SwapTree::leaf_count() const {
  std::size_t n = 0;
  for (const Node& node : nodes) {
    n += node.leaf() ? 1 : 0;
  }
  return n;
}

std::size_t SwapTree::swap_points() const {
  std::size_t n = 0;
  for (const Node& node : nodes) {
    n += node.leaf() ? 0 : node.children.size() - 1;
  }
  return n;
}

namespace {

std::size_t add_node(SwapTree& tree, std::size_t first, std::size_t last,
                     std::vector<std::size_t> children) {
  tree.nodes.push_back(SwapTree::Node{first, last, std::move(children)});
  return tree.nodes.size() - 1;
}

// Binary merge over links [first, last]; the larger half goes to the outer side.
std::size_t balanced(SwapTree& tree, std::size_t first, std::size_t last, bool larger_left) {
  if (first == last) {
    return add_node(tree, first, last, {});
  }
  const std::size_t n = last - first + 1;
  const std::size_t left_size = larger_left ? (n + 1) / 2 : n / 2;
  const std::size_t l = balanced(tree, first, first + left_size - 1, larger_left);
  const std::size_t r = balanced(tree, first + left_size, last, larger_left);
  return add_node(tree, first, last, {l, r});
}

}  // namespace

SwapTree plan_swap_order(std::size_t router_count, std::uint64_t request_index) {
  if (router_count < 2) {
    throw ConfigError("router_count must be >= 2");
  }
  const std::size_t links = router_count - 1;
  SwapTree tree;
  if (links == 1) {
    tree.root = add_node(tree, 0, 0, {});
    tree.placement = RootPlacement::kLeaf;
  } else if (links % 2 == 1) {
    const std::size_t c = links / 2;
    const std::size_t l = balanced(tree, 0, c - 1, true);
    const std::size_t m = add_node(tree, c, c, {});
    const std::size_t r = balanced(tree, c + 1, links - 1, false);
    tree.root = add_node(tree, 0, links - 1, {l, m, r});
    tree.placement = RootPlacement::kCentralLink;
  } else if (links == 2) {
    const std::size_t l = add_node(tree, 0, 0, {});
    const std::size_t r = add_node(tree, 1, 1, {});
    tree.root = add_node(tree, 0, 1, {l, r});
    tree.placement = RootPlacement::kCenter;
  } else {
    const bool left = request_index % 2 == 0;
    const std::size_t left_links = left ? links / 2 - 1 : links / 2 + 1;
    const std::size_t l = balanced(tree, 0, left_links - 1, true);
    const std::size_t r = balanced(tree, left_links, links - 1, false);
    tree.root = add_node(tree, 0, links - 1, {l, r});
    tree.placement = left ? RootPlacement::kLeft : RootPlacement::kRight;
  }
  return tree;
}

// ---------------------------------------------------------------------------

// Operands of one internal node still waiting to be merged. A segment covers
// children [first, last]; adjacent ready segments merge one swap at a time.
struct Segment {
  std::size_t first{0};
  std::size_t last{0};
  std::optional<PairId> pair;
};

struct NetworkManager::Attempt {
  EntanglementRequest request;
  SwapTree tree;
  std::vector<std::size_t> parent;
  std::vector<std::vector<Segment>> segments;
  std::vector<bool> merging;
  std::vector<std::unique_ptr<GenerationSession>> generations;
  std::vector<std::unique_ptr<SwapSession>> swaps;
  SessionId control_session{0};
  bool done{false};
  AttemptOutcome outcome;
};

NetworkManager::NetworkManager(const TopologySpec& spec, const ManagerOptions& options)
    : spec_(spec),
      options_(options),
      timeline_(options.horizon),
      chain_(build_chain(spec, RandomStream(options.seed))),
      env_{timeline_, chain_.memories, chain_.rngs, pairs_, stats_, options.trace} {
  if (options_.retry_budget == 0) {
    throw ConfigError("retry_budget must be >= 1");
  }
  timeline_.set_observer([this](const Event&) { check_invariants(); });
}

NetworkManager::~NetworkManager() = default;

void NetworkManager::check_invariants() {
  ++report_.events_checked;
  if (!pairs_.conserved()) {
    ++report_.conservation_violations;
  }
}

AttemptOutcome NetworkManager::handle_request(const EntanglementRequest& request) {
  const std::size_t n = chain_.router_count();
  if (request.src >= request.dst || request.dst >= n) {
    throw ConfigError("request endpoints must be distinct routers with src < dst < " +
                      std::to_string(n));
  }
  Attempt attempt;
  attempt.request = request;
  attempt.tree = plan_swap_order(request.dst - request.src + 1, request.index);
  attempt.parent.assign(attempt.tree.nodes.size(), attempt.tree.root);
  for (std::size_t i = 0; i < attempt.tree.nodes.size(); ++i) {
    for (std::size_t child : attempt.tree.nodes[i].children) {
      attempt.parent[child] = i;
    }
  }
  attempt.segments.resize(attempt.tree.nodes.size());
  attempt.merging.assign(attempt.tree.nodes.size(), false);
  for (std::size_t i = 0; i < attempt.tree.nodes.size(); ++i) {
    reset_segments(attempt, i, 0, attempt.tree.nodes[i].children.size());
  }
  attempt.control_session = next_session_++;
  attempt.outcome.started = timeline_.now();
  attempt.outcome.placement = attempt.tree.placement;
  const ProtocolStats before = stats_;

  timeline_.schedule(request.deadline, static_cast<NodeId>(request.src),
                     EventKind::kProtocolTimer,
                     [this, &attempt] { finish(attempt, false, "horizon", std::nullopt); });

  // EmitNow travels hop by hop from the source; each link starts generating
  // once its right-hand router has the instruction.
  std::function<void(std::size_t)> forward = [&](std::size_t hop) {
    const std::size_t from = request.src + hop;
    env_.send({MessageKind::kEmitNow, static_cast<NodeId>(from), static_cast<NodeId>(from + 1),
               attempt.control_session, timeline_.now()},
              chain_.classical_delay(from, from + 1), [this, &attempt, &forward, hop] {
                if (attempt.done) {
                  return;
                }
                start_leaf(attempt, hop);
                if (request_links(attempt) > hop + 1) {
                  forward(hop + 1);
                }
              });
  };
  forward(0);

  timeline_.run();
  if (!attempt.done) {
    finish(attempt, false, "horizon", std::nullopt);
  }
  teardown(attempt);
  attempt.outcome.generation_sessions = stats_.generation_sessions - before.generation_sessions;
  attempt.outcome.swap_sessions = stats_.swap_sessions - before.swap_sessions;
  return attempt.outcome;
}

std::size_t NetworkManager::request_links(const Attempt& attempt) {
  return attempt.request.dst - attempt.request.src;
}

std::size_t NetworkManager::leaf_for_link(const Attempt& attempt, std::size_t link) {
  for (std::size_t i = 0; i < attempt.tree.nodes.size(); ++i) {
    const SwapTree::Node& node = attempt.tree.nodes[i];
    if (node.leaf() && node.first_link == link) {
      return i;
    }
  }
  throw ProtocolFault("no leaf for link " + std::to_string(link));
}

void NetworkManager::start_leaf(Attempt& attempt, std::size_t link) {
  const std::size_t node = leaf_for_link(attempt, link);
  const LinkSpec& spec = chain_.links.at(attempt.request.src + link);
  auto session = std::make_unique<GenerationSession>(
      env_, next_session_++, spec, options_.retry_budget,
      [this, &attempt, node](PairId pair) { on_node_ready(attempt, node, pair); },
      [this, &attempt](const std::string& reason) {
        finish(attempt, false, reason, std::nullopt);
      });
  GenerationSession& ref = *session;
  attempt.generations.push_back(std::move(session));
  try {
    ref.start();
  } catch (const ResourceError&) {
    finish(attempt, false, "resources", std::nullopt);
  }
}

void NetworkManager::start_subtree(Attempt& attempt, std::size_t node) {
  const SwapTree::Node& n = attempt.tree.nodes[node];
  if (n.leaf()) {
    start_leaf(attempt, n.first_link);
    return;
  }
  reset_segments(attempt, node, 0, n.children.size());
  for (std::size_t child : n.children) {
    start_subtree(attempt, child);
  }
}

void NetworkManager::reset_segments(Attempt& attempt, std::size_t node, std::size_t first,
                                    std::size_t last) {
  std::vector<Segment>& segs = attempt.segments[node];
  std::vector<Segment> out;
  for (const Segment& seg : segs) {
    if (seg.last < first || seg.first >= last) {
      out.push_back(seg);
    }
  }
  for (std::size_t c = first; c < last; ++c) {
    out.push_back(Segment{c, c, std::nullopt});
  }
  std::sort(out.begin(), out.end(),
            [](const Segment& a, const Segment& b) { return a.first < b.first; });
  segs = std::move(out);
}

void NetworkManager::on_node_ready(Attempt& attempt, std::size_t node, PairId pair) {
  if (attempt.done) {
    return;
  }
  if (node == attempt.tree.root) {
    WernerPair& p = pairs_.at(pair);
    refresh(p, timeline_.now());
    const double f = fidelity_of(p.w);
    const bool ok = f >= attempt.request.f_threshold;
    finish(attempt, ok, ok ? "" : "fidelity", f);
    return;
  }
  const std::size_t parent = attempt.parent[node];
  const std::vector<std::size_t>& siblings = attempt.tree.nodes[parent].children;
  const std::size_t pos =
      static_cast<std::size_t>(std::find(siblings.begin(), siblings.end(), node) - siblings.begin());
  for (Segment& seg : attempt.segments[parent]) {
    if (seg.first == pos && seg.last == pos) {
      seg.pair = pair;
    }
  }
  try_merge(attempt, parent);
}

void NetworkManager::try_merge(Attempt& attempt, std::size_t node) {
  if (attempt.merging[node]) {
    return;
  }
  const std::vector<Segment>& segs = attempt.segments[node];
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    if (segs[i].pair && segs[i + 1].pair) {
      run_swap(attempt, node, i);
      return;
    }
  }
}

void NetworkManager::run_swap(Attempt& attempt, std::size_t node, std::size_t seg) {
  const SwapTree::Node& n = attempt.tree.nodes[node];
  const Segment left_seg = attempt.segments[node][seg];
  const Segment right_seg = attempt.segments[node][seg + 1];
  const std::size_t base = attempt.request.src;
  const auto& nodes = attempt.tree.nodes;
  const std::size_t left = base + nodes[n.children[left_seg.first]].first_link;
  const std::size_t right = base + nodes[n.children[right_seg.last]].last_link + 1;
  const std::size_t router = base + nodes[n.children[left_seg.last]].last_link + 1;

  SwapPlan plan;
  plan.operands = {*left_seg.pair, *right_seg.pair};
  plan.delay_to_left.push_back(chain_.classical_delay(router, left));
  plan.delay_to_right.push_back(chain_.classical_delay(router, right));
  attempt.merging[node] = true;

  auto session = std::make_unique<SwapSession>(
      env_, next_session_++, std::move(plan), spec_.swap_bsm,
      [this, &attempt, node, left_seg, right_seg](PairId pair) {
        attempt.merging[node] = false;
        if (attempt.done) {
          return;
        }
        std::vector<Segment>& segs = attempt.segments[node];
        std::erase_if(segs, [&](const Segment& s) { return s.first == right_seg.first; });
        for (Segment& s : segs) {
          if (s.first == left_seg.first) {
            s = Segment{left_seg.first, right_seg.last, pair};
          }
        }
        if (segs.size() == 1) {
          on_node_ready(attempt, node, pair);
        } else {
          try_merge(attempt, node);
        }
      },
      [this, &attempt, node, left_seg, right_seg](const std::string&) {
        attempt.merging[node] = false;
        if (attempt.done) {
          return;
        }
        reset_segments(attempt, node, left_seg.first, right_seg.last + 1);
        for (std::size_t c = left_seg.first; c <= right_seg.last; ++c) {
          start_subtree(attempt, attempt.tree.nodes[node].children[c]);
        }
        try_merge(attempt, node);
      });
  SwapSession& ref = *session;
  attempt.swaps.push_back(std::move(session));
  ref.run();
}

void NetworkManager::finish(Attempt& attempt, bool success, std::string reason,
                            std::optional<double> fidelity) {
  if (attempt.done) {
    return;
  }
  attempt.done = true;
  attempt.outcome.success = success;
  attempt.outcome.reason = std::move(reason);
  attempt.outcome.fidelity = fidelity;
  attempt.outcome.finished = timeline_.now();
  timeline_.request_stop();
}

void NetworkManager::teardown(Attempt& attempt) {
  timeline_.cancel_all();
  for (auto& g : attempt.generations) {
    g->abort();
  }
  for (auto& s : attempt.swaps) {
    s->abort();
  }
  for (PairId id : pairs_.live_ids()) {
    const WernerPair& p = pairs_.at(id);
    chain_.memories.at(p.end_a.node).release(p.end_a.slot);
    chain_.memories.at(p.end_b.node).release(p.end_b.slot);
    pairs_.expire(id);
  }
  for (const Memory& m : chain_.memories) {
    if (!m.all_free()) {
      ++report_.slot_leaks;
    }
  }
  if (!pairs_.conserved()) {
    ++report_.conservation_violations;
  }
  const std::uint64_t outcomes = stats_.generation_successes + stats_.swap_successes;
  if (stats_.corrections_applied + stats_.corrections_discarded != outcomes) {
    ++report_.correction_mismatches;
  }
}

}  // namespace repeaterlab
