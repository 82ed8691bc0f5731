#include "repeaterlab/protocols.h"

#include <algorithm>
#include <ostream>

#include "repeaterlab/errors.h"

namespace repeaterlab {

const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::kEmitNow:
      return "emit_now";
    case MessageKind::kBsmResult:
      return "bsm_result";
    case MessageKind::kCorrectionAck:
      return "correction_ack";
    case MessageKind::kSwapResult:
      return "swap_result";
  }
  return "unknown";
}

void TraceSink::record(const ControlMessage& msg) {
  *out_ << "{\"t\":" << msg.sent_at.ps() << ",\"from\":" << msg.from << ",\"to\":" << msg.to
        << ",\"kind\":\"" << to_string(msg.kind) << "\",\"session\":" << msg.session << "}\n";
}

// ---------------------------------------------------------------------------

WernerPair& PairStore::insert(Endpoint a, Endpoint b, double w, SimTime created_at,
                              SimTime tau_coh) {
  if (a == b) {
    throw ProtocolFault("pair endpoints must differ");
  }
  if (!(w >= 0.0 && w <= 1.0)) {
    throw ProtocolFault("Werner parameter out of range: " + std::to_string(w));
  }
  const PairId id = next_id_++;
  auto [it, inserted] =
      pairs_.emplace(id, WernerPair{id, a, b, w, created_at, created_at, tau_coh});
  return it->second;
}

WernerPair& PairStore::create(Endpoint a, Endpoint b, double w, SimTime created_at,
                              SimTime tau_coh) {
  ++ledger_.created;
  return insert(a, b, w, created_at, tau_coh);
}

WernerPair& PairStore::produce(Endpoint a, Endpoint b, double w, SimTime at, SimTime tau_coh) {
  ++ledger_.produced_by_swap;
  return insert(a, b, w, at, tau_coh);
}

void PairStore::remove(PairId id, std::uint64_t& counter) {
  if (pairs_.erase(id) == 0) {
    throw ProtocolFault("pair " + std::to_string(id) + " is not live");
  }
  ++counter;
}

void PairStore::consume(PairId id) { remove(id, ledger_.consumed_by_swap); }
void PairStore::destroy(PairId id) { remove(id, ledger_.destroyed_by_failure); }
void PairStore::expire(PairId id) { remove(id, ledger_.expired); }

WernerPair& PairStore::at(PairId id) {
  auto it = pairs_.find(id);
  if (it == pairs_.end()) {
    throw ProtocolFault("pair " + std::to_string(id) + " is not live");
  }
  return it->second;
}

std::vector<PairId> PairStore::live_ids() const {
  std::vector<PairId> ids;
  ids.reserve(pairs_.size());
  for (const auto& [id, pair] : pairs_) {
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

bool PairStore::conserved() const {
  const std::uint64_t in = ledger_.created + ledger_.produced_by_swap;
  const std::uint64_t out =
      ledger_.consumed_by_swap + ledger_.destroyed_by_failure + ledger_.expired;
  return in >= out && in - out == pairs_.size();
}

// ---------------------------------------------------------------------------

void ProtocolEnv::send(const ControlMessage& msg, SimTime delay,
                       std::function<void()> on_delivery) {
  if (trace != nullptr) {
    trace->record(msg);
  }
  timeline.schedule(delay, msg.to, EventKind::kMessageDelivery, std::move(on_delivery));
}

double generation_attempt_probability(const QuantumChannelSpec& chan_a,
                                      const QuantumChannelSpec& chan_b, const BsmSpec& bsm) {
  return bsm.success_probability() * photon_survival(chan_a) * photon_survival(chan_b);
}

SimTime pair_coherence(SimTime tau_a, SimTime tau_b) {
  const double a = static_cast<double>(tau_a.ps());
  const double b = static_cast<double>(tau_b.ps());
  return SimTime::picoseconds(static_cast<SimTime::rep>(std::llround(2.0 * a * b / (a + b))));
}

// ---------------------------------------------------------------------------

GenerationSession::GenerationSession(ProtocolEnv& env, SessionId id, const LinkSpec& link,
                                     unsigned max_attempts, DoneFn on_done, FailFn on_fail)
    : env_(env),
      id_(id),
      link_(link),
      max_attempts_(max_attempts),
      on_done_(std::move(on_done)),
      on_fail_(std::move(on_fail)) {
  if (max_attempts_ == 0) {
    throw ConfigError("max_attempts must be >= 1");
  }
}

void GenerationSession::start() {
  if (state_ != GenerationState::kIdle) {
    throw ProtocolFault("generation session started twice");
  }
  Memory& mem_a = env_.memories.at(link_.router_a);
  Memory& mem_b = env_.memories.at(link_.router_b);
  const auto a = mem_a.reserve();
  if (!a) {
    throw ResourceError("no free memory slot on router " + std::to_string(link_.router_a));
  }
  const auto b = mem_b.reserve();
  if (!b) {
    mem_a.release(*a);
    throw ResourceError("no free memory slot on router " + std::to_string(link_.router_b));
  }
  slot_a_ = *a;
  slot_b_ = *b;
  ++env_.stats.generation_sessions;
  emit();
}

void GenerationSession::emit() {
  state_ = GenerationState::kEmitting;
  ++attempt_;
  ++env_.stats.generation_attempts;

  const SimTime now = env_.timeline.now();
  const Photon pa = env_.memories[link_.router_a].try_emit(slot_a_, now);
  const Photon pb = env_.memories[link_.router_b].try_emit(slot_b_, now);
  emitted_at_ = std::min(pa.emitted_at, pb.emitted_at);
  present_a_ = false;
  present_b_ = false;

  const SimTime arrive_a = (pa.emitted_at - now) + propagation_delay(link_.chan_a);
  const SimTime arrive_b = (pb.emitted_at - now) + propagation_delay(link_.chan_b);
  RandomStream& rng = env_.rngs[link_.bsm];
  const double survive_a = photon_survival(link_.chan_a);
  const double survive_b = photon_survival(link_.chan_b);

  state_ = GenerationState::kAwaitingBsm;
  env_.timeline.schedule(arrive_a, link_.bsm, EventKind::kPhotonArrival,
                         [this, &rng, survive_a] { present_a_ = rng.bernoulli(survive_a); });
  env_.timeline.schedule(arrive_b, link_.bsm, EventKind::kPhotonArrival,
                         [this, &rng, survive_b] { present_b_ = rng.bernoulli(survive_b); });
  env_.timeline.schedule(std::max(arrive_a, arrive_b), link_.bsm, EventKind::kProtocolTimer,
                         [this] { close_window(); });
}

void GenerationSession::close_window() {
  outcome_ = bsm_outcome(present_a_, present_b_, link_.bsm_spec, env_.rngs[link_.bsm]);
  if (outcome_.success) {
    ++env_.stats.generation_successes;
    frame_ = CorrectionFrame::from_bell_index(outcome_.bell_index);
  } else {
    ++env_.stats.generation_failures;
  }
  results_seen_ = 0;
  const SimTime now = env_.timeline.now();
  env_.send({MessageKind::kBsmResult, link_.bsm, link_.router_a, id_, now}, link_.cls_a.delay,
            [this] { on_result(true); });
  env_.send({MessageKind::kBsmResult, link_.bsm, link_.router_b, id_, now}, link_.cls_b.delay,
            [this] { on_result(false); });
}

void GenerationSession::on_result(bool at_a) {
  ++results_seen_;
  if (outcome_.success) {
    if (!at_a) {
      frame_ = apply_correction(frame_);
      ++env_.stats.corrections_applied;
      state_ = GenerationState::kAwaitingCorrection;
      env_.send({MessageKind::kCorrectionAck, link_.router_b, link_.router_a, id_,
                 env_.timeline.now()},
                link_.cls_b.delay + link_.cls_a.delay, [this] { on_ack(); });
    }
    return;
  }
  if (results_seen_ < 2) {
    return;
  }
  if (attempt_ < max_attempts_) {
    emit();
    return;
  }
  state_ = GenerationState::kFailed;
  release_slots();
  on_fail_("budget");
}

void GenerationSession::on_ack() {
  if (results_seen_ != 2) {
    throw ProtocolFault("correction ack overtook the BSM result");
  }
  const Memory& mem_a = env_.memories[link_.router_a];
  const Memory& mem_b = env_.memories[link_.router_b];
  const double w_init =
      werner_from_fidelity(std::min(mem_a.spec().f_init, mem_b.spec().f_init));
  WernerPair& pair = env_.pairs.create(
      Endpoint{link_.router_a, slot_a_}, Endpoint{link_.router_b, slot_b_}, w_init, emitted_at_,
      pair_coherence(mem_a.spec().tau_coh, mem_b.spec().tau_coh));
  refresh(pair, env_.timeline.now());
  env_.memories[link_.router_a].bind(slot_a_);
  env_.memories[link_.router_b].bind(slot_b_);
  state_ = GenerationState::kDone;
  on_done_(pair.id);
}

void GenerationSession::release_slots() {
  env_.memories[link_.router_a].release(slot_a_);
  env_.memories[link_.router_b].release(slot_b_);
}

void GenerationSession::abort() {
  if (state_ == GenerationState::kIdle || state_ == GenerationState::kDone ||
      state_ == GenerationState::kFailed) {
    return;
  }
  if (outcome_.success && frame_.outstanding) {
    ++env_.stats.corrections_discarded;
  }
  release_slots();
  state_ = GenerationState::kFailed;
}

// ---------------------------------------------------------------------------

SwapSession::SwapSession(ProtocolEnv& env, SessionId id, SwapPlan plan, const BsmSpec& swap_spec,
                         DoneFn on_done, FailFn on_fail)
    : env_(env),
      id_(id),
      plan_(std::move(plan)),
      swap_spec_(swap_spec),
      on_done_(std::move(on_done)),
      on_fail_(std::move(on_fail)) {
  const std::size_t routers = plan_.operands.size() - 1;
  if (plan_.operands.size() < 2 || plan_.delay_to_left.size() != routers ||
      plan_.delay_to_right.size() != routers) {
    throw ProtocolFault("malformed swap plan");
  }
}

void SwapSession::run() {
  if (state_ != SwapState::kReady) {
    throw ProtocolFault("swap session run twice");
  }
  ++env_.stats.swap_sessions;
  const SimTime now = env_.timeline.now();
  std::vector<WernerPair*> ops;
  for (PairId id : plan_.operands) {
    if (!env_.pairs.live(id)) {
      throw ProtocolFault("swap operand " + std::to_string(id) + " already consumed");
    }
    ops.push_back(&env_.pairs.at(id));
  }
  for (std::size_t i = 0; i + 1 < ops.size(); ++i) {
    if (ops[i]->end_b.node != ops[i + 1]->end_a.node) {
      throw ProtocolFault("swap operands do not share a router");
    }
  }

  std::vector<double> ws;
  double weakest = 1.0;
  for (WernerPair* p : ops) {
    refresh(*p, now);
    ws.push_back(p->w);
    weakest = std::min(weakest, p->w);
  }

  const std::size_t routers = ops.size() - 1;
  std::vector<BsmOutcome> outcomes(routers);
  std::size_t successes = 0;
  for (std::size_t i = 0; i < routers; ++i) {
    RandomStream& rng = env_.rngs[ops[i]->end_b.node];
    outcomes[i] = bsm_outcome(true, true, swap_spec_, rng);
    successes += outcomes[i].success ? 1 : 0;
  }
  env_.stats.swap_measurements += routers;
  env_.stats.swap_successes += successes;
  success_ = successes == routers;
  state_ = SwapState::kMeasured;

  const Endpoint outer_a = ops.front()->end_a;
  const Endpoint outer_b = ops.back()->end_b;
  std::vector<NodeId> swap_routers;
  for (std::size_t i = 0; i < routers; ++i) {
    swap_routers.push_back(ops[i]->end_b.node);
  }
  for (std::size_t i = 0; i < routers; ++i) {
    env_.memories[ops[i]->end_b.node].release(ops[i]->end_b.slot);
    env_.memories[ops[i + 1]->end_a.node].release(ops[i + 1]->end_a.slot);
  }

  if (success_) {
    const double w_out = swap_compose_chain(ws);
    if (w_out > weakest * (1.0 + 1e-12)) {
      throw ProtocolFault("swap output fidelity exceeds its weakest operand");
    }
    const SimTime tau = pair_coherence(env_.memories[outer_a.node].spec().tau_coh,
                                       env_.memories[outer_b.node].spec().tau_coh);
    for (PairId id : plan_.operands) {
      env_.pairs.consume(id);
    }
    output_ = env_.pairs.produce(outer_a, outer_b, w_out, now, tau).id;
    frames_.clear();
    for (const BsmOutcome& o : outcomes) {
      frames_.push_back(CorrectionFrame::from_bell_index(o.bell_index));
    }
    frames_outstanding_ = frames_.size();
  } else {
    env_.stats.corrections_discarded += successes;
    env_.memories[outer_a.node].release(outer_a.slot);
    env_.memories[outer_b.node].release(outer_b.slot);
    for (PairId id : plan_.operands) {
      env_.pairs.destroy(id);
    }
  }

  deliveries_left_ = 2 * routers;
  for (std::size_t i = 0; i < routers; ++i) {
    env_.send({MessageKind::kSwapResult, swap_routers[i], outer_a.node, id_, now},
              plan_.delay_to_left[i], [this, i] { on_result_delivered(false, i); });
    env_.send({MessageKind::kSwapResult, swap_routers[i], outer_b.node, id_, now},
              plan_.delay_to_right[i], [this, i] { on_result_delivered(true, i); });
  }
}

void SwapSession::on_result_delivered(bool to_right, std::size_t router_index) {
  if (success_ && to_right) {
    frames_[router_index] = apply_correction(frames_[router_index]);
    ++env_.stats.corrections_applied;
    --frames_outstanding_;
  }
  if (--deliveries_left_ > 0) {
    return;
  }
  if (success_) {
    state_ = SwapState::kCorrected;
    state_ = SwapState::kDone;
    on_done_(output_);
  } else {
    state_ = SwapState::kFailed;
    on_fail_("swap");
  }
}

void SwapSession::abort() {
  if (state_ == SwapState::kMeasured) {
    env_.stats.corrections_discarded += frames_outstanding_;
    frames_outstanding_ = 0;
    state_ = SwapState::kFailed;
  }
}

}  // namespace repeaterlab
