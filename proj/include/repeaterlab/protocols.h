#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "repeaterlab/hardware.h"
#include "repeaterlab/timeline.h"
#include "repeaterlab/werner.h"

namespace repeaterlab {

using SessionId = std::uint64_t;

enum class MessageKind : std::uint8_t { kEmitNow, kBsmResult, kCorrectionAck, kSwapResult };

const char* to_string(MessageKind kind);

struct ControlMessage {
  MessageKind kind{MessageKind::kEmitNow};
  NodeId from{0};
  NodeId to{0};
  SessionId session{0};
  SimTime sent_at;
};

/// Writes one JSON object per control message:
/// {"t":<ps>,"from":<id>,"to":<id>,"kind":"<kind>","session":<id>}
class TraceSink {
 public:
  explicit TraceSink(std::ostream& out) : out_(&out) {}
  void record(const ControlMessage& msg);

 private:
  std::ostream* out_;
};

struct PairLedger {
  std::uint64_t created{0};
  std::uint64_t consumed_by_swap{0};
  std::uint64_t produced_by_swap{0};
  std::uint64_t destroyed_by_failure{0};
  std::uint64_t expired{0};
};

/// Owns every live WernerPair and accounts for how each one left.
class PairStore {
 public:
  WernerPair& create(Endpoint a, Endpoint b, double w, SimTime created_at, SimTime tau_coh);
  WernerPair& produce(Endpoint a, Endpoint b, double w, SimTime at, SimTime tau_coh);
  void consume(PairId id);
  void destroy(PairId id);
  void expire(PairId id);

  WernerPair& at(PairId id);
  bool live(PairId id) const { return pairs_.contains(id); }
  std::size_t live_count() const { return pairs_.size(); }
  std::vector<PairId> live_ids() const;
  const PairLedger& ledger() const { return ledger_; }

  /// live = created + produced - consumed - destroyed - expired
  bool conserved() const;

 private:
  WernerPair& insert(Endpoint a, Endpoint b, double w, SimTime created_at, SimTime tau_coh);
  void remove(PairId id, std::uint64_t& counter);

  PairId next_id_{1};
  std::unordered_map<PairId, WernerPair> pairs_;
  PairLedger ledger_;
};

struct ProtocolStats {
  std::uint64_t generation_sessions{0};
  std::uint64_t generation_attempts{0};
  std::uint64_t generation_successes{0};
  std::uint64_t generation_failures{0};
  std::uint64_t swap_sessions{0};
  std::uint64_t swap_measurements{0};
  std::uint64_t swap_successes{0};
  std::uint64_t corrections_applied{0};
  std::uint64_t corrections_discarded{0};
};

/// Shared state every session acts on. Memories are indexed by router id,
/// random streams by node id (routers first, then BSM nodes).
struct ProtocolEnv {
  Timeline& timeline;
  std::vector<Memory>& memories;
  std::vector<RandomStream>& rngs;
  PairStore& pairs;
  ProtocolStats& stats;
  TraceSink* trace{nullptr};

  void send(const ControlMessage& msg, SimTime delay, std::function<void()> on_delivery);
};

/// One elementary link: router_a -- chan_a -- bsm -- chan_b -- router_b.
struct LinkSpec {
  NodeId router_a{0};
  NodeId router_b{0};
  NodeId bsm{0};
  QuantumChannelSpec chan_a;
  QuantumChannelSpec chan_b;
  ClassicalChannelSpec cls_a;
  ClassicalChannelSpec cls_b;
  BsmSpec bsm_spec;
};

/// Per-attempt heralding probability: intrinsic * eta^2 * s_a * s_b.
double generation_attempt_probability(const QuantumChannelSpec& chan_a,
                                      const QuantumChannelSpec& chan_b, const BsmSpec& bsm);

/// Coherence time of a pair whose ends sit in memories with the given times
/// (the pair's decay rate is the mean of the two memory rates).
SimTime pair_coherence(SimTime tau_a, SimTime tau_b);

enum class GenerationState : std::uint8_t {
  kIdle,
  kEmitting,
  kAwaitingBsm,
  kAwaitingCorrection,
  kDone,
  kFailed,
};

/// Heralded generation over one link, collapsed to a single composite
/// Bernoulli trial per attempt:
///   1. both routers emit from a reserved slot; photons fly to the BSM node
///   2. loss is drawn at arrival, the BSM measures when the window closes and
///      sends the result to both routers
///   3. on success router_b applies the Pauli frame and acknowledges to
///      router_a; the pair is usable once the ack lands
/// A failed attempt is retried once both routers have heard the result, up to
/// max_attempts.
class GenerationSession {
 public:
  using DoneFn = std::function<void(PairId)>;
  using FailFn = std::function<void(const std::string& reason)>;

  GenerationSession(ProtocolEnv& env, SessionId id, const LinkSpec& link, unsigned max_attempts,
                    DoneFn on_done, FailFn on_fail);

  /// Reserves one slot on each router and schedules the first emission.
  /// Throws ResourceError (leaving nothing reserved) if a router is full.
  void start();

  /// Stops the session without callbacks and releases its reservations.
  void abort();

  GenerationState state() const { return state_; }
  unsigned attempts() const { return attempt_; }
  SessionId id() const { return id_; }

 private:
  void emit();
  void close_window();
  void on_result(bool at_a);
  void on_ack();
  void release_slots();

  ProtocolEnv& env_;
  SessionId id_;
  LinkSpec link_;
  unsigned max_attempts_;
  DoneFn on_done_;
  FailFn on_fail_;

  GenerationState state_{GenerationState::kIdle};
  unsigned attempt_{0};
  SlotId slot_a_{0};
  SlotId slot_b_{0};
  bool present_a_{false};
  bool present_b_{false};
  unsigned results_seen_{0};
  BsmOutcome outcome_;
  CorrectionFrame frame_;
  SimTime emitted_at_;
};

enum class SwapState : std::uint8_t { kReady, kMeasured, kCorrected, kDone, kFailed };

/// Adjacent pairs merged in one step. Two operands is the ordinary swap at
/// their shared router; three operands perform both swaps around a central
/// link at the same instant.
struct SwapPlan {
  std::vector<PairId> operands;
  /// Classical delay from each swap router to the left / right outer endpoint.
  std::vector<SimTime> delay_to_left;
  std::vector<SimTime> delay_to_right;
};

/// Entanglement swap: Bell measurement at the shared routers, results sent to
/// both outer endpoints, Pauli frame applied at the right endpoint. On any
/// failed measurement every operand is destroyed.
class SwapSession {
 public:
  using DoneFn = std::function<void(PairId)>;
  using FailFn = std::function<void(const std::string& reason)>;

  SwapSession(ProtocolEnv& env, SessionId id, SwapPlan plan, const BsmSpec& swap_spec,
              DoneFn on_done, FailFn on_fail);

  /// Measures now. Throws ProtocolFault if an operand is no longer live or the
  /// operands are not adjacent.
  void run();
  void abort();

  SwapState state() const { return state_; }
  SessionId id() const { return id_; }

 private:
  void on_result_delivered(bool to_right, std::size_t router_index);

  ProtocolEnv& env_;
  SessionId id_;
  SwapPlan plan_;
  BsmSpec swap_spec_;
  DoneFn on_done_;
  FailFn on_fail_;

  SwapState state_{SwapState::kReady};
  bool success_{false};
  PairId output_{0};
  std::vector<CorrectionFrame> frames_;
  std::size_t deliveries_left_{0};
  std::size_t frames_outstanding_{0};
};

}  // namespace repeaterlab
