#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "repeaterlab/sim_time.h"

namespace repeaterlab {

using NodeId = std::uint32_t;

enum class EventKind : std::uint8_t {
  kPhotonArrival,
  kMessageDelivery,
  kDecayCheckpoint,
  kProtocolTimer,
};

const char* to_string(EventKind kind);

struct Event {
  SimTime fire_at;
  std::uint64_t seq{0};
  NodeId target{0};
  EventKind kind{EventKind::kProtocolTimer};
  std::function<void()> action;
};

struct EventHandle {
  static constexpr std::uint64_t kInvalid = ~std::uint64_t{0};
  std::uint64_t seq{kInvalid};

  bool valid() const { return seq != kInvalid; }
};

struct TimelineCounters {
  std::uint64_t scheduled{0};
  std::uint64_t dispatched{0};
  std::uint64_t cancelled{0};
};

/// Discrete-event timeline. Events dispatch in (fire_at, seq) order where seq
/// is the global insertion counter, so equal timestamps resolve by scheduling
/// order and never by target.
class Timeline {
 public:
  explicit Timeline(SimTime horizon);

  Timeline(const Timeline&) = delete;
  Timeline& operator=(const Timeline&) = delete;

  /// Enqueue at now + delay. Throws ConfigError if fire_at overflows.
  EventHandle schedule(SimTime delay, NodeId target, EventKind kind, std::function<void()> action);

  /// True iff the event existed and had not fired or been cancelled.
  bool cancel(EventHandle handle);

  /// Cancels every pending event; returns how many were cancelled.
  std::size_t cancel_all();

  /// Dispatches events with fire_at <= horizon until the queue drains, the
  /// horizon is reached, or request_stop() is called from a handler. Returns
  /// the time of the last dispatched event (0 if none ever fired). A handler
  /// exception aborts the run as a SimulationFault stamped with the current time.
  SimTime run();

  /// Makes the enclosing run() return after the current handler.
  void request_stop() { stop_requested_ = true; }

  /// Called after every dispatched event; must not schedule or draw randomness.
  void set_observer(std::function<void(const Event&)> observer) { observer_ = std::move(observer); }

  SimTime now() const { return now_; }
  SimTime horizon() const { return horizon_; }
  const TimelineCounters& counters() const { return counters_; }
  std::size_t pending() const { return live_.size(); }
  std::size_t pending_beyond_horizon() const;

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.fire_at != b.fire_at ? a.fire_at > b.fire_at : a.seq > b.seq;
    }
  };

  SimTime now_{};
  SimTime horizon_;
  SimTime last_dispatch_{};
  std::uint64_t next_seq_{0};
  bool stop_requested_{false};
  std::vector<Event> heap_;
  std::unordered_map<std::uint64_t, SimTime> live_;
  TimelineCounters counters_;
  std::function<void(const Event&)> observer_;
};

}  // namespace repeaterlab
