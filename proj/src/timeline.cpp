#include "repeaterlab/timeline.h"

#include <algorithm>
#include <exception>

#include "repeaterlab/errors.h"

namespace repeaterlab {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kPhotonArrival:
      return "photon_arrival";
    case EventKind::kMessageDelivery:
      return "message_delivery";
    case EventKind::kDecayCheckpoint:
      return "decay_checkpoint";
    case EventKind::kProtocolTimer:
      return "protocol_timer";
  }
  return "unknown";
}

Timeline::Timeline(SimTime horizon) : horizon_(horizon) {}

EventHandle Timeline::schedule(SimTime delay, NodeId target, EventKind kind,
                               std::function<void()> action) {
  const SimTime fire_at = now_ + delay;
  const std::uint64_t seq = next_seq_++;
  heap_.push_back(Event{fire_at, seq, target, kind, std::move(action)});
  std::push_heap(heap_.begin(), heap_.end(), Later{});
  live_.emplace(seq, fire_at);
  ++counters_.scheduled;
  return EventHandle{seq};
}

bool Timeline::cancel(EventHandle handle) {
  if (!handle.valid() || live_.erase(handle.seq) == 0) {
    return false;
  }
  ++counters_.cancelled;
  return true;
}

std::size_t Timeline::cancel_all() {
  const std::size_t n = live_.size();
  counters_.cancelled += n;
  live_.clear();
  heap_.clear();
  return n;
}

SimTime Timeline::run() {
  stop_requested_ = false;
  while (!heap_.empty() && !stop_requested_) {
    if (!live_.contains(heap_.front().seq)) {
      // cancelled earlier; drop lazily
      std::pop_heap(heap_.begin(), heap_.end(), Later{});
      heap_.pop_back();
      continue;
    }
    if (heap_.front().fire_at > horizon_) {
      break;
    }
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Event event = std::move(heap_.back());
    heap_.pop_back();
    live_.erase(event.seq);

    now_ = event.fire_at;
    last_dispatch_ = now_;
    ++counters_.dispatched;
    try {
      event.action();
    } catch (const SimulationFault&) {
      throw;
    } catch (const std::exception& e) {
      throw SimulationFault(now_, e.what());
    }
    if (observer_) {
      observer_(event);
    }
  }
  return last_dispatch_;
}

std::size_t Timeline::pending_beyond_horizon() const {
  return static_cast<std::size_t>(std::count_if(
      live_.begin(), live_.end(), [this](const auto& entry) { return entry.second > horizon_; }));
}

}  // namespace repeaterlab
