#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "cxlgpu/common.hpp"

namespace cxlgpu {

/// Single-threaded discrete-event core. Events run in (time, seq) order.
class EventQueue {
 public:
  using Action = std::function<void()>;

  Ns now() const { return now_; }

  /// Schedules at an absolute time; scheduling in the past is a bug.
  void schedule_at(Ns when, Action action) {
    if (when < now_) {
      throw SimulationError("event scheduled in the past");
    }
    heap_.push(Event{when, next_seq_++, std::move(action)});
  }
  void schedule_in(Ns delay, Action action) { schedule_at(now_ + delay, std::move(action)); }

  bool empty() const { return heap_.empty(); }
  std::uint64_t executed() const { return executed_; }

  /// Runs one event; returns false when the queue is drained.
  bool step() {
    if (heap_.empty()) return false;
    // The action may schedule more events, so move it out before popping.
    Event ev = std::move(const_cast<Event&>(heap_.top()));
    heap_.pop();
    now_ = ev.time;
    ++executed_;
    ev.action();
    return true;
  }

  void run() {
    while (step()) {
    }
  }

  /// Runs every event with time <= limit.
  void run_until(Ns limit) {
    while (!heap_.empty() && heap_.top().time <= limit) step();
    if (now_ < limit) now_ = limit;
  }

 private:
  struct Event {
    Ns time;
    std::uint64_t seq;
    Action action;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  Ns now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t executed_ = 0;
};

}  // namespace cxlgpu
