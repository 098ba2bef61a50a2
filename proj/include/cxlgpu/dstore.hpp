#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "cxlgpu/common.hpp"
#include "cxlgpu/protocol.hpp"

namespace cxlgpu {

/// Deferred writes parked in reserved GPU memory, indexed by an ordered
/// address map. A store to an address that is already parked updates the slot
/// in place. Slots leave oldest-pushed first and are freed only when the
/// endpoint acknowledges the flush.
class StoreBuffer {
 public:
  explicit StoreBuffer(std::uint64_t reserved_bytes);

  enum class PushResult { kInserted, kUpdated, kFull };
  PushResult push(Hpa hpa, std::uint64_t value, Ns now);

  bool contains(Hpa hpa) const { return slots_.count(hpa) != 0; }
  /// Newest value parked for `hpa`.
  std::optional<std::uint64_t> lookup(Hpa hpa) const;

  struct FlushItem {
    Hpa hpa;
    std::uint64_t value;
    bool operator==(const FlushItem&) const = default;
  };
  /// Marks up to `max` of the oldest parked slots as in flight.
  std::vector<FlushItem> take_oldest(std::size_t max);
  /// WrResp for an in-flight slot. A slot re-written while in flight goes
  /// back to the tail of the queue with its newer value.
  void complete(Hpa hpa);

  std::size_t live_slots() const { return slots_.size(); }
  std::size_t queued_slots() const { return order_.size(); }
  std::size_t in_flight_slots() const { return slots_.size() - order_.size(); }
  std::uint64_t bytes() const { return slots_.size() * kRequestBytes; }
  std::uint64_t capacity_bytes() const { return capacity_bytes_; }
  bool empty() const { return slots_.empty(); }
  /// Map/stack agreement; used by tests and debug checks.
  bool consistent() const;
  /// Every parked address with its newest value.
  std::vector<FlushItem> snapshot() const;

 private:
  struct Slot {
    std::uint64_t value = 0;
    Ns pushed = 0;
    std::uint64_t seq = 0;
    bool in_flight = false;
    bool rewritten = false;
  };
  std::uint64_t capacity_bytes_;
  std::map<Hpa, Slot> slots_;
  std::map<std::uint64_t, Hpa> order_;  // push seq -> address, queued slots only
  std::uint64_t next_seq_ = 0;
};

struct DsConfig {
  Ns slow_threshold_ns = 0;  // 0: derived by the caller from media timing
  std::uint64_t reserved_bytes = 1 * kMiB;
  std::size_t flush_budget = 4;
  Ns poll_interval_ns = 10'000;
};

enum class WriteMode : std::uint8_t { kDual, kSuspended };

/// Per-port deterministic-store engine.
class DsController {
 public:
  explicit DsController(DsConfig config);

  enum class StoreAction {
    kDualWrite,         // complete locally and send a MemWr
    kBuffered,          // complete locally, parked in the buffer
    kUpdatedInBuffer,   // complete locally, parked slot rewritten
    kWriteThrough,      // buffer full: complete on WrResp
  };
  /// `can_issue` says whether a MemWr can enter the memory queue right now
  /// without overtaking older traffic.
  StoreAction on_store(Hpa hpa, std::uint64_t value, Ns now, bool can_issue);

  /// Buffered value for a load, if any.
  std::optional<std::uint64_t> intercept_load(Hpa hpa) const { return buffer_.lookup(hpa); }

  /// Observes a WrResp of a dual write. Returns true on a mode change.
  bool detect_slow_write(Ns write_latency, DevLoad load, Ns now);
  /// Any response's DevLoad; a rise to mo/so suspends writes.
  bool observe_devload(DevLoad load, Ns now);
  /// Result of a periodic DevLoad probe while suspended. Returns true on resume.
  bool on_poll(DevLoad load, Ns now);

  /// Next MemWr batch while in dual mode; at most `flush_budget` in flight.
  std::vector<StoreBuffer::FlushItem> flush_step(std::size_t memq_free);
  /// WrResp of a flushed slot; a slow one re-suspends.
  void on_flush_complete(Hpa hpa, Ns write_latency, DevLoad load, Ns now);

  WriteMode mode() const { return mode_; }
  const StoreBuffer& buffer() const { return buffer_; }
  const DsConfig& config() const { return config_; }
  /// Closed suspension windows plus the open one (end = 0) if suspended.
  const std::vector<std::pair<Ns, Ns>>& suspensions() const { return suspensions_; }
  std::uint64_t overflows() const { return overflows_; }
  std::size_t flushes_in_flight() const { return buffer_.in_flight_slots(); }

 private:
  void suspend(Ns now);
  void resume(Ns now);

  DsConfig config_;
  StoreBuffer buffer_;
  WriteMode mode_ = WriteMode::kDual;
  std::vector<std::pair<Ns, Ns>> suspensions_;
  std::uint64_t overflows_ = 0;
};

}  // namespace cxlgpu
