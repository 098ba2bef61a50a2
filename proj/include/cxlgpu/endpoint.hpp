#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <list>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cxlgpu/common.hpp"
#include "cxlgpu/event_queue.hpp"
#include "cxlgpu/protocol.hpp"

namespace cxlgpu {

enum class MediaKind : std::uint8_t { kDramDdr5, kOptane, kZnand, kNand };

std::string_view to_string(MediaKind kind);
/// Accepts "DRAM_DDR5"/"DRAM", "OPTANE", "ZNAND"/"Z-NAND", "NAND" (case-insensitive).
MediaKind parse_media_kind(std::string_view text);

/// Backend media timing. Service time of one operation is the access latency
/// plus the transfer at the per-channel `bytes_per_ns`; `channels` operations
/// run in parallel.
struct MediaSpec {
  MediaKind kind = MediaKind::kDramDdr5;
  Ns read_ns = 0;
  Ns write_ns = 0;
  double bytes_per_ns = 1.0;
  std::uint32_t channels = 1;
  std::uint64_t erase_unit = 0;

  static MediaSpec defaults(MediaKind kind);
  bool is_flash() const { return kind != MediaKind::kDramDdr5; }
  Ns read_time(std::uint64_t bytes) const;
  Ns write_time(std::uint64_t bytes) const;
  /// Throws ConfigError if a timing invariant is broken.
  void validate() const;
};

/// LRU cache of 256B lines inside an SSD-backed endpoint. A line is allocated
/// when its fill starts; a demand lookup on an allocated line is a hit and
/// waits for `ready_at` if the fill is still in flight.
class LineCache {
 public:
  static constexpr std::uint32_t kLineBytes = kSpecUnitBytes;

  explicit LineCache(std::uint64_t capacity_bytes);

  struct Lookup {
    bool hit = false;
    Ns ready_at = 0;
  };

  /// Demand lookup: counts a hit or a miss and refreshes recency on hit.
  Lookup lookup(Hpa addr);
  bool contains(Hpa addr) const;
  /// Inserts (or refreshes) the line holding `addr`. Returns the evicted line.
  std::optional<Hpa> fill(Hpa addr, Ns ready_at, bool prefetch);
  /// Evicts the least-recently-touched line.
  std::optional<Hpa> evict();

  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  std::uint64_t prefetch_fills() const { return prefetch_fills_; }
  std::uint64_t evictions() const { return evictions_; }
  std::size_t occupancy_lines() const { return index_.size(); }
  std::size_t capacity_lines() const { return capacity_lines_; }
  double hit_rate() const;

 private:
  struct Line {
    Hpa addr;
    Ns ready_at;
  };
  std::size_t capacity_lines_;
  std::list<Line> lru_;  // front = most recent
  std::unordered_map<Hpa, std::list<Line>::iterator> index_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
  std::uint64_t prefetch_fills_ = 0;
  std::uint64_t evictions_ = 0;
};

struct GcConfig {
  Ns duration_ns = 2'000'000;
  double trigger_fraction = 0.25;
  std::uint64_t region_bytes = 64 * kMiB;
  /// Lead time between announcing a GC via DevLoad and suspending writes.
  Ns notice_ns = 50'000;
};

struct GcWindow {
  Ns announced = 0;
  Ns start = 0;
  Ns end = 0;
};

/// Write-volume driven garbage collection. Windows never overlap.
class GcController {
 public:
  explicit GcController(GcConfig config);

  std::uint64_t threshold_bytes() const;
  /// Accounts a media write; returns the window scheduled when the running
  /// total crosses the threshold (the total restarts from the remainder).
  /// The window opens after the notice period and not before
  /// `earliest_start`, so writes already in service finish first.
  std::optional<GcWindow> record_write(std::uint64_t bytes, Ns now, Ns earliest_start = 0);

  bool active(Ns now) const;
  bool scheduled_or_active(Ns now) const;
  /// First window whose end lies after `now`.
  const GcWindow* next_window(Ns now) const;
  const std::vector<GcWindow>& windows() const { return windows_; }
  std::uint64_t accumulated_bytes() const { return accumulated_; }

 private:
  GcConfig config_;
  std::uint64_t accumulated_ = 0;
  std::vector<GcWindow> windows_;
};

/// Lower bounds of each state on the waiting-ingress fraction.
struct DevLoadThresholds {
  double optimal = 0.25;
  double moderate = 0.50;
  double severe = 1.0;  // queue completely full
};

/// Maps ingress occupancy and GC state onto the two-bit DevLoad telemetry.
DevLoad compute_devload(std::size_t occupancy, std::size_t capacity, bool gc_scheduled_or_active,
                        const DevLoadThresholds& thresholds = {});

struct EndpointConfig {
  MediaSpec media = MediaSpec::defaults(MediaKind::kZnand);
  std::uint64_t cache_bytes = 2 * kMiB;  // ignored for DRAM media
  Ns cache_hit_ns = 50;
  std::uint32_t ingress_capacity = 32;
  std::uint32_t prefetch_capacity = 16;  // queued MemSpecRd fills
  GcConfig gc{};
  DevLoadThresholds devload{};
};

/// A CXL memory endpoint: FIFO ingress queue, optional internal DRAM cache,
/// parallel media channels, and GC for flash media.
///
/// Requests are served strictly in ingress order. A MemSpecRd never enters
/// the ingress queue and needs no credit: it waits in a small prefetch queue
/// and is dropped when that queue is full. Media channels go to the older of
/// the ingress head and the prefetch head. Functional data is applied in
/// acceptance order, so reads observe every earlier write.
class Endpoint {
 public:
  /// Called when a response leaves the endpoint.
  using ResponseSink = std::function<void(const FlitMsg&)>;
  /// Called when an ingress slot frees up.
  using CreditSink = std::function<void()>;

  Endpoint(EventQueue& events, EndpointConfig config, ResponseSink on_response,
           CreditSink on_credit = {});

  bool has_cache() const { return cache_.has_value(); }
  bool can_accept() const { return ingress_.size() < config_.ingress_capacity; }
  /// Accepts a request at the current event time. MemRd/MemWr require a free
  /// ingress slot (the caller holds a credit).
  void accept(const FlitMsg& msg);

  DevLoad current_devload() const;
  std::size_t ingress_occupancy() const { return ingress_.size(); }

  const EndpointConfig& config() const { return config_; }
  const LineCache* cache() const { return cache_ ? &*cache_ : nullptr; }
  const GcController* gc() const { return gc_ ? &*gc_ : nullptr; }
  /// (time, occupancy / capacity) at every change.
  const std::vector<std::pair<Ns, double>>& ingress_series() const { return ingress_series_; }
  std::uint64_t peek(Hpa hpa) const;
  const std::unordered_map<Hpa, std::uint64_t>& backing() const { return backing_; }

  struct Counters {
    std::uint64_t reads = 0;
    std::uint64_t writes = 0;
    std::uint64_t media_reads = 0;
    std::uint64_t media_writes = 0;
    std::uint64_t hints = 0;
    std::uint64_t hint_fills = 0;
    std::uint64_t hints_dropped = 0;
    std::uint64_t hints_redundant = 0;
    std::uint64_t hints_stale = 0;  // lines arrived while the hint waited
  };
  const Counters& counters() const { return counters_; }

 private:
  struct Pending {
    FlitMsg msg;
    std::uint64_t value;  // read value captured at acceptance
    std::uint64_t seq;
  };
  struct Prefetch {
    Hpa start;
    std::uint32_t len;
    std::uint64_t seq;
  };

  void dispatch();
  std::optional<std::size_t> idle_channel() const;
  void occupy(std::size_t channel, Ns until);
  void wake_at(Ns when);
  void respond_at(Ns when, FlitMsg resp);
  void record_ingress();
  void handle_hint(const FlitMsg& msg);
  std::vector<Hpa> missing_lines(Hpa start, std::uint32_t len) const;
  /// Serves the ingress head; false when it must wait.
  bool serve_ingress_head(Ns now);
  bool ingress_head_needs_channel(Ns now) const;

  EventQueue& events_;
  EndpointConfig config_;
  ResponseSink on_response_;
  CreditSink on_credit_;
  std::optional<LineCache> cache_;
  std::optional<GcController> gc_;
  std::deque<Pending> ingress_;
  std::deque<Prefetch> prefetch_;
  std::uint64_t next_seq_ = 0;
  std::vector<Ns> channel_busy_until_;
  std::optional<Ns> wake_pending_;
  std::unordered_map<Hpa, std::uint64_t> backing_;
  std::vector<std::pair<Ns, double>> ingress_series_;
  Counters counters_;
};

}  // namespace cxlgpu
