#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cxlgpu/common.hpp"
#include "cxlgpu/protocol.hpp"
#include "cxlgpu/request.hpp"

namespace cxlgpu {

/// Half-open byte range [start, end).
struct AddressWindow {
  Hpa start = 0;
  Hpa end = 0;

  std::uint32_t len() const { return static_cast<std::uint32_t>(end - start); }
  std::uint32_t units() const { return len() / kSpecUnitBytes; }
  bool contains(Hpa addr) const { return addr >= start && addr < end; }
  bool operator==(const AddressWindow&) const = default;
};

/// Address window for a speculative read of `addr`.
///
/// Starts from [addr - g, addr + g], moves the start up 64B for every request
/// in the memory queue and the end down 64B for every request waiting in the
/// SR queue, then rounds both edges to the nearest 256B boundary (ties round
/// outward). A collapsed window falls back to the 256B unit holding `addr`.
/// The result always contains that unit and spans at most four units; when
/// trimming, the side with more units beyond the incoming unit loses first and
/// ties trim the far end.
AddressWindow compute_address_window(Hpa addr, std::uint32_t granularity, std::size_t memq_depth,
                                     std::size_t srq_depth);

/// Windows of recently issued MemSpecRd, overwriting the oldest when full.
class IssuedSrRing {
 public:
  explicit IssuedSrRing(std::size_t capacity);

  void record(const AddressWindow& window);
  bool covers(Hpa addr) const;
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return slots_.size(); }
  /// Oldest first.
  std::vector<AddressWindow> entries() const;

 private:
  void adjust(const AddressWindow& w, int delta);

  std::vector<AddressWindow> slots_;
  std::size_t head_ = 0;  // next slot to write
  std::size_t size_ = 0;
  std::unordered_map<Hpa, std::uint32_t> unit_refs_;
};

/// DevLoad-driven MemSpecRd size: ll climbs one rung (256 -> 512 -> 1024),
/// ol holds, mo drops one rung, so halts until the next ll.
class GranularityControl {
 public:
  std::uint32_t current() const { return current_; }
  bool halted() const { return halted_; }
  std::uint64_t halts_entered() const { return halts_entered_; }
  void observe(DevLoad load);

 private:
  std::uint32_t current_ = 256;
  bool halted_ = false;
  std::uint64_t halts_entered_ = 0;
};

enum class SrPolicy : std::uint8_t {
  kOff,             // no speculation, loads go straight to the memory queue
  kNaive,           // one-unit hint for every load, no dedup or load control
  kDynamic,         // hint [unit, unit + g) with DevLoad control
  kMaxGranularity,  // always hint four units, ignore DevLoad
  kWindowed,        // address-window control plus DevLoad control
};

std::string_view to_string(SrPolicy policy);
SrPolicy parse_sr_policy(std::string_view text);

struct SrQueueConfig {
  SrPolicy policy = SrPolicy::kWindowed;
  std::size_t sr_capacity = 32;
  std::size_t mem_capacity = 32;
  std::size_t ring_capacity = 64;
};

/// Root-port queue logic: SR queue, memory queue, SR reader, issued-window
/// ring and response profiler. Pure state machine; the caller moves messages.
///
/// The reader computes a load's speculative window when the load enters the
/// SR queue: the memory queue then holds the prior requests and the SR queue
/// the demands that have not been issued yet.
class SrQueueLogic {
 public:
  enum class LoadOutcome { kQueued, kForwarded, kStalled };

  explicit SrQueueLogic(SrQueueConfig config = {});

  struct LoadResult {
    LoadOutcome outcome = LoadOutcome::kStalled;
    /// MemSpecRd for a newly queued load; it leaves ahead of every demand
    /// still waiting, so the endpoint can start the fill early.
    std::optional<FlitMsg> spec;
  };
  /// A load from the LLC. kStalled leaves the request with the caller. A load
  /// whose address lies in a recently issued window skips the SR queue.
  LoadResult on_load(const MemRequest& req);
  /// Places a write (or any request that skips speculation) in the memory
  /// queue. Returns false when the memory queue is full.
  bool admit_direct(const MemRequest& req);

  bool can_step() const { return !srq_.empty() && memq_.size() < config_.mem_capacity; }
  /// Moves the SR queue head into the memory queue.
  std::optional<MemRequest> sr_reader_step();

  /// Retires the memory-queue entry with the response's tag and feeds its
  /// DevLoad to the granularity control. Throws ProtocolError on an unknown tag.
  MemRequest on_response(const FlitMsg& resp);

  std::size_t sr_depth() const { return srq_.size(); }
  std::size_t mem_depth() const { return memq_.size(); }
  std::size_t mem_free() const { return config_.mem_capacity - memq_.size(); }
  bool mem_has_space() const { return memq_.size() < config_.mem_capacity; }
  const SrQueueConfig& config() const { return config_; }
  const GranularityControl& granularity() const { return granularity_; }
  const IssuedSrRing& ring() const { return ring_; }

  struct Counters {
    std::uint64_t specs_issued = 0;
    std::uint64_t dedup_hits = 0;
    std::uint64_t loads = 0;
    std::uint64_t responses = 0;
    std::uint64_t max_sr_depth = 0;
    std::uint64_t max_mem_depth = 0;
    std::map<std::uint32_t, std::uint64_t> granularity_histogram;  // bytes -> specs
  };
  const Counters& counters() const { return counters_; }

 private:
  bool uses_devload() const;
  bool dedups() const;
  void note_depths();

  SrQueueConfig config_;
  std::deque<MemRequest> srq_;
  std::map<std::uint64_t, MemRequest> memq_;  // by tag
  IssuedSrRing ring_;
  GranularityControl granularity_;
  std::uint64_t next_spec_tag_ = 1;
  Counters counters_;
};

}  // namespace cxlgpu
