#pragma once

#include <cstdint>
#include <list>
#include <unordered_map>
#include <vector>

#include "cxlgpu/common.hpp"

namespace cxlgpu {

/// Where non-resident pages live: host DRAM behind PCIe (UVM) or an SSD
/// reached through the storage stack (GDS).
struct BackingPath {
  Ns latency_ns = 1'000;
  double bytes_per_ns = 32.0;
  Ns transfer_time(std::uint64_t bytes) const;
};

struct UvmConfig {
  std::uint64_t page_bytes = 4 * kKiB;
  std::uint64_t resident_bytes = 16 * kMiB;  // GPU memory available for migrated pages
  Ns intervention_ns = 500'000;              // host runtime cost per fault
  std::uint32_t fault_servers = 1;
  BackingPath backing{};
  Ns local_read_ns = 120;
  Ns local_write_ns = 60;
};

/// Page-migration baseline. A fault pays the host intervention, writes back
/// a dirty victim, fetches the page, and then performs the local access.
/// Faults are handled by `fault_servers` serialized handlers. An access to a
/// page whose migration is in flight waits for it without a new intervention.
class UvmModel {
 public:
  explicit UvmModel(UvmConfig config);

  struct Access {
    Ns completion = 0;
    bool faulted = false;
    bool joined = false;
    std::uint64_t value = 0;
  };
  /// Functional effects apply immediately in call order.
  Access access(Ns now, Hpa addr, bool is_store, std::uint64_t store_value);

  bool resident(Hpa addr) const;
  std::uint64_t peek(Hpa addr) const;
  /// Host image overlaid with resident pages.
  std::unordered_map<Hpa, std::uint64_t> image() const;

  std::uint64_t faults() const { return faults_; }
  std::uint64_t joins() const { return joins_; }
  std::uint64_t evictions() const { return evictions_; }
  std::uint64_t dirty_writebacks() const { return dirty_writebacks_; }
  std::uint64_t page_budget() const { return budget_; }
  std::size_t resident_pages() const { return pages_.size(); }
  const UvmConfig& config() const { return config_; }

 private:
  struct Page {
    Ns ready_at = 0;
    bool dirty = false;
    std::list<Hpa>::iterator lru;
  };
  Hpa page_of(Hpa addr) const { return align_down(addr, config_.page_bytes); }
  void touch(Page& page, Hpa base);
  /// May push `start` back until a migration finishes.
  Ns evict_one(Ns& start);

  UvmConfig config_;
  std::uint64_t budget_;
  std::unordered_map<Hpa, Page> pages_;
  std::list<Hpa> lru_;  // front = most recent
  std::vector<Ns> server_free_;
  std::unordered_map<Hpa, std::uint64_t> host_;
  std::unordered_map<Hpa, std::uint64_t> gpu_;
  std::uint64_t faults_ = 0;
  std::uint64_t joins_ = 0;
  std::uint64_t evictions_ = 0;
  std::uint64_t dirty_writebacks_ = 0;
};

}  // namespace cxlgpu
