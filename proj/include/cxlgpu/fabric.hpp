#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cxlgpu/common.hpp"
#include "cxlgpu/endpoint.hpp"
#include "cxlgpu/request.hpp"

namespace cxlgpu {

enum class TargetKind : std::uint8_t { kGpuLocal, kPcieHost, kCxlPort };

struct Target {
  TargetKind kind = TargetKind::kGpuLocal;
  std::uint32_t port = 0;  // root port index for kCxlPort
  bool operator==(const Target&) const = default;
  std::string str() const;
};

struct Region {
  Hpa base = 0;
  std::uint64_t size = 0;
  Target target;
  Hpa end() const { return base + size; }
};

struct Decoded {
  Target target;
  std::uint64_t offset = 0;
  bool operator==(const Decoded&) const = default;
};

/// System-bus memory map: disjoint regions kept sorted by base.
class MemoryMap {
 public:
  /// Throws ConfigError on an empty or overlapping region.
  void add(const Region& region);
  /// hdm_decode: owning region and offset, or nullopt for an unmapped address.
  std::optional<Decoded> decode(Hpa hpa) const;
  const std::vector<Region>& regions() const { return regions_; }
  const Region* find(Target target) const;

 private:
  std::vector<Region> regions_;
};

struct EndpointDecl {
  std::uint64_t size = 1 * kGiB;
  MediaKind media = MediaKind::kZnand;
  std::optional<Hpa> base;  // explicit HDM base override
};

struct FabricLayout {
  std::uint64_t gpu_local_bytes = 16 * kMiB;
  std::uint64_t host_window_bytes = 1 * kGiB;
  std::vector<EndpointDecl> endpoints;
};

/// Modeled firmware enumeration: GPU memory at 0, the host window above it,
/// then one HDM range per endpoint (root port i serves endpoint i), assigned
/// contiguously unless a base override is given.
MemoryMap enumerate_endpoints(const FabricLayout& layout);

struct LlcConfig {
  std::uint64_t capacity_bytes = 64 * kKiB;
  std::uint32_t ways = 4;
  Ns hit_ns = 20;
};

/// Set-associative, write-back, LRU last-level cache of 64B lines. Each line
/// carries its functional value. A load miss leaves the line pending until
/// complete_fill; a store miss overwrites the full line and needs no fill.
class Llc {
 public:
  explicit Llc(LlcConfig config);

  enum class Outcome { kHit, kPendingFill, kMiss, kNoWay };
  struct Victim {
    Hpa line;
    std::uint64_t value;
  };
  struct Result {
    Outcome outcome = Outcome::kMiss;
    std::optional<Victim> dirty_victim;
    std::uint64_t value = 0;  // load hit value
  };

  Result access(Hpa addr, bool is_store, std::uint64_t store_value);
  /// Completes a pending load fill with the value returned from memory.
  void complete_fill(Hpa addr, std::uint64_t value);
  /// Applies an access that waited on a pending line (not counted again).
  std::uint64_t apply_merged(Hpa addr, bool is_store, std::uint64_t store_value);

  std::optional<std::uint64_t> peek(Hpa addr) const;
  /// Dirty lines with their values, for final-image reconstruction.
  std::vector<Victim> dirty_lines() const;

  std::uint64_t accesses() const { return hits_ + misses_; }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }
  std::uint64_t writebacks() const { return writebacks_; }
  const LlcConfig& config() const { return config_; }

 private:
  struct Way {
    Hpa line = 0;
    bool valid = false;
    bool dirty = false;
    bool pending = false;
    std::uint64_t value = 0;
    std::uint64_t stamp = 0;
  };
  std::size_t set_of(Hpa line) const;
  Way* find(Hpa line);
  const Way* find(Hpa line) const;

  LlcConfig config_;
  std::size_t sets_;
  std::vector<Way> ways_;
  std::uint64_t clock_ = 0;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
  std::uint64_t writebacks_ = 0;
};

}  // namespace cxlgpu
