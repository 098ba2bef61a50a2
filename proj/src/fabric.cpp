#include "cxlgpu/fabric.hpp"

#include <algorithm>

namespace cxlgpu {

std::string Target::str() const {
  switch (kind) {
    case TargetKind::kGpuLocal: return "GPU_LOCAL";
    case TargetKind::kPcieHost: return "PCIE_EP_HOST";
    case TargetKind::kCxlPort: return "CXL_PORT(" + std::to_string(port) + ")";
  }
  return "?";
}

void MemoryMap::add(const Region& region) {
  if (region.size == 0) throw ConfigError("memory region of size zero");
  if (region.base + region.size < region.base) throw ConfigError("memory region wraps");
  auto it = std::lower_bound(regions_.begin(), regions_.end(), region.base,
                             [](const Region& r, Hpa base) { return r.base < base; });
  if (it != regions_.end() && it->base < region.end()) {
    throw ConfigError("region " + region.target.str() + " overlaps " + it->target.str());
  }
  if (it != regions_.begin() && std::prev(it)->end() > region.base) {
    throw ConfigError("region " + region.target.str() + " overlaps " + std::prev(it)->target.str());
  }
  if (find(region.target) != nullptr) {
    throw ConfigError("target " + region.target.str() + " mapped twice");
  }
  regions_.insert(it, region);
}

std::optional<Decoded> MemoryMap::decode(Hpa hpa) const {
  auto it = std::upper_bound(regions_.begin(), regions_.end(), hpa,
                             [](Hpa a, const Region& r) { return a < r.base; });
  if (it == regions_.begin()) return std::nullopt;
  --it;
  if (hpa >= it->end()) return std::nullopt;
  return Decoded{it->target, hpa - it->base};
}

const Region* MemoryMap::find(Target target) const {
  for (const auto& r : regions_) {
    if (r.target == target) return &r;
  }
  return nullptr;
}

MemoryMap enumerate_endpoints(const FabricLayout& layout) {
  MemoryMap map;
  map.add({0, layout.gpu_local_bytes, {TargetKind::kGpuLocal, 0}});
  map.add({layout.gpu_local_bytes, layout.host_window_bytes, {TargetKind::kPcieHost, 0}});
  Hpa cursor = layout.gpu_local_bytes + layout.host_window_bytes;
  for (std::size_t i = 0; i < layout.endpoints.size(); ++i) {
    const auto& ep = layout.endpoints[i];
    const Hpa base = ep.base.value_or(cursor);
    if (base % kSpecUnitBytes != 0) throw ConfigError("HDM base must be 256B aligned");
    map.add({base, ep.size, {TargetKind::kCxlPort, static_cast<std::uint32_t>(i)}});
    cursor = std::max(cursor, base + ep.size);
  }
  return map;
}

// ---------------------------------------------------------------------------

Llc::Llc(LlcConfig config) : config_(config) {
  const std::uint64_t lines = config_.capacity_bytes / kRequestBytes;
  if (config_.ways == 0 || lines == 0 || lines % config_.ways != 0) {
    throw ConfigError("LLC capacity must be a whole number of sets");
  }
  sets_ = lines / config_.ways;
  ways_.resize(lines);
}

std::size_t Llc::set_of(Hpa line) const { return (line / kRequestBytes) % sets_; }

Llc::Way* Llc::find(Hpa line) {
  const std::size_t set = set_of(line);
  for (std::size_t w = 0; w < config_.ways; ++w) {
    Way& way = ways_[set * config_.ways + w];
    if (way.valid && way.line == line) return &way;
  }
  return nullptr;
}

const Llc::Way* Llc::find(Hpa line) const { return const_cast<Llc*>(this)->find(line); }

Llc::Result Llc::access(Hpa addr, bool is_store, std::uint64_t store_value) {
  const Hpa line = align_down(addr, kRequestBytes);
  Result result;
  if (Way* way = find(line)) {
    if (way->pending) {
      ++misses_;
      result.outcome = Outcome::kPendingFill;
      return result;
    }
    ++hits_;
    way->stamp = ++clock_;
    if (is_store) {
      way->value = store_value;
      way->dirty = true;
    }
    result.outcome = Outcome::kHit;
    result.value = way->value;
    return result;
  }

  const std::size_t set = set_of(line);
  Way* victim = nullptr;
  for (std::size_t w = 0; w < config_.ways; ++w) {
    Way& way = ways_[set * config_.ways + w];
    if (!way.valid) {
      victim = &way;
      break;
    }
    if (way.pending) continue;
    if (victim == nullptr || way.stamp < victim->stamp) victim = &way;
  }
  if (victim == nullptr) {
    result.outcome = Outcome::kNoWay;
    return result;
  }
  ++misses_;
  if (victim->valid && victim->dirty) {
    result.dirty_victim = Victim{victim->line, victim->value};
    ++writebacks_;
  }
  *victim = Way{line, true, is_store, !is_store, is_store ? store_value : 0, ++clock_};
  result.outcome = Outcome::kMiss;
  return result;
}

void Llc::complete_fill(Hpa addr, std::uint64_t value) {
  Way* way = find(align_down(addr, kRequestBytes));
  if (way == nullptr || !way->pending) throw SimulationError("fill for a line that is not pending");
  way->pending = false;
  way->value = value;
}

std::uint64_t Llc::apply_merged(Hpa addr, bool is_store, std::uint64_t store_value) {
  Way* way = find(align_down(addr, kRequestBytes));
  if (way == nullptr || way->pending) throw SimulationError("merged access on a missing line");
  way->stamp = ++clock_;
  if (is_store) {
    way->value = store_value;
    way->dirty = true;
  }
  return way->value;
}

std::optional<std::uint64_t> Llc::peek(Hpa addr) const {
  const Way* way = find(align_down(addr, kRequestBytes));
  if (way == nullptr || way->pending) return std::nullopt;
  return way->value;
}

std::vector<Llc::Victim> Llc::dirty_lines() const {
  std::vector<Victim> out;
  for (const auto& w : ways_) {
    if (w.valid && w.dirty) out.push_back({w.line, w.value});
  }
  std::sort(out.begin(), out.end(), [](const Victim& a, const Victim& b) { return a.line < b.line; });
  return out;
}

}  // namespace cxlgpu
