#include "cxlgpu/srqueue.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace cxlgpu {

namespace {

using Wide = __int128;
constexpr Wide kUnit = kSpecUnitBytes;

// Nearest multiple of 256; an exact midpoint goes toward `outward_up`.
Wide round_edge(Wide v, bool outward_up) {
  Wide floor = v >= 0 ? (v / kUnit) * kUnit : -(((-v) + kUnit - 1) / kUnit) * kUnit;
  const Wide rem = v - floor;
  if (rem * 2 < kUnit) return floor;
  if (rem * 2 > kUnit) return floor + kUnit;
  return outward_up ? floor + kUnit : floor;
}

constexpr std::uint32_t kSpecTagBit = 63;

}  // namespace

AddressWindow compute_address_window(Hpa addr, std::uint32_t granularity, std::size_t memq_depth,
                                     std::size_t srq_depth) {
  if (granularity != 256 && granularity != 512 && granularity != 1024) {
    throw ProtocolError("SR granularity must be 256, 512 or 1024");
  }
  const Hpa unit = align_down(addr, kSpecUnitBytes);
  const AddressWindow fallback{unit, unit + kSpecUnitBytes};

  const Wide a = static_cast<Wide>(addr);
  const Wide start = a - granularity + static_cast<Wide>(memq_depth) * kRequestBytes;
  const Wide end = a + granularity - static_cast<Wide>(srq_depth) * kRequestBytes;
  if (end <= start) return fallback;

  Wide lo = round_edge(start, /*outward_up=*/false);
  Wide hi = round_edge(end, /*outward_up=*/true);
  if (hi <= lo) return fallback;
  lo = std::max<Wide>(lo, 0);

  lo = std::min<Wide>(lo, unit);
  hi = std::max<Wide>(hi, static_cast<Wide>(unit) + kUnit);

  Wide before = (static_cast<Wide>(unit) - lo) / kUnit;
  Wide after = (hi - static_cast<Wide>(unit) - kUnit) / kUnit;
  const Wide excess = before + after + 1 - kMaxSpecUnits;
  if (excess > 0) {
    const Wide gap = before > after ? before - after : after - before;
    if (gap >= excess) {
      (before > after ? before : after) -= excess;
    } else {
      // Level the sides, then alternate starting with the far end.
      const Wide level = std::min(before, after);
      const Wide rest = excess - gap;
      after = level - (rest + 1) / 2;
      before = level - rest / 2;
    }
  }
  return {unit - static_cast<Hpa>(before * kUnit),
          unit + kSpecUnitBytes + static_cast<Hpa>(after * kUnit)};
}

// ---------------------------------------------------------------------------

IssuedSrRing::IssuedSrRing(std::size_t capacity) : slots_(capacity) {
  if (capacity == 0) throw ConfigError("SR ring needs at least one slot");
}

void IssuedSrRing::adjust(const AddressWindow& w, int delta) {
  for (Hpa u = w.start; u < w.end; u += kSpecUnitBytes) {
    if (delta > 0) {
      ++unit_refs_[u];
    } else if (auto it = unit_refs_.find(u); it != unit_refs_.end() && --it->second == 0) {
      unit_refs_.erase(it);
    }
  }
}

void IssuedSrRing::record(const AddressWindow& window) {
  if (size_ == slots_.size()) adjust(slots_[head_], -1);
  slots_[head_] = window;
  adjust(window, +1);
  head_ = (head_ + 1) % slots_.size();
  size_ = std::min(size_ + 1, slots_.size());
}

bool IssuedSrRing::covers(Hpa addr) const {
  return unit_refs_.count(align_down(addr, kSpecUnitBytes)) != 0;
}

std::vector<AddressWindow> IssuedSrRing::entries() const {
  std::vector<AddressWindow> out;
  out.reserve(size_);
  const std::size_t first = (head_ + slots_.size() - size_) % slots_.size();
  for (std::size_t i = 0; i < size_; ++i) out.push_back(slots_[(first + i) % slots_.size()]);
  return out;
}

// ---------------------------------------------------------------------------

void GranularityControl::observe(DevLoad load) {
  if (halted_) {
    if (load == DevLoad::kLight) halted_ = false;
    return;
  }
  switch (load) {
    case DevLoad::kLight:
      current_ = std::min<std::uint32_t>(current_ * 2, 1024);
      break;
    case DevLoad::kOptimal:
      break;
    case DevLoad::kModerateOverload:
      current_ = std::max<std::uint32_t>(current_ / 2, 256);
      break;
    case DevLoad::kSevereOverload:
      halted_ = true;
      ++halts_entered_;
      break;
  }
}

std::string_view to_string(SrPolicy policy) {
  switch (policy) {
    case SrPolicy::kOff: return "off";
    case SrPolicy::kNaive: return "naive";
    case SrPolicy::kDynamic: return "dynamic";
    case SrPolicy::kMaxGranularity: return "max";
    case SrPolicy::kWindowed: return "windowed";
  }
  return "?";
}

SrPolicy parse_sr_policy(std::string_view text) {
  std::string s;
  for (char c : text) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "off" || s == "none") return SrPolicy::kOff;
  if (s == "naive") return SrPolicy::kNaive;
  if (s == "dynamic" || s == "dyn") return SrPolicy::kDynamic;
  if (s == "max") return SrPolicy::kMaxGranularity;
  if (s == "windowed" || s == "sr") return SrPolicy::kWindowed;
  throw ConfigError("unknown SR policy '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------

SrQueueLogic::SrQueueLogic(SrQueueConfig config) : config_(config), ring_(config.ring_capacity) {
  if (config_.sr_capacity == 0 || config_.mem_capacity == 0) {
    throw ConfigError("queue capacities must be positive");
  }
}

bool SrQueueLogic::uses_devload() const {
  return config_.policy == SrPolicy::kDynamic || config_.policy == SrPolicy::kWindowed;
}

bool SrQueueLogic::dedups() const {
  return config_.policy != SrPolicy::kOff && config_.policy != SrPolicy::kNaive;
}

void SrQueueLogic::note_depths() {
  counters_.max_sr_depth = std::max<std::uint64_t>(counters_.max_sr_depth, srq_.size());
  counters_.max_mem_depth = std::max<std::uint64_t>(counters_.max_mem_depth, memq_.size());
}

bool SrQueueLogic::admit_direct(const MemRequest& req) {
  if (memq_.size() >= config_.mem_capacity) return false;
  if (!memq_.emplace(req.tag, req).second) {
    throw SimulationError("duplicate memory-queue tag " + std::to_string(req.tag));
  }
  note_depths();
  return true;
}

SrQueueLogic::LoadResult SrQueueLogic::on_load(const MemRequest& req) {
  if (!req.is_load()) throw SimulationError("on_load called with a store");
  LoadResult result;
  if (config_.policy == SrPolicy::kOff || (dedups() && ring_.covers(req.hpa))) {
    if (!admit_direct(req)) return result;
    ++counters_.loads;
    if (config_.policy != SrPolicy::kOff) ++counters_.dedup_hits;
    result.outcome = LoadOutcome::kForwarded;
    return result;
  }
  if (srq_.size() >= config_.sr_capacity) return result;

  const Hpa unit = align_down(req.hpa, kSpecUnitBytes);
  AddressWindow window;
  switch (config_.policy) {
    case SrPolicy::kNaive:
      window = {unit, unit + kSpecUnitBytes};
      break;
    case SrPolicy::kDynamic:
      window = {unit, unit + granularity_.current()};
      break;
    case SrPolicy::kMaxGranularity:
      window = {unit, unit + kMaxSpecUnits * kSpecUnitBytes};
      break;
    case SrPolicy::kWindowed:
      window = compute_address_window(req.hpa, granularity_.current(), memq_.size(), srq_.size());
      break;
    case SrPolicy::kOff:
      throw SimulationError("SR queue used with speculation off");
  }
  if (!(uses_devload() && granularity_.halted())) {
    const std::uint64_t tag = (std::uint64_t{1} << kSpecTagBit) | next_spec_tag_++;
    result.spec = FlitMsg::mem_spec_rd(window.start, window.len(), tag);
    ring_.record(window);
    ++counters_.specs_issued;
    ++counters_.granularity_histogram[window.len()];
  }
  srq_.push_back(req);
  ++counters_.loads;
  note_depths();
  result.outcome = LoadOutcome::kQueued;
  return result;
}

std::optional<MemRequest> SrQueueLogic::sr_reader_step() {
  if (!can_step()) return std::nullopt;
  MemRequest head = srq_.front();
  srq_.pop_front();
  memq_.emplace(head.tag, head);
  note_depths();
  return head;
}

MemRequest SrQueueLogic::on_response(const FlitMsg& resp) {
  if (resp.kind != MsgKind::kRdResp && resp.kind != MsgKind::kWrResp) {
    throw ProtocolError("profiler expects a response message");
  }
  auto it = memq_.find(resp.tag);
  if (it == memq_.end()) {
    throw ProtocolError("response tag " + std::to_string(resp.tag) +
                        " matches no outstanding request");
  }
  MemRequest req = it->second;
  memq_.erase(it);
  ++counters_.responses;
  if (uses_devload() && resp.devload) granularity_.observe(*resp.devload);
  return req;
}

}  // namespace cxlgpu
