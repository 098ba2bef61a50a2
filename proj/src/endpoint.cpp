#include "cxlgpu/endpoint.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

namespace cxlgpu {

std::string_view to_string(MediaKind kind) {
  switch (kind) {
    case MediaKind::kDramDdr5: return "DRAM_DDR5";
    case MediaKind::kOptane: return "OPTANE";
    case MediaKind::kZnand: return "ZNAND";
    case MediaKind::kNand: return "NAND";
  }
  return "?";
}

MediaKind parse_media_kind(std::string_view text) {
  std::string up;
  for (char c : text) {
    if (c == '-' || c == '_') continue;
    up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  if (up == "DRAMDDR5" || up == "DRAM" || up == "DDR5") return MediaKind::kDramDdr5;
  if (up == "OPTANE" || up == "PRAM") return MediaKind::kOptane;
  if (up == "ZNAND") return MediaKind::kZnand;
  if (up == "NAND") return MediaKind::kNand;
  throw ConfigError("unknown media kind '" + std::string(text) + "'");
}

MediaSpec MediaSpec::defaults(MediaKind kind) {
  switch (kind) {
    case MediaKind::kDramDdr5:
      return {kind, 50, 50, 44.8, 16, 0};
    case MediaKind::kOptane:
      return {kind, 3'000, 4'000, 0.875, 8, 4 * kKiB};
    case MediaKind::kZnand:
      return {kind, 15'000, 30'000, 0.4, 8, 2 * kMiB};
    case MediaKind::kNand:
      return {kind, 90'000, 350'000, 0.375, 8, 8 * kMiB};
  }
  throw ConfigError("unknown media kind");
}

Ns MediaSpec::read_time(std::uint64_t bytes) const {
  return read_ns + static_cast<Ns>(std::ceil(static_cast<double>(bytes) / bytes_per_ns));
}

Ns MediaSpec::write_time(std::uint64_t bytes) const {
  return write_ns + static_cast<Ns>(std::ceil(static_cast<double>(bytes) / bytes_per_ns));
}

void MediaSpec::validate() const {
  if (read_ns == 0 || write_ns == 0) throw ConfigError("media latencies must be positive");
  if (is_flash() && write_ns < read_ns) {
    throw ConfigError("flash media must not write faster than it reads");
  }
  if (!(bytes_per_ns > 0.0)) throw ConfigError("media bandwidth must be positive");
  if (channels == 0) throw ConfigError("media needs at least one channel");
}

// ---------------------------------------------------------------------------

LineCache::LineCache(std::uint64_t capacity_bytes) : capacity_lines_(capacity_bytes / kLineBytes) {
  if (capacity_lines_ == 0) throw ConfigError("internal cache smaller than one line");
}

LineCache::Lookup LineCache::lookup(Hpa addr) {
  auto it = index_.find(align_down(addr, kLineBytes));
  if (it == index_.end()) {
    ++misses_;
    return {false, 0};
  }
  ++hits_;
  lru_.splice(lru_.begin(), lru_, it->second);
  return {true, it->second->ready_at};
}

bool LineCache::contains(Hpa addr) const { return index_.count(align_down(addr, kLineBytes)) != 0; }

std::optional<Hpa> LineCache::fill(Hpa addr, Ns ready_at, bool prefetch) {
  const Hpa line = align_down(addr, kLineBytes);
  if (auto it = index_.find(line); it != index_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    return std::nullopt;
  }
  std::optional<Hpa> victim;
  if (index_.size() >= capacity_lines_) victim = evict();
  lru_.push_front({line, ready_at});
  index_.emplace(line, lru_.begin());
  if (prefetch) ++prefetch_fills_;
  return victim;
}

std::optional<Hpa> LineCache::evict() {
  if (lru_.empty()) return std::nullopt;
  const Hpa victim = lru_.back().addr;
  index_.erase(victim);
  lru_.pop_back();
  ++evictions_;
  return victim;
}

double LineCache::hit_rate() const {
  const auto total = hits_ + misses_;
  return total == 0 ? 0.0 : static_cast<double>(hits_) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------

GcController::GcController(GcConfig config) : config_(config) {
  if (config_.trigger_fraction <= 0.0 || config_.region_bytes == 0 || threshold_bytes() == 0) {
    throw ConfigError("GC threshold must be positive");
  }
}

std::uint64_t GcController::threshold_bytes() const {
  return static_cast<std::uint64_t>(config_.trigger_fraction *
                                    static_cast<double>(config_.region_bytes));
}

std::optional<GcWindow> GcController::record_write(std::uint64_t bytes, Ns now,
                                                  Ns earliest_start) {
  accumulated_ += bytes;
  if (accumulated_ < threshold_bytes()) return std::nullopt;
  accumulated_ -= threshold_bytes();
  GcWindow w;
  w.announced = now;
  w.start = std::max(now + config_.notice_ns, earliest_start);
  if (!windows_.empty()) w.start = std::max(w.start, windows_.back().end);
  w.end = w.start + config_.duration_ns;
  windows_.push_back(w);
  return w;
}

bool GcController::active(Ns now) const {
  const GcWindow* w = next_window(now);
  return w != nullptr && w->start <= now;
}

bool GcController::scheduled_or_active(Ns now) const { return next_window(now) != nullptr; }

const GcWindow* GcController::next_window(Ns now) const {
  auto it = std::upper_bound(windows_.begin(), windows_.end(), now,
                             [](Ns t, const GcWindow& w) { return t < w.end; });
  return it == windows_.end() ? nullptr : &*it;
}

DevLoad compute_devload(std::size_t occupancy, std::size_t capacity, bool gc_scheduled_or_active,
                        const DevLoadThresholds& thresholds) {
  if (gc_scheduled_or_active) return DevLoad::kSevereOverload;
  const double util =
      capacity == 0 ? 1.0 : static_cast<double>(occupancy) / static_cast<double>(capacity);
  if (util >= thresholds.severe) return DevLoad::kSevereOverload;
  if (util >= thresholds.moderate) return DevLoad::kModerateOverload;
  if (util >= thresholds.optimal) return DevLoad::kOptimal;
  return DevLoad::kLight;
}

// ---------------------------------------------------------------------------

Endpoint::Endpoint(EventQueue& events, EndpointConfig config, ResponseSink on_response,
                   CreditSink on_credit)
    : events_(events),
      config_(std::move(config)),
      on_response_(std::move(on_response)),
      on_credit_(std::move(on_credit)),
      channel_busy_until_(config_.media.channels, 0) {
  config_.media.validate();
  if (config_.ingress_capacity == 0) throw ConfigError("ingress queue needs capacity");
  if (config_.media.is_flash()) {
    cache_.emplace(config_.cache_bytes);
    gc_.emplace(config_.gc);
  }
  ingress_series_.emplace_back(0, 0.0);
}

std::uint64_t Endpoint::peek(Hpa hpa) const {
  auto it = backing_.find(hpa);
  return it == backing_.end() ? 0 : it->second;
}

DevLoad Endpoint::current_devload() const {
  const bool gc = gc_ && gc_->scheduled_or_active(events_.now());
  return compute_devload(ingress_.size(), config_.ingress_capacity, gc, config_.devload);
}

void Endpoint::accept(const FlitMsg& msg) {
  switch (msg.kind) {
    case MsgKind::kMemSpecRd:
      handle_hint(msg);
      return;
    case MsgKind::kMemRd:
    case MsgKind::kMemWr:
      break;
    default:
      throw ProtocolError("endpoint received a response message");
  }
  if (!can_accept()) throw SimulationError("ingress overflow: sender ignored credits");
  std::uint64_t value = 0;
  if (msg.kind == MsgKind::kMemWr) {
    backing_[msg.hpa] = msg.data;
    ++counters_.writes;
  } else {
    value = peek(msg.hpa);
    ++counters_.reads;
  }
  ingress_.push_back({msg, value, next_seq_++});
  record_ingress();
  dispatch();
}

std::vector<Hpa> Endpoint::missing_lines(Hpa start, std::uint32_t len) const {
  std::vector<Hpa> missing;
  for (Hpa a = start; a < start + len; a += LineCache::kLineBytes) {
    if (!cache_->contains(a)) missing.push_back(a);
  }
  return missing;
}

void Endpoint::handle_hint(const FlitMsg& msg) {
  ++counters_.hints;
  if (!cache_ || missing_lines(msg.hpa, msg.payload_len).empty()) {
    ++counters_.hints_redundant;
    return;
  }
  if (prefetch_.size() >= config_.prefetch_capacity) {
    ++counters_.hints_dropped;
    return;
  }
  prefetch_.push_back({msg.hpa, msg.payload_len, next_seq_++});
  dispatch();
}

std::optional<std::size_t> Endpoint::idle_channel() const {
  const Ns now = events_.now();
  for (std::size_t i = 0; i < channel_busy_until_.size(); ++i) {
    if (channel_busy_until_[i] <= now) return i;
  }
  return std::nullopt;
}

void Endpoint::occupy(std::size_t channel, Ns until) { channel_busy_until_[channel] = until; }

void Endpoint::wake_at(Ns when) {
  if (wake_pending_ && *wake_pending_ <= when && *wake_pending_ >= events_.now()) return;
  wake_pending_ = when;
  events_.schedule_at(when, [this, when] {
    if (wake_pending_ == when) wake_pending_.reset();
    dispatch();
  });
}

void Endpoint::respond_at(Ns when, FlitMsg resp) {
  events_.schedule_at(when, [this, resp]() mutable {
    resp.devload = current_devload();
    on_response_(resp);
  });
}

void Endpoint::record_ingress() {
  const Ns now = events_.now();
  const double util =
      static_cast<double>(ingress_.size()) / static_cast<double>(config_.ingress_capacity);
  if (!ingress_series_.empty() && ingress_series_.back().first == now) {
    ingress_series_.back().second = util;
  } else {
    ingress_series_.emplace_back(now, util);
  }
}

bool Endpoint::ingress_head_needs_channel(Ns now) const {
  const FlitMsg& msg = ingress_.front().msg;
  if (msg.kind == MsgKind::kMemRd) return !(cache_ && cache_->contains(msg.hpa));
  if (gc_) {
    const GcWindow* w = gc_->next_window(now);
    if (w && now + config_.media.write_time(kRequestBytes) > w->start) return false;  // GC-blocked
  }
  return true;
}

bool Endpoint::serve_ingress_head(Ns now) {
  const Pending& head = ingress_.front();
  const FlitMsg& msg = head.msg;
  if (msg.kind == MsgKind::kMemRd) {
    if (cache_ && cache_->contains(msg.hpa)) {
      const auto hit = cache_->lookup(msg.hpa);
      respond_at(std::max(now, hit.ready_at) + config_.cache_hit_ns,
                 FlitMsg::rd_resp(msg, DevLoad::kLight, head.value));
      return true;
    }
    const auto ch = idle_channel();
    if (!ch) return false;
    const std::uint32_t bytes = cache_ ? LineCache::kLineBytes : kRequestBytes;
    const Ns done = now + config_.media.read_time(bytes);
    occupy(*ch, done);
    ++counters_.media_reads;
    if (cache_) {
      cache_->lookup(msg.hpa);  // counts the miss
      cache_->fill(msg.hpa, done, /*prefetch=*/false);
    }
    respond_at(done, FlitMsg::rd_resp(msg, DevLoad::kLight, head.value));
    return true;
  }
  const Ns service = config_.media.write_time(kRequestBytes);
  if (gc_) {
    if (const GcWindow* w = gc_->next_window(now); w && now + service > w->start) {
      wake_at(w->end);
      return false;
    }
  }
  const auto ch = idle_channel();
  if (!ch) return false;
  const Ns done = now + service;
  occupy(*ch, done);
  ++counters_.media_writes;
  respond_at(done, FlitMsg::wr_resp(msg, DevLoad::kLight));
  if (gc_) {
    const Ns drained = *std::max_element(channel_busy_until_.begin(), channel_busy_until_.end());
    gc_->record_write(kRequestBytes, now, drained);
  }
  return true;
}

void Endpoint::dispatch() {
  const Ns now = events_.now();
  bool popped = false;
  for (;;) {
    // Hints whose lines arrived while they waited are dropped.
    while (!prefetch_.empty() && missing_lines(prefetch_.front().start, prefetch_.front().len).empty()) {
      prefetch_.pop_front();
      ++counters_.hints_stale;
    }
    const bool have_ingress = !ingress_.empty();
    if (!have_ingress && prefetch_.empty()) break;
    const bool head_wants_channel = have_ingress && ingress_head_needs_channel(now);
    const bool head_is_hit = have_ingress && ingress_.front().msg.kind == MsgKind::kMemRd && !head_wants_channel;
    const bool take_prefetch = !prefetch_.empty() && !head_is_hit &&
                               (!head_wants_channel || prefetch_.front().seq < ingress_.front().seq);
    if (take_prefetch) {
      const auto ch = idle_channel();
      if (!ch) break;
      const Prefetch p = prefetch_.front();
      prefetch_.pop_front();
      const auto missing = missing_lines(p.start, p.len);
      const Ns done = now + config_.media.read_time(missing.size() * LineCache::kLineBytes);
      occupy(*ch, done);
      ++counters_.media_reads;
      ++counters_.hint_fills;
      for (Hpa a : missing) cache_->fill(a, done, /*prefetch=*/true);
      continue;
    }
    if (!have_ingress || !serve_ingress_head(now)) break;
    ingress_.pop_front();
    popped = true;
    if (on_credit_) on_credit_();
  }
  if (popped) record_ingress();
  if (!ingress_.empty() || !prefetch_.empty()) {
    // Blocked on channels (a GC block already armed its own wake-up).
    Ns earliest = 0;
    bool any = false;
    for (Ns t : channel_busy_until_) {
      if (t > now && (!any || t < earliest)) {
        earliest = t;
        any = true;
      }
    }
    if (any) wake_at(earliest);
  }
}

}  // namespace cxlgpu
