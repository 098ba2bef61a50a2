#include "cxlgpu/dstore.hpp"

#include <algorithm>

namespace cxlgpu {

StoreBuffer::StoreBuffer(std::uint64_t reserved_bytes) : capacity_bytes_(reserved_bytes) {}

StoreBuffer::PushResult StoreBuffer::push(Hpa hpa, std::uint64_t value, Ns now) {
  if (auto it = slots_.find(hpa); it != slots_.end()) {
    it->second.value = value;
    if (it->second.in_flight) it->second.rewritten = true;
    return PushResult::kUpdated;
  }
  if (bytes() + kRequestBytes > capacity_bytes_) return PushResult::kFull;
  const std::uint64_t seq = next_seq_++;
  slots_.emplace(hpa, Slot{value, now, seq, false, false});
  order_.emplace(seq, hpa);
  return PushResult::kInserted;
}

std::optional<std::uint64_t> StoreBuffer::lookup(Hpa hpa) const {
  auto it = slots_.find(hpa);
  if (it == slots_.end()) return std::nullopt;
  return it->second.value;
}

std::vector<StoreBuffer::FlushItem> StoreBuffer::take_oldest(std::size_t max) {
  std::vector<FlushItem> out;
  while (out.size() < max && !order_.empty()) {
    const Hpa hpa = order_.begin()->second;
    order_.erase(order_.begin());
    Slot& slot = slots_.at(hpa);
    slot.in_flight = true;
    slot.rewritten = false;
    out.push_back({hpa, slot.value});
  }
  return out;
}

void StoreBuffer::complete(Hpa hpa) {
  auto it = slots_.find(hpa);
  if (it == slots_.end() || !it->second.in_flight) {
    throw SimulationError("flush completion for an address that is not in flight");
  }
  if (it->second.rewritten) {
    it->second.in_flight = false;
    it->second.rewritten = false;
    it->second.seq = next_seq_++;
    order_.emplace(it->second.seq, hpa);
    return;
  }
  slots_.erase(it);
}

bool StoreBuffer::consistent() const {
  std::size_t queued = 0;
  for (const auto& [hpa, slot] : slots_) {
    if (slot.in_flight) continue;
    ++queued;
    auto it = order_.find(slot.seq);
    if (it == order_.end() || it->second != hpa) return false;
  }
  return queued == order_.size() && bytes() <= capacity_bytes_;
}

std::vector<StoreBuffer::FlushItem> StoreBuffer::snapshot() const {
  std::vector<FlushItem> out;
  out.reserve(slots_.size());
  for (const auto& [hpa, slot] : slots_) out.push_back({hpa, slot.value});
  return out;
}

// ---------------------------------------------------------------------------

DsController::DsController(DsConfig config) : config_(config), buffer_(config.reserved_bytes) {
  if (config_.flush_budget == 0) throw ConfigError("DS flush budget must be positive");
  if (config_.poll_interval_ns == 0) throw ConfigError("DS poll interval must be positive");
}

DsController::StoreAction DsController::on_store(Hpa hpa, std::uint64_t value, Ns now,
                                                 bool can_issue) {
  if (buffer_.contains(hpa)) {
    buffer_.push(hpa, value, now);
    return StoreAction::kUpdatedInBuffer;
  }
  if (mode_ == WriteMode::kDual && can_issue) return StoreAction::kDualWrite;
  if (buffer_.push(hpa, value, now) == StoreBuffer::PushResult::kFull) {
    ++overflows_;
    return StoreAction::kWriteThrough;
  }
  return StoreAction::kBuffered;
}

void DsController::suspend(Ns now) {
  mode_ = WriteMode::kSuspended;
  suspensions_.emplace_back(now, 0);
}

void DsController::resume(Ns now) {
  mode_ = WriteMode::kDual;
  if (!suspensions_.empty()) suspensions_.back().second = now;
}

bool DsController::detect_slow_write(Ns write_latency, DevLoad load, Ns now) {
  if (mode_ != WriteMode::kDual) return false;
  if (write_latency > config_.slow_threshold_ns || load >= DevLoad::kModerateOverload) {
    suspend(now);
    return true;
  }
  return false;
}

bool DsController::observe_devload(DevLoad load, Ns now) {
  if (mode_ == WriteMode::kDual && load >= DevLoad::kModerateOverload) {
    suspend(now);
    return true;
  }
  return false;
}

bool DsController::on_poll(DevLoad load, Ns now) {
  if (mode_ == WriteMode::kSuspended && load <= DevLoad::kOptimal) {
    resume(now);
    return true;
  }
  return false;
}

std::vector<StoreBuffer::FlushItem> DsController::flush_step(std::size_t memq_free) {
  if (mode_ != WriteMode::kDual) return {};
  const std::size_t in_flight = buffer_.in_flight_slots();
  if (in_flight >= config_.flush_budget) return {};
  return buffer_.take_oldest(std::min(config_.flush_budget - in_flight, memq_free));
}

void DsController::on_flush_complete(Hpa hpa, Ns write_latency, DevLoad load, Ns now) {
  buffer_.complete(hpa);
  detect_slow_write(write_latency, load, now);
}

}  // namespace cxlgpu
