#include "cxlgpu/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace cxlgpu {

Ns BackingPath::transfer_time(std::uint64_t bytes) const {
  return latency_ns + static_cast<Ns>(std::ceil(static_cast<double>(bytes) / bytes_per_ns));
}

UvmModel::UvmModel(UvmConfig config) : config_(config) {
  if (config_.page_bytes == 0 || config_.page_bytes % kRequestBytes != 0) {
    throw ConfigError("page size must be a positive multiple of 64");
  }
  budget_ = config_.resident_bytes / config_.page_bytes;
  if (budget_ == 0) throw ConfigError("resident memory smaller than one page");
  if (config_.fault_servers == 0) throw ConfigError("need at least one fault server");
  if (!(config_.backing.bytes_per_ns > 0.0)) throw ConfigError("backing bandwidth must be positive");
  server_free_.assign(config_.fault_servers, 0);
}

void UvmModel::touch(Page& page, Hpa base) {
  lru_.erase(page.lru);
  lru_.push_front(base);
  page.lru = lru_.begin();
}

Ns UvmModel::evict_one(Ns& start) {
  // Oldest page whose migration has finished; wait for one if none has.
  Ns earliest = pages_.begin()->second.ready_at;
  for (const auto& [base, page] : pages_) earliest = std::min(earliest, page.ready_at);
  start = std::max(start, earliest);
  for (auto it = lru_.rbegin(); it != lru_.rend(); ++it) {
    auto pit = pages_.find(*it);
    if (pit->second.ready_at > start) continue;
    const Hpa base = *it;
    Ns cost = 0;
    if (pit->second.dirty) {
      cost = config_.backing.transfer_time(config_.page_bytes);
      ++dirty_writebacks_;
    }
    for (Hpa a = base; a < base + config_.page_bytes; a += kRequestBytes) {
      if (auto g = gpu_.find(a); g != gpu_.end()) {
        host_[a] = g->second;
        gpu_.erase(g);
      }
    }
    lru_.erase(std::next(it).base());
    pages_.erase(pit);
    ++evictions_;
    return cost;
  }
  throw SimulationError("every resident page is still migrating");
}

UvmModel::Access UvmModel::access(Ns now, Hpa addr, bool is_store, std::uint64_t store_value) {
  const Hpa base = page_of(addr);
  const Hpa line = align_down(addr, kRequestBytes);
  const Ns local = is_store ? config_.local_write_ns : config_.local_read_ns;
  Access out;

  auto it = pages_.find(base);
  if (it != pages_.end()) {
    Page& page = it->second;
    touch(page, base);
    if (page.ready_at > now) {
      out.joined = true;
      ++joins_;
    }
    out.completion = std::max(now, page.ready_at) + local;
  } else {
    ++faults_;
    out.faulted = true;
    auto server = std::min_element(server_free_.begin(), server_free_.end());
    Ns start = std::max(now, *server);
    Ns cost = config_.intervention_ns;
    if (pages_.size() >= budget_) cost += evict_one(start);
    cost += config_.backing.transfer_time(config_.page_bytes);
    const Ns ready = start + cost;
    *server = ready;
    lru_.push_front(base);
    Page page;
    page.ready_at = ready;
    page.lru = lru_.begin();
    it = pages_.emplace(base, page).first;
    for (Hpa a = base; a < base + config_.page_bytes; a += kRequestBytes) {
      if (auto h = host_.find(a); h != host_.end()) gpu_[a] = h->second;
    }
    out.completion = ready + local;
  }

  if (is_store) {
    gpu_[line] = store_value;
    it->second.dirty = true;
    out.value = store_value;
  } else {
    auto g = gpu_.find(line);
    out.value = g == gpu_.end() ? 0 : g->second;
  }
  return out;
}

bool UvmModel::resident(Hpa addr) const { return pages_.count(page_of(addr)) != 0; }

std::uint64_t UvmModel::peek(Hpa addr) const {
  const Hpa line = align_down(addr, kRequestBytes);
  const auto& image = resident(addr) ? gpu_ : host_;
  auto it = image.find(line);
  return it == image.end() ? 0 : it->second;
}

std::unordered_map<Hpa, std::uint64_t> UvmModel::image() const {
  std::unordered_map<Hpa, std::uint64_t> out = host_;
  for (const auto& [a, v] : gpu_) out[a] = v;
  return out;
}

}  // namespace cxlgpu
