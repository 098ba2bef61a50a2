#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cxlgpu/common.hpp"
#include "cxlgpu/config.hpp"

namespace cxlgpu {

inline constexpr int kReportSchemaVersion = 1;

/// Nearest-rank percentile (q in (0, 1]); 0 for an empty sample.
Ns percentile(std::vector<Ns> samples, double q);

struct LatencySeries {
  std::vector<std::pair<Ns, Ns>> points;  // (completion time, latency)
  Ns p50() const;
  Ns p99() const;
  Ns max() const;
  std::vector<Ns> latencies() const;
};

struct PortReport {
  std::uint32_t index = 0;
  MediaKind media = MediaKind::kZnand;
  std::string policy;
  std::uint64_t demand_hits = 0;
  std::uint64_t demand_misses = 0;
  double hit_rate = 0.0;
  std::uint64_t prefetch_fills = 0;
  Endpoint::Counters endpoint{};
  SrQueueLogic::Counters sr{};
  std::vector<GcWindow> gc_windows;
  std::vector<std::pair<Ns, double>> ingress_series;
  double max_ingress_util = 0.0;
  double max_ingress_util_in_gc = 0.0;
  // Deterministic store.
  bool ds_enabled = false;
  std::vector<std::pair<Ns, Ns>> suspensions;
  std::uint64_t ds_overflows = 0;
  std::uint64_t ds_intercepts = 0;
  std::uint64_t ds_dual_writes = 0;
  std::uint64_t ds_buffered = 0;
  std::uint64_t ds_flushes = 0;
};

struct UvmReport {
  std::uint64_t accesses = 0;
  std::uint64_t faults = 0;
  std::uint64_t joins = 0;
  std::uint64_t evictions = 0;
  Ns min_fault_latency = 0;
  Ns max_resident_latency = 0;
};

struct RunReport {
  std::string scenario;
  std::string workload;
  std::string mode_label;
  Mode mode = Mode::kGpuDram;
  std::uint64_t seed = 0;
  nlohmann::json config;
  std::vector<Region> memory_map;
  Hpa data_base = 0;

  Ns end_time = 0;
  Ns reference_time = 0;
  double normalized_time = 0.0;
  std::uint64_t events = 0;

  std::uint64_t ops = 0;
  std::uint64_t loads = 0;
  std::uint64_t stores = 0;
  std::uint64_t computes = 0;
  Ns max_slip = 0;
  LatencySeries load_latency;
  LatencySeries store_latency;

  std::uint64_t llc_hits = 0;
  std::uint64_t llc_misses = 0;
  std::uint64_t llc_writebacks = 0;

  std::vector<PortReport> ports;
  UvmReport uvm;

  /// Demand hit rate summed over all ports (0 when no port has a cache).
  double hit_rate() const;
  std::size_t gc_count() const;
};

nlohmann::json report_to_json(const RunReport& report);
/// Serialized report: sorted keys, two-space indent, trailing newline.
std::string report_text(const RunReport& report);

/// Writes `time_ns,value` rows.
void write_series_csv(const std::string& path, const std::vector<std::pair<Ns, double>>& series);
void write_series_csv(const std::string& path, const std::vector<std::pair<Ns, Ns>>& series);

/// Writes report.json plus load_latency.csv, store_latency.csv and
/// ingress_port<i>.csv into `dir` (created if missing).
void write_report_files(const std::string& dir, const RunReport& report);

}  // namespace cxlgpu
