#include "cxlgpu/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace cxlgpu {

using nlohmann::json;

Ns percentile(std::vector<Ns> samples, double q) {
  if (samples.empty()) return 0;
  std::sort(samples.begin(), samples.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(samples.size())));
  rank = std::clamp<std::size_t>(rank, 1, samples.size());
  return samples[rank - 1];
}

std::vector<Ns> LatencySeries::latencies() const {
  std::vector<Ns> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.second);
  return out;
}

Ns LatencySeries::p50() const { return percentile(latencies(), 0.50); }
Ns LatencySeries::p99() const { return percentile(latencies(), 0.99); }
Ns LatencySeries::max() const {
  Ns m = 0;
  for (const auto& p : points) m = std::max(m, p.second);
  return m;
}

double RunReport::hit_rate() const {
  std::uint64_t h = 0;
  std::uint64_t m = 0;
  for (const auto& p : ports) {
    h += p.demand_hits;
    m += p.demand_misses;
  }
  return h + m == 0 ? 0.0 : static_cast<double>(h) / static_cast<double>(h + m);
}

std::size_t RunReport::gc_count() const {
  std::size_t n = 0;
  for (const auto& p : ports) n += p.gc_windows.size();
  return n;
}

namespace {

json port_json(const PortReport& p) {
  json gc = json::array();
  for (const auto& w : p.gc_windows) gc.push_back({{"announced", w.announced}, {"start", w.start}, {"end", w.end}});
  json susp = json::array();
  for (const auto& [s, e] : p.suspensions) susp.push_back({{"start", s}, {"end", e}});
  json hist = json::object();
  for (const auto& [bytes, n] : p.sr.granularity_histogram) hist[std::to_string(bytes)] = n;
  return {
      {"index", p.index},
      {"media", std::string(to_string(p.media))},
      {"sr_policy", p.policy},
      {"demand_hits", p.demand_hits},
      {"demand_misses", p.demand_misses},
      {"hit_rate", p.hit_rate},
      {"prefetch_fills", p.prefetch_fills},
      {"endpoint",
       {{"reads", p.endpoint.reads},
        {"writes", p.endpoint.writes},
        {"media_reads", p.endpoint.media_reads},
        {"media_writes", p.endpoint.media_writes},
        {"hints", p.endpoint.hints},
        {"hint_fills", p.endpoint.hint_fills},
        {"hints_dropped", p.endpoint.hints_dropped},
        {"hints_redundant", p.endpoint.hints_redundant}}},
      {"sr",
       {{"specs_issued", p.sr.specs_issued},
        {"dedup_hits", p.sr.dedup_hits},
        {"loads", p.sr.loads},
        {"responses", p.sr.responses},
        {"max_sr_depth", p.sr.max_sr_depth},
        {"max_mem_depth", p.sr.max_mem_depth},
        {"granularity_histogram", hist}}},
      {"gc_windows", gc},
      {"gc_count", p.gc_windows.size()},
      {"max_ingress_util", p.max_ingress_util},
      {"max_ingress_util_in_gc", p.max_ingress_util_in_gc},
      {"ds",
       {{"enabled", p.ds_enabled},
        {"suspensions", susp},
        {"suspension_count", p.suspensions.size()},
        {"overflows", p.ds_overflows},
        {"intercepts", p.ds_intercepts},
        {"dual_writes", p.ds_dual_writes},
        {"buffered", p.ds_buffered},
        {"flushes", p.ds_flushes}}},
  };
}

}  // namespace

json report_to_json(const RunReport& r) {
  json map = json::array();
  for (const auto& reg : r.memory_map) {
    map.push_back({{"target", reg.target.str()}, {"base", reg.base}, {"size", reg.size}});
  }
  json ports = json::array();
  for (const auto& p : r.ports) ports.push_back(port_json(p));
  return {
      {"schema_version", kReportSchemaVersion},
      {"manifest",
       {{"scenario", r.scenario},
        {"workload", r.workload},
        {"mode", r.mode_label},
        {"seed", r.seed},
        {"config", r.config},
        {"memory_map", map},
        {"data_base", r.data_base}}},
      {"timing",
       {{"end_time_ns", r.end_time},
        {"reference_time_ns", r.reference_time},
        {"normalized_time", r.normalized_time},
        {"events", r.events},
        {"max_slip_ns", r.max_slip}}},
      {"ops", {{"total", r.ops}, {"loads", r.loads}, {"stores", r.stores}, {"computes", r.computes}}},
      {"latency",
       {{"load_p50_ns", r.load_latency.p50()},
        {"load_p99_ns", r.load_latency.p99()},
        {"load_max_ns", r.load_latency.max()},
        {"store_p50_ns", r.store_latency.p50()},
        {"store_p99_ns", r.store_latency.p99()},
        {"store_max_ns", r.store_latency.max()}}},
      {"llc", {{"hits", r.llc_hits}, {"misses", r.llc_misses}, {"writebacks", r.llc_writebacks}}},
      {"hit_rate", r.hit_rate()},
      {"gc_count", r.gc_count()},
      {"ports", ports},
      {"uvm",
       {{"accesses", r.uvm.accesses},
        {"faults", r.uvm.faults},
        {"joins", r.uvm.joins},
        {"evictions", r.uvm.evictions},
        {"min_fault_latency_ns", r.uvm.min_fault_latency},
        {"max_resident_latency_ns", r.uvm.max_resident_latency}}},
  };
}

std::string report_text(const RunReport& report) { return report_to_json(report).dump(2) + "\n"; }

namespace {

template <typename V>
void write_csv(const std::string& path, const std::vector<std::pair<Ns, V>>& series) {
  std::ofstream out(path);
  if (!out) throw std::ios_base::failure("cannot write '" + path + "'");
  out << "time_ns,value\n";
  for (const auto& [t, v] : series) out << t << ',' << v << '\n';
  if (!out) throw std::ios_base::failure("write to '" + path + "' failed");
}

}  // namespace

void write_series_csv(const std::string& path, const std::vector<std::pair<Ns, double>>& series) {
  write_csv(path, series);
}
void write_series_csv(const std::string& path, const std::vector<std::pair<Ns, Ns>>& series) {
  write_csv(path, series);
}

void write_report_files(const std::string& dir, const RunReport& report) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::ios_base::failure("cannot create '" + dir + "': " + ec.message());
  const std::filesystem::path base(dir);
  {
    std::ofstream out(base / "report.json");
    if (!out) throw std::ios_base::failure("cannot write report in '" + dir + "'");
    out << report_text(report);
  }
  write_series_csv((base / "load_latency.csv").string(), report.load_latency.points);
  write_series_csv((base / "store_latency.csv").string(), report.store_latency.points);
  for (const auto& p : report.ports) {
    write_series_csv((base / ("ingress_port" + std::to_string(p.index) + ".csv")).string(),
                     p.ingress_series);
  }
}

}  // namespace cxlgpu
