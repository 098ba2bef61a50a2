// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cxlgpu/config.hpp"
#include "cxlgpu/metrics.hpp"
#include "cxlgpu/protocol.hpp"
#include "cxlgpu/simulator.hpp"
#include "cxlgpu/srqueue.hpp"
#include "cxlgpu/traces.hpp"

using namespace cxlgpu;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  if (!out.pass) ++failures;
  std::printf("criterion %2d %-26s %s  (%s; %.1fs)\n", id, name.c_str(), out.pass ? "PASS" : "FAIL",
              out.detail.c_str(), seconds_since(t0));
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

RunResult run(ScenarioConfig cfg, std::string_view mode, const Trace& trace, bool capture = false) {
  cfg.apply(parse_mode(mode));
  RunOptions opt;
  opt.compute_reference = false;
  opt.capture_values = capture;
  return simulate(cfg, trace, opt);
}

Trace make(Pattern p, double load_ratio, std::uint64_t ops, Ns issue_ns, std::uint64_t seed,
           std::uint64_t footprint = 160 * kMiB) {
  WorkloadSpec w;
  w.pattern = p;
  w.load_ratio = load_ratio;
  w.op_count = ops;
  w.issue_ns = issue_ns;
  w.seed = seed;
  w.footprint = footprint;
  return generate(w);
}

// ---------------------------------------------------------------------------

Outcome codec_exactness() {
  const auto t0 = Clock::now();
  std::uint64_t checked = 0;
  for (std::uint64_t off = 0; off < (std::uint64_t{1} << 20); ++off) {
    for (std::uint32_t units = 1; units <= kMaxSpecUnits; ++units) {
      const Hpa start = off * kSpecUnitBytes;
      const std::uint32_t len = units * kSpecUnitBytes;
      const std::uint64_t word = encode_specrd(start, len);
      if (word != ((off << 2) | (units - 1))) return {false, "word layout at offset " + std::to_string(off)};
      const SpecSpan back = decode_specrd(word);
      if (back.start != start || back.len != len) return {false, "roundtrip at offset " + std::to_string(off)};
      ++checked;
    }
  }
  for (std::uint8_t v = 0; v < 4; ++v) {
    if (encode_devload(decode_devload(v)) != v) return {false, "devload roundtrip"};
  }
  for (int v = 4; v < 256; ++v) {
    try {
      decode_devload(static_cast<std::uint8_t>(v));
      return {false, "devload accepted " + std::to_string(v)};
    } catch (const ProtocolError&) {
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 10.0) return {false, "took " + fmt("%.1fs", secs)};
  return {true, std::to_string(checked) + " spans, 4 devload codes"};
}

// Literal stepwise model: one 64B shift at a time, then rounding, then
// containment, then one-unit trims.
AddressWindow window_oracle(std::int64_t addr, std::int64_t g, std::size_t memq, std::size_t srq) {
  const std::int64_t unit = addr - addr % 256;
  std::int64_t start = addr - g;
  std::int64_t end = addr + g;
  for (std::size_t i = 0; i < memq; ++i) start += 64;
  for (std::size_t i = 0; i < srq; ++i) end -= 64;
  const AddressWindow fallback{static_cast<Hpa>(unit), static_cast<Hpa>(unit + 256)};
  if (end <= start) return fallback;
  auto nearest = [](std::int64_t x, bool tie_up) {
    std::int64_t down = x;
    while (((down % 256) + 256) % 256 != 0) --down;
    const std::int64_t up = down == x ? x : down + 256;
    if (x - down < up - x) return down;
    if (up - x < x - down) return up;
    return tie_up ? up : down;
  };
  std::int64_t lo = nearest(start, false);
  std::int64_t hi = nearest(end, true);
  if (hi <= lo) return fallback;
  if (lo < 0) lo = 0;
  if (lo > unit) lo = unit;
  if (hi < unit + 256) hi = unit + 256;
  std::int64_t before = (unit - lo) / 256;
  std::int64_t after = (hi - unit - 256) / 256;
  while (before + after + 1 > 4) {
    if (before > after) {
      --before;
    } else {
      --after;
    }
  }
  return {static_cast<Hpa>(unit - before * 256), static_cast<Hpa>(unit + 256 + after * 256)};
}

Outcome window_oracle_match() {
  const auto t0 = Clock::now();
  const AddressWindow ex = compute_address_window(0x10000, 512, 3, 2);
  if (!(ex == AddressWindow{65280, 66048})) return {false, "hand example mismatch"};
  std::mt19937_64 rng(7);
  const std::uint32_t gs[] = {256, 512, 1024};
  std::uniform_int_distribution<std::uint64_t> addr_d(0, (std::uint64_t{1} << 40) / 64 - 1);
  std::uniform_int_distribution<int> g_d(0, 2), q_d(0, 32), small_d(0, 64);
  for (int i = 0; i < 100'000; ++i) {
    // A quarter of the addresses sit near zero to exercise the lower clamp.
    const Hpa addr = (i % 4 == 0 ? static_cast<Hpa>(small_d(rng)) : addr_d(rng)) * 64;
    const std::uint32_t g = gs[g_d(rng)];
    const std::size_t m = q_d(rng), s = q_d(rng);
    const AddressWindow got = compute_address_window(addr, g, m, s);
    const AddressWindow want = window_oracle(static_cast<std::int64_t>(addr), g, m, s);
    if (!(got == want)) {
      std::ostringstream os;
      os << "addr=" << addr << " g=" << g << " memq=" << m << " srq=" << s;
      return {false, os.str()};
    }
  }
  const double secs = seconds_since(t0);
  if (secs >= 30.0) return {false, "took " + fmt("%.1fs", secs)};
  return {true, "100000 tuples agree"};
}

Outcome queue_capacity_stress() {
  const SrPolicy policies[] = {SrPolicy::kNaive, SrPolicy::kDynamic, SrPolicy::kMaxGranularity,
                               SrPolicy::kWindowed, SrPolicy::kOff};
  std::uint64_t total_loads = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    std::mt19937_64 rng(seed);
    SrQueueConfig qc;
    qc.policy = policies[seed % 5];
    SrQueueLogic q(qc);
    std::vector<std::uint64_t> outstanding;
    std::vector<std::uint8_t> completed;
    std::uint64_t next_tag = 0;
    std::uint64_t events = 0;
    auto respond = [&] {
      std::uniform_int_distribution<std::size_t> pick(0, outstanding.size() - 1);
      const std::size_t k = pick(rng);
      const std::uint64_t tag = outstanding[k];
      outstanding[k] = outstanding.back();
      outstanding.pop_back();
      FlitMsg req = FlitMsg::mem_rd(0, tag);
      const auto load = static_cast<DevLoad>(rng() % 4);
      const MemRequest done = q.on_response(FlitMsg::rd_resp(req, load, 0));
      if (done.tag != tag || completed[tag]++ != 0) return false;
      return true;
    };
    while (events < 1'000'000) {
      const unsigned roll = static_cast<unsigned>(rng() % 3);
      ++events;
      if (roll == 0) {
        const Hpa addr = (rng() % 4096) * 64;
        const MemRequest req = MemRequest::load(addr, next_tag);
        const auto res = q.on_load(req);
        if (res.outcome == SrQueueLogic::LoadOutcome::kForwarded) {
          outstanding.push_back(next_tag);
        }
        if (res.outcome != SrQueueLogic::LoadOutcome::kStalled) {
          completed.push_back(0);
          ++next_tag;
        }
      } else if (roll == 1) {
        if (auto moved = q.sr_reader_step()) outstanding.push_back(moved->tag);
      } else if (!outstanding.empty()) {
        if (!respond()) return {false, "duplicate or mismatched completion, seed " + std::to_string(seed)};
      }
      if (q.sr_depth() > 32 || q.mem_depth() > 32) {
        return {false, "queue above 32 entries, seed " + std::to_string(seed)};
      }
    }
    // Drain.
    for (;;) {
      while (auto moved = q.sr_reader_step()) outstanding.push_back(moved->tag);
      if (outstanding.empty()) break;
      while (!outstanding.empty()) {
        if (!respond()) return {false, "duplicate completion while draining"};
      }
    }
    if (q.sr_depth() != 0 || q.mem_depth() != 0) return {false, "queues not empty after drain"};
    for (std::uint8_t c : completed) {
      if (c != 1) return {false, "load not completed exactly once, seed " + std::to_string(seed)};
    }
    if (q.counters().max_sr_depth > 32 || q.counters().max_mem_depth > 32) {
      return {false, "depth counter above 32"};
    }
    total_loads += completed.size();
  }

  // End-to-end: a saturating trace through the full simulator.
  const Trace t = make(Pattern::kRand, 1.0, 20'000, 1, 3);
  const RunResult r = run(ScenarioConfig{}, "CXL_SR", t);
  const auto& c = r.report.ports.at(0).sr;
  if (c.max_sr_depth > 32 || c.max_mem_depth > 32) return {false, "simulator queue above 32"};
  if (r.report.load_latency.points.size() != r.report.loads) return {false, "simulator lost loads"};
  return {true, std::to_string(total_loads) + " loads over 100 seeds x 1e6 events"};
}

Outcome hit_rate_trend() {
  const ScenarioConfig cfg;  // one Z-NAND endpoint
  double worst = 0;
  auto timed = [&](std::string_view mode, const Trace& t) {
    const auto t0 = Clock::now();
    const double hr = run(cfg, mode, t).report.hit_rate();
    worst = std::max(worst, seconds_since(t0));
    return hr;
  };
  const Trace seq = make(Pattern::kSeq, 1.0, 100'000, 10, 1);
  const double cxl = timed("CXL", seq), naive = timed("CXL_NAIVE", seq), dyn = timed("CXL_DYN", seq);
  const Trace rnd = make(Pattern::kRand, 1.0, 100'000, 1900, 1);
  const double rdyn = timed("CXL_DYN", rnd), rmax = timed("CXL_MAX", rnd);
  std::ostringstream os;
  os.precision(4);
  os << "seq CXL=" << cxl << " NAIVE=" << naive << " DYN=" << dyn << "; rand DYN=" << rdyn
     << " MAX=" << rmax << "; slowest run " << fmt("%.1fs", worst);
  const bool ok = cxl < naive && naive < dyn && dyn >= 0.95 && rmax <= rdyn - 0.01 && worst < 120.0;
  return {ok, os.str()};
}

Outcome around_trend() {
  const ScenarioConfig cfg;
  const Trace t = make(Pattern::kAround, 1.0, 100'000, 300, 1);
  const double sr = run(cfg, "CXL_SR", t).report.hit_rate();
  const double dyn = run(cfg, "CXL_DYN", t).report.hit_rate();
  std::ostringstream os;
  os.precision(4);
  os << "SR=" << sr << " DYN=" << dyn;
  return {sr >= dyn + 0.05, os.str()};
}

Outcome speedup_ordering() {
  const Trace t = make(Pattern::kSeq, 1.0, 50'000, 1, 1);
  ScenarioConfig znand;
  ScenarioConfig dram;
  dram.endpoints[0].media = MediaKind::kDramDdr5;
  const double gpu = static_cast<double>(run(znand, "GPU_DRAM", t).report.end_time);
  const double cxl_dram = static_cast<double>(run(dram, "CXL", t).report.end_time);
  const double sr_z = static_cast<double>(run(znand, "CXL_SR", t).report.end_time);
  const double cxl_z = static_cast<double>(run(znand, "CXL", t).report.end_time);
  const double uvm = static_cast<double>(run(znand, "UVM", t).report.end_time);
  const double steps[] = {cxl_dram / gpu, sr_z / cxl_dram, cxl_z / sr_z, uvm / cxl_z};
  std::ostringstream os;
  os.precision(4);
  os << "normalized GPU_DRAM=1 CXL(DRAM)=" << cxl_dram / gpu << " CXL_SR(Z)=" << sr_z / gpu
     << " CXL(Z)=" << cxl_z / gpu << " UVM=" << uvm / gpu;
  bool ok = true;
  for (double s : steps) ok = ok && s >= 1.05;
  return {ok, os.str()};
}

ScenarioConfig gc_scenario() {
  ScenarioConfig cfg;
  cfg.endpoints[0].gc.region_bytes = 512 * kKiB;
  cfg.endpoints[0].gc.trigger_fraction = 0.25;
  cfg.endpoints[0].gc.duration_ns = 2'000'000;
  return cfg;
}

Outcome ds_under_gc() {
  const ScenarioConfig cfg = gc_scenario();
  const Trace t = make(Pattern::kSeq, 0.0, 20'000, 1000, 1, 16 * kMiB);
  const RunReport ds = run(cfg, "CXL_DS", t).report;
  const RunReport sr = run(cfg, "CXL_SR", t).report;
  const Ns ds_p99 = ds.store_latency.p99();
  const Ns sr_p99 = sr.store_latency.p99();
  const double util_gc = ds.ports.at(0).max_ingress_util_in_gc;
  std::ostringstream os;
  os << "GCs DS=" << ds.gc_count() << " SR=" << sr.gc_count() << "; store p99 DS=" << ds_p99
     << "ns SR=" << sr_p99 << "ns; DS ingress peak in GC=" << util_gc;
  const bool ok = ds.gc_count() >= 2 && sr.gc_count() >= 2 && ds_p99 <= 3 * cfg.gpu.write_ns &&
                  sr_p99 >= cfg.endpoints[0].gc.duration_ns && util_gc < 1.0 &&
                  ds.gc_count() <= sr.gc_count();
  return {ok, os.str()};
}

// Random mix over a small footprint so caches, buffers and GC all engage.
Trace integrity_trace(std::mt19937_64& rng) {
  const std::uint64_t ops = 1 + rng() % 1000;
  const std::uint64_t lines = 1 + rng() % 8192;
  Trace t;
  Ns tick = 0;
  for (std::uint64_t i = 0; i < ops; ++i) {
    TraceOp op;
    const unsigned roll = static_cast<unsigned>(rng() % 10);
    tick += rng() % 4 == 0 ? rng() % 20'000 : rng() % 50;
    op.tick = tick;
    if (roll == 0) {
      op.op = OpKind::kCompute;
      op.addr = 0;
      op.size = static_cast<std::uint32_t>(1 + rng() % 500);
    } else {
      op.op = roll <= 4 ? OpKind::kStore : OpKind::kLoad;
      op.addr = (rng() % lines) * kRequestBytes;
      op.size = kRequestBytes;
    }
    t.push_back(op);
  }
  return t;
}

Outcome write_integrity() {
  ScenarioConfig cfg = gc_scenario();
  cfg.endpoints[0].gc.region_bytes = 8 * kKiB;
  cfg.gpu.llc.capacity_bytes = 4 * kKiB;  // frequent write-backs reach the endpoint
  cfg.gpu.local_bytes = 64 * kKiB;  // forces page eviction in UVM and GDS
  cfg.ds.reserved_bytes = 16 * kKiB;
  const char* modes[] = {"GPU_DRAM", "UVM", "GDS", "CXL", "CXL_SR", "CXL_DS",
                         "CXL_NAIVE", "CXL_DYN", "CXL_MAX"};
  std::mt19937_64 rng(2024);
  std::uint64_t runs = 0, gcs = 0, parked = 0, evictions = 0, writebacks = 0;
  for (int n = 0; n < 1000; ++n) {
    const Trace t = integrity_trace(rng);
    std::map<Hpa, std::uint64_t> image;
    std::vector<std::uint64_t> expected(t.size(), 0);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (t[i].op == OpKind::kStore) {
        image[t[i].addr] = store_value_for(i);
      } else if (t[i].op == OpKind::kLoad) {
        const auto it = image.find(t[i].addr);
        expected[i] = it == image.end() ? 0 : it->second;
      }
    }
    for (const char* mode : modes) {
      const RunResult r = run(cfg, mode, t, /*capture=*/true);
      ++runs;
      gcs += r.report.gc_count();
      evictions += r.report.uvm.evictions;
      writebacks += r.report.llc_writebacks;
      for (const auto& p : r.report.ports) parked += p.ds_buffered;
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i].op == OpKind::kLoad && r.load_values.at(i) != expected[i]) {
          return {false, std::string(mode) + ": load " + std::to_string(i) + " of trace " + std::to_string(n)};
        }
      }
      for (const auto& [addr, v] : image) {
        const auto it = r.final_image.find(addr);
        if (it == r.final_image.end() || it->second != v) {
          return {false, std::string(mode) + ": final image differs in trace " + std::to_string(n)};
        }
      }
      for (const auto& [addr, v] : r.final_image) {
        if (v != 0 && image.count(addr) == 0) {
          return {false, std::string(mode) + ": stray line in trace " + std::to_string(n)};
        }
      }
    }
  }
  std::ostringstream os;
  os << runs << " runs match the sequential oracle; exercised " << gcs << " GCs, " << parked
     << " parked stores, " << evictions << " page evictions, " << writebacks << " LLC write-backs";
  return {true, os.str()};
}

Outcome fault_bound() {
  ScenarioConfig cfg;
  const Ns intervention = cfg.uvm.intervention_ns;
  std::uint64_t faults = 0, resident = 0;
  for (const char* mode : {"UVM", "GDS"}) {
    for (Pattern p : {Pattern::kSeq, Pattern::kRand, Pattern::kAround}) {
      const Trace t = make(p, 0.7, 20'000, 50, 5, 64 * kMiB);
      const RunResult r = run(cfg, mode, t);
      for (const auto& a : r.uvm_accesses) {
        if (a.faulted) {
          ++faults;
          if (a.latency < intervention) return {false, std::string(mode) + ": fault under 500us"};
        } else if (!a.joined) {
          ++resident;
          if (a.latency >= intervention) return {false, std::string(mode) + ": resident access paid intervention"};
        }
      }
    }
  }
  if (faults == 0 || resident == 0) return {false, "scenario did not exercise both paths"};
  return {true, std::to_string(faults) + " faults, " + std::to_string(resident) + " resident accesses"};
}

Outcome determinism() {
  const char* modes[] = {"GPU_DRAM", "UVM", "GDS", "CXL", "CXL_SR", "CXL_DS", "CXL_NAIVE",
                         "CXL_DYN", "CXL_MAX", "CXL_SR"};
  const char* workloads[] = {"gnn", "stencil", "bfs", "vadd", "mri", "sort", "cfd", "gemm", "path", "rsum"};
  int pairs = 0;
  for (int i = 0; i < 20; ++i) {
    ScenarioConfig cfg = i % 2 ? gc_scenario() : ScenarioConfig{};
    cfg.seed = static_cast<std::uint64_t>(100 + i);
    const Trace t = generate_preset(workloads[i % 10], 16 * kMiB, 5'000, cfg.seed);
    cfg.apply(parse_mode(modes[i % 10]));
    RunOptions opt;
    opt.workload_label = workloads[i % 10];
    const std::string a = report_text(simulate(cfg, t, opt).report);
    const std::string b = report_text(simulate(cfg, t, opt).report);
    if (a != b) return {false, std::string("reports differ for ") + modes[i % 10] + "/" + workloads[i % 10]};
    ++pairs;
  }
  return {true, std::to_string(pairs) + " scenario/seed pairs byte-identical"};
}

}  // namespace

int main() {
  report(1, "codec-exactness", codec_exactness);
  report(2, "address-window-oracle", window_oracle_match);
  report(3, "queue-capacity-stress", queue_capacity_stress);
  report(4, "sr-hit-rate-trend", hit_rate_trend);
  report(5, "around-window-benefit", around_trend);
  report(6, "speedup-ordering", speedup_ordering);
  report(7, "deterministic-store-gc", ds_under_gc);
  report(8, "write-integrity", write_integrity);
  report(9, "fault-bound", fault_bound);
  report(10, "determinism", determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
