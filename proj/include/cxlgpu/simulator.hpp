#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cxlgpu/config.hpp"
#include "cxlgpu/metrics.hpp"
#include "cxlgpu/traces.hpp"

namespace cxlgpu {

struct RunOptions {
  /// Also simulate GPU_DRAM to fill in the normalized time.
  bool compute_reference = true;
  /// Record every load's value and the final memory image.
  bool capture_values = false;
  std::string workload_label = "trace";
  std::string mode_label;  // defaults to the mode name
};

struct UvmAccessRecord {
  Ns latency = 0;
  bool faulted = false;
  bool joined = false;
};

struct RunResult {
  RunReport report;
  /// Value observed by each load, indexed like the trace (captured runs only).
  std::vector<std::uint64_t> load_values;
  /// Final contents by trace offset; lines never written are absent or 0.
  std::map<Hpa, std::uint64_t> final_image;
  std::vector<UvmAccessRecord> uvm_accesses;
};

/// Value written by the store at trace position `index`.
constexpr std::uint64_t store_value_for(std::size_t index) { return index + 1; }

/// Simulates one scenario. Throws ConfigError when the trace does not fit the
/// configured memory, SimulationError on an internal invariant violation.
RunResult simulate(const ScenarioConfig& config, const Trace& trace, const RunOptions& options = {});

/// Runs every selection against the same trace and one GPU_DRAM reference.
std::vector<RunResult> compare(const ScenarioConfig& config, const std::vector<ModeSelection>& modes,
                               const Trace& trace, const RunOptions& options = {});

}  // namespace cxlgpu
