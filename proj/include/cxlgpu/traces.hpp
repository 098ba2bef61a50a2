#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cxlgpu/common.hpp"

namespace cxlgpu {

enum class Pattern : std::uint8_t { kSeq, kAround, kRand };
std::string_view to_string(Pattern p);
Pattern parse_pattern(std::string_view text);

enum class OpKind : char { kLoad = 'L', kStore = 'S', kCompute = 'C' };

/// One trace record. For loads and stores `addr` is a byte offset into the
/// workload footprint; for compute records `size` is the gap in ns.
struct TraceOp {
  Ns tick = 0;
  OpKind op = OpKind::kLoad;
  Hpa addr = 0;
  std::uint32_t size = kRequestBytes;
  bool operator==(const TraceOp&) const = default;
};

using Trace = std::vector<TraceOp>;

struct WorkloadSpec {
  std::string name = "custom";
  Pattern pattern = Pattern::kSeq;
  double compute_ratio = 0.0;
  double load_ratio = 1.0;  // fraction of memory ops that are loads
  std::uint64_t footprint = 160 * kMiB;
  std::uint64_t op_count = 100'000;
  std::uint64_t seed = 1;
  Ns compute_ns = 100;      // length of one compute gap
  Ns issue_ns = 10;         // tick spacing after a memory op
  std::uint64_t walk_bytes = 1 * kKiB;  // Around: reach on either side of the center
  std::uint64_t dwell = 16;             // Around: accesses per center

  /// Throws ConfigError on out-of-range fields.
  void validate() const;
};

/// Deterministic for a given spec. Seq strides 64B and wraps at the footprint;
/// Around picks lines uniformly within `walk_bytes` on either side of a center
/// that moves to a random line every `dwell` accesses; Rand is uniform over
/// 64B lines.
Trace generate(const WorkloadSpec& spec);

/// Named mixes (rsum, stencil, sort, gemm, vadd, saxpy, conv3, path, cfd,
/// gauss, bfs) and the composites gnn and mri.
std::vector<std::string> preset_names();
/// Throws ConfigError for an unknown name. Composite names describe their
/// first segment; use generate_preset for the full trace.
WorkloadSpec preset(std::string_view name);
Trace generate_preset(std::string_view name, std::uint64_t footprint, std::uint64_t op_count,
                      std::uint64_t seed);

/// Reads `tick_ns op addr_hex size` lines. Blank lines and '#' comments are
/// skipped. Throws TraceError with the 1-based line number.
Trace parse_trace(std::istream& in);
Trace load_trace_file(const std::string& path);
void dump_trace(const Trace& trace, std::ostream& out);

struct TraceStats {
  std::uint64_t loads = 0;
  std::uint64_t stores = 0;
  std::uint64_t computes = 0;
  double compute_ratio() const;
  double load_ratio() const;
};
TraceStats trace_stats(const Trace& trace);

}  // namespace cxlgpu
