#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "cxlgpu/baselines.hpp"
#include "cxlgpu/dstore.hpp"
#include "cxlgpu/endpoint.hpp"
#include "cxlgpu/fabric.hpp"
#include "cxlgpu/srqueue.hpp"

namespace cxlgpu {

inline constexpr int kConfigSchemaVersion = 1;

enum class Mode : std::uint8_t { kGpuDram, kUvm, kGds, kCxl, kCxlSr, kCxlDs };
std::string_view to_string(Mode mode);

/// A mode name as written on the command line. Besides the six modes this
/// accepts CXL_NAIVE, CXL_DYN and CXL_MAX, which select CXL_SR with a fixed
/// speculation policy.
struct ModeSelection {
  Mode mode = Mode::kCxl;
  std::optional<SrPolicy> policy;
  std::string label;
};
ModeSelection parse_mode(std::string_view text);

struct EndpointSpec {
  MediaKind media = MediaKind::kZnand;
  std::uint64_t size = 1 * kGiB;
  std::optional<Hpa> base;
  // Overrides of the media defaults.
  std::optional<Ns> read_ns;
  std::optional<Ns> write_ns;
  std::optional<double> bytes_per_ns;
  std::optional<std::uint32_t> channels;
  std::uint64_t cache_bytes = 2 * kMiB;
  Ns cache_hit_ns = 50;
  std::uint32_t ingress_capacity = 32;
  GcConfig gc{};
  DevLoadThresholds devload{};

  EndpointConfig endpoint_config() const;
};

struct GpuSettings {
  std::uint64_t local_bytes = 16 * kMiB;
  Ns read_ns = 120;
  Ns write_ns = 60;
  std::uint32_t outstanding = 64;
  Ns mem_issue_ns = 1;
  LlcConfig llc{};
};

struct LinkSettings {
  Ns controller_rtt_ns = 80;
  double bytes_per_ns = 32.0;
};

struct UvmSettings {
  std::uint64_t page_bytes = 4 * kKiB;
  Ns intervention_ns = 500'000;
  std::uint32_t fault_servers = 1;
  BackingPath host_path{1'000, 32.0};      // UVM: host DRAM over PCIe
  BackingPath storage_path{20'000, 3.2};   // GDS: SSD through the storage stack
};

struct ScenarioConfig {
  int schema_version = kConfigSchemaVersion;
  std::string name = "default";
  Mode mode = Mode::kCxlSr;
  std::uint64_t seed = 1;
  GpuSettings gpu{};
  std::uint64_t host_window_bytes = 4 * kGiB;
  LinkSettings link{};
  std::vector<EndpointSpec> endpoints{EndpointSpec{}};
  SrQueueConfig sr{};
  DsConfig ds{};
  UvmSettings uvm{};

  /// Throws ConfigError naming the offending field.
  void validate() const;
  void apply(const ModeSelection& selection);
};

/// Strict parse: unknown keys, wrong types and a missing or different
/// schema_version are rejected with ConfigError.
ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_config_file(const std::string& path);

}  // namespace cxlgpu
