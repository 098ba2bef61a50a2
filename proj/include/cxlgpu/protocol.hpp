#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "cxlgpu/common.hpp"

namespace cxlgpu {

/// Endpoint QoS telemetry carried on every response. Numeric order is severity.
enum class DevLoad : std::uint8_t {
  kLight = 0,             // ll
  kOptimal = 1,           // ol
  kModerateOverload = 2,  // mo
  kSevereOverload = 3,    // so
};

std::uint8_t encode_devload(DevLoad state);
/// Throws ProtocolError for values >= 4.
DevLoad decode_devload(std::uint8_t bits);
std::string_view to_string(DevLoad state);

/// Byte span named by a MemSpecRd.
struct SpecSpan {
  Hpa start = 0;
  std::uint32_t len = 0;
  bool operator==(const SpecSpan&) const = default;
};

/// Packs a 256B-aligned span of 1..4 units as (start/256) << 2 | (units - 1).
/// Throws ProtocolError on misaligned start, bad length, or address wrap.
std::uint64_t encode_specrd(Hpa window_start, std::uint32_t window_len);

/// Total over all 64-bit words. Bits [2, 58) hold the 256B offset; the top six
/// bits are reserved and ignored. The span is truncated at the top of the
/// address space so it never wraps.
SpecSpan decode_specrd(std::uint64_t wire_word);

enum class MsgKind : std::uint8_t { kMemRd, kMemWr, kMemSpecRd, kRdResp, kWrResp };

std::string_view to_string(MsgKind kind);

/// A structured CXL.mem message. Only requests are built with the factories
/// below so framing invariants hold at construction.
struct FlitMsg {
  MsgKind kind = MsgKind::kMemRd;
  Hpa hpa = 0;
  std::uint32_t payload_len = kRequestBytes;
  std::optional<DevLoad> devload;
  std::uint64_t tag = 0;
  std::uint64_t data = 0;  // functional payload value for MemWr / RdResp

  static FlitMsg mem_rd(Hpa hpa, std::uint64_t tag);
  static FlitMsg mem_wr(Hpa hpa, std::uint64_t tag, std::uint64_t data);
  static FlitMsg mem_spec_rd(Hpa start, std::uint32_t len, std::uint64_t tag);
  static FlitMsg rd_resp(const FlitMsg& req, DevLoad load, std::uint64_t data);
  static FlitMsg wr_resp(const FlitMsg& req, DevLoad load);

  bool is_request() const {
    return kind == MsgKind::kMemRd || kind == MsgKind::kMemWr || kind == MsgKind::kMemSpecRd;
  }
  /// Wire word for a MemSpecRd.
  std::uint64_t spec_word() const;
};

}  // namespace cxlgpu
