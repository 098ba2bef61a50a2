#include "cxlgpu/protocol.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace cxlgpu {

namespace {

constexpr std::uint64_t kOffsetMask = (std::uint64_t{1} << 56) - 1;

void require_aligned(Hpa hpa, std::uint64_t unit, const char* what) {
  if (hpa % unit != 0) {
    throw ProtocolError(std::string(what) + ": address 0x" + std::to_string(hpa) +
                        " not aligned to " + std::to_string(unit) + "B");
  }
}

}  // namespace

std::uint8_t encode_devload(DevLoad state) { return static_cast<std::uint8_t>(state); }

DevLoad decode_devload(std::uint8_t bits) {
  if (bits > 3) {
    throw ProtocolError("DevLoad field is two bits wide, got " + std::to_string(bits));
  }
  return static_cast<DevLoad>(bits);
}

std::string_view to_string(DevLoad state) {
  switch (state) {
    case DevLoad::kLight: return "ll";
    case DevLoad::kOptimal: return "ol";
    case DevLoad::kModerateOverload: return "mo";
    case DevLoad::kSevereOverload: return "so";
  }
  return "?";
}

std::uint64_t encode_specrd(Hpa window_start, std::uint32_t window_len) {
  if (window_start % kSpecUnitBytes != 0) {
    throw ProtocolError("MemSpecRd start must be 256B aligned");
  }
  if (window_len == 0 || window_len % kSpecUnitBytes != 0 ||
      window_len > kMaxSpecUnits * kSpecUnitBytes) {
    throw ProtocolError("MemSpecRd length must be 256, 512, 768 or 1024 bytes");
  }
  if (window_start > std::numeric_limits<Hpa>::max() - (window_len - 1)) {
    throw ProtocolError("MemSpecRd span wraps the address space");
  }
  const std::uint64_t units = window_len / kSpecUnitBytes;
  return ((window_start / kSpecUnitBytes) << 2) | (units - 1);
}

SpecSpan decode_specrd(std::uint64_t wire_word) {
  const std::uint64_t offset_units = (wire_word >> 2) & kOffsetMask;
  const std::uint64_t units = (wire_word & 0b11) + 1;
  const Hpa start = offset_units * kSpecUnitBytes;
  // Only the last offset unit can run past 2^64; clip it to what remains.
  const std::uint64_t last = std::numeric_limits<Hpa>::max() - start;  // room minus one
  const std::uint64_t want = units * kSpecUnitBytes;
  const std::uint64_t len = want - 1 <= last ? want : last + 1;
  return {start, static_cast<std::uint32_t>(len)};
}

std::string_view to_string(MsgKind kind) {
  switch (kind) {
    case MsgKind::kMemRd: return "MemRd";
    case MsgKind::kMemWr: return "MemWr";
    case MsgKind::kMemSpecRd: return "MemSpecRd";
    case MsgKind::kRdResp: return "RdResp";
    case MsgKind::kWrResp: return "WrResp";
  }
  return "?";
}

FlitMsg FlitMsg::mem_rd(Hpa hpa, std::uint64_t tag) {
  require_aligned(hpa, kRequestBytes, "MemRd");
  return {MsgKind::kMemRd, hpa, kRequestBytes, std::nullopt, tag, 0};
}

FlitMsg FlitMsg::mem_wr(Hpa hpa, std::uint64_t tag, std::uint64_t data) {
  require_aligned(hpa, kRequestBytes, "MemWr");
  return {MsgKind::kMemWr, hpa, kRequestBytes, std::nullopt, tag, data};
}

FlitMsg FlitMsg::mem_spec_rd(Hpa start, std::uint32_t len, std::uint64_t tag) {
  encode_specrd(start, len);  // validates
  return {MsgKind::kMemSpecRd, start, len, std::nullopt, tag, 0};
}

FlitMsg FlitMsg::rd_resp(const FlitMsg& req, DevLoad load, std::uint64_t data) {
  if (req.kind != MsgKind::kMemRd) throw ProtocolError("RdResp answers a MemRd only");
  return {MsgKind::kRdResp, req.hpa, req.payload_len, load, req.tag, data};
}

FlitMsg FlitMsg::wr_resp(const FlitMsg& req, DevLoad load) {
  if (req.kind != MsgKind::kMemWr) throw ProtocolError("WrResp answers a MemWr only");
  return {MsgKind::kWrResp, req.hpa, 0, load, req.tag, 0};
}

std::uint64_t FlitMsg::spec_word() const {
  if (kind != MsgKind::kMemSpecRd) throw ProtocolError("not a MemSpecRd");
  return encode_specrd(hpa, payload_len);
}

}  // namespace cxlgpu
