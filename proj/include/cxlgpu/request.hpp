#pragma once

#include <cstdint>

#include "cxlgpu/common.hpp"

namespace cxlgpu {

enum class ReqKind : std::uint8_t { kLoad, kStore };

/// One 64B load or store issued by the GPU toward the memory system.
struct MemRequest {
  ReqKind kind = ReqKind::kLoad;
  Hpa hpa = 0;
  std::uint32_t size = kRequestBytes;
  Ns issue_time = 0;
  std::uint32_t sm_id = 0;
  std::uint64_t tag = 0;
  std::uint64_t value = 0;  // store payload

  /// Throws ProtocolError unless hpa is 64B aligned.
  static MemRequest load(Hpa hpa, std::uint64_t tag, Ns issue_time = 0, std::uint32_t sm_id = 0);
  static MemRequest store(Hpa hpa, std::uint64_t tag, std::uint64_t value, Ns issue_time = 0,
                          std::uint32_t sm_id = 0);
  bool is_load() const { return kind == ReqKind::kLoad; }
};

}  // namespace cxlgpu
