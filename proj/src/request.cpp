#include "cxlgpu/request.hpp"

#include <string>

namespace cxlgpu {

namespace {
void check_alignment(Hpa hpa) {
  if (hpa % kRequestBytes != 0) {
    throw ProtocolError("memory request at " + std::to_string(hpa) + " is not 64B aligned");
  }
}
}  // namespace

MemRequest MemRequest::load(Hpa hpa, std::uint64_t tag, Ns issue_time, std::uint32_t sm_id) {
  check_alignment(hpa);
  return {ReqKind::kLoad, hpa, kRequestBytes, issue_time, sm_id, tag, 0};
}

MemRequest MemRequest::store(Hpa hpa, std::uint64_t tag, std::uint64_t value, Ns issue_time,
                             std::uint32_t sm_id) {
  check_alignment(hpa);
  return {ReqKind::kStore, hpa, kRequestBytes, issue_time, sm_id, tag, value};
}

}  // namespace cxlgpu
