#include <cstdint>
#include <limits>

#include "doctest.h"

#include "cxlgpu/protocol.hpp"

using namespace cxlgpu;

TEST_SUITE("protocol") {

TEST_CASE("MemSpecRd word packs offset and unit count") {
  CHECK(encode_specrd(0, 256) == 0);
  CHECK(encode_specrd(0x10000, 1024) == ((0x10000 / 256) << 2 | 3));
  CHECK(encode_specrd(0x300, 512) == ((3u << 2) | 1));
  const SpecSpan s = decode_specrd((std::uint64_t{5} << 2) | 2);
  CHECK(s.start == 5 * 256);
  CHECK(s.len == 768);
}

TEST_CASE("MemSpecRd encode rejects malformed spans") {
  CHECK_THROWS_AS(encode_specrd(64, 256), ProtocolError);
  CHECK_THROWS_AS(encode_specrd(0, 0), ProtocolError);
  CHECK_THROWS_AS(encode_specrd(0, 128), ProtocolError);
  CHECK_THROWS_AS(encode_specrd(0, 1280), ProtocolError);
  const Hpa top_unit = std::numeric_limits<Hpa>::max() - 255;
  CHECK_NOTHROW(encode_specrd(top_unit, 256));
  CHECK_THROWS_AS(encode_specrd(top_unit, 512), ProtocolError);
}

TEST_CASE("MemSpecRd decode ignores reserved bits and clips at the top") {
  const std::uint64_t word = (std::uint64_t{7} << 2) | 1;
  const std::uint64_t noisy = word | (std::uint64_t{0x3f} << 58);
  CHECK(decode_specrd(noisy) == decode_specrd(word));
  const std::uint64_t last = (((std::uint64_t{1} << 56) - 1) << 2) | 3;
  const SpecSpan s = decode_specrd(last);
  CHECK(s.start == std::numeric_limits<Hpa>::max() - 255);
  CHECK(s.len == 256);
  const SpecSpan all = decode_specrd(std::numeric_limits<std::uint64_t>::max());
  CHECK(all.len == 256);
}

TEST_CASE("DevLoad codes") {
  CHECK(encode_devload(DevLoad::kLight) == 0);
  CHECK(encode_devload(DevLoad::kOptimal) == 1);
  CHECK(encode_devload(DevLoad::kModerateOverload) == 2);
  CHECK(encode_devload(DevLoad::kSevereOverload) == 3);
  CHECK(decode_devload(2) == DevLoad::kModerateOverload);
  CHECK_THROWS_AS(decode_devload(4), ProtocolError);
  CHECK(to_string(DevLoad::kSevereOverload) == "so");
}

TEST_CASE("message factories") {
  const FlitMsg rd = FlitMsg::mem_rd(0x40, 9);
  CHECK(rd.kind == MsgKind::kMemRd);
  CHECK(rd.is_request());
  CHECK_FALSE(rd.devload.has_value());
  const FlitMsg resp = FlitMsg::rd_resp(rd, DevLoad::kOptimal, 77);
  CHECK(resp.kind == MsgKind::kRdResp);
  CHECK(resp.tag == 9);
  CHECK(resp.data == 77);
  CHECK(resp.devload == DevLoad::kOptimal);
  CHECK_FALSE(resp.is_request());
  CHECK_THROWS_AS(FlitMsg::mem_rd(0x41, 1), ProtocolError);
  const FlitMsg spec = FlitMsg::mem_spec_rd(0x200, 512, 3);
  CHECK(spec.payload_len == 512);
  CHECK(spec.spec_word() == encode_specrd(0x200, 512));
  const FlitMsg wr = FlitMsg::mem_wr(0x80, 4, 5);
  CHECK(FlitMsg::wr_resp(wr, DevLoad::kLight).kind == MsgKind::kWrResp);
}

}
