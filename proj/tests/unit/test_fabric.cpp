#include <algorithm>
#include <cstdint>
#include <list>
#include <map>
#include <random>
#include <vector>

#include "doctest.h"

#include "cxlgpu/fabric.hpp"

using namespace cxlgpu;

TEST_SUITE("fabric") {

TEST_CASE("memory map rejects empty, overlapping and duplicate regions") {
  MemoryMap m;
  m.add({0x1000, 0x1000, {TargetKind::kGpuLocal, 0}});
  CHECK_THROWS_AS(m.add({0x3000, 0, {TargetKind::kPcieHost, 0}}), ConfigError);
  CHECK_THROWS_AS(m.add({0x1800, 0x1000, {TargetKind::kPcieHost, 0}}), ConfigError);
  CHECK_THROWS_AS(m.add({0x0800, 0x1000, {TargetKind::kPcieHost, 0}}), ConfigError);
  CHECK_THROWS_AS(m.add({0x4000, 0x100, {TargetKind::kGpuLocal, 0}}), ConfigError);
  CHECK_THROWS_AS(m.add({~Hpa{0} - 0xFF, 0x1000, {TargetKind::kCxlPort, 1}}), ConfigError);
  m.add({0x2000, 0x1000, {TargetKind::kPcieHost, 0}});
  m.add({0x0, 0x1000, {TargetKind::kCxlPort, 0}});
  CHECK(m.regions().size() == 3);
  CHECK(m.regions().front().base == 0);
}

TEST_CASE("decode returns the owning region and offset") {
  MemoryMap m;
  m.add({0x1000, 0x1000, {TargetKind::kGpuLocal, 0}});
  m.add({0x4000, 0x1000, {TargetKind::kCxlPort, 2}});
  CHECK_FALSE(m.decode(0x0FFF).has_value());
  CHECK(m.decode(0x1000) == Decoded{{TargetKind::kGpuLocal, 0}, 0});
  CHECK(m.decode(0x1FFF) == Decoded{{TargetKind::kGpuLocal, 0}, 0xFFF});
  CHECK_FALSE(m.decode(0x2000).has_value());
  CHECK(m.decode(0x4040) == Decoded{{TargetKind::kCxlPort, 2}, 0x40});
  CHECK_FALSE(m.decode(0x5000).has_value());
  CHECK(m.find({TargetKind::kCxlPort, 2})->base == 0x4000);
  CHECK(m.find({TargetKind::kCxlPort, 1}) == nullptr);
}

TEST_CASE("enumeration places HDM ranges after the host window") {
  FabricLayout l;
  l.gpu_local_bytes = 16 * kMiB;
  l.host_window_bytes = 1 * kGiB;
  l.endpoints = {{1 * kGiB, MediaKind::kZnand, std::nullopt}, {512 * kMiB, MediaKind::kDramDdr5, std::nullopt}};
  const MemoryMap m = enumerate_endpoints(l);
  REQUIRE(m.regions().size() == 4);
  const Region* p0 = m.find({TargetKind::kCxlPort, 0});
  const Region* p1 = m.find({TargetKind::kCxlPort, 1});
  CHECK(p0->base == 16 * kMiB + 1 * kGiB);
  CHECK(p1->base == p0->end());
  CHECK(m.decode(p1->base + 64)->target.port == 1);
  CHECK(Target{TargetKind::kCxlPort, 1}.str() == "CXL_PORT(1)");

  l.endpoints[1].base = p0->base + 64 * kMiB;
  CHECK_THROWS_AS(enumerate_endpoints(l), ConfigError);
  l.endpoints[1].base = 100 * kGiB + 64;
  CHECK_THROWS_AS(enumerate_endpoints(l), ConfigError);
}

TEST_CASE("LLC matches a set-associative LRU oracle") {
  const LlcConfig cfg{2 * kKiB, 4, 20};
  Llc llc(cfg);
  const std::size_t sets = cfg.capacity_bytes / 64 / cfg.ways;
  struct Line {
    Hpa addr;
    bool dirty;
    std::uint64_t value;
  };
  std::vector<std::list<Line>> oracle(sets);
  std::map<Hpa, std::uint64_t> memory;
  std::mt19937_64 rng(9);
  for (int i = 0; i < 50000; ++i) {
    const Hpa addr = (rng() % 256) * 64;
    const bool store = rng() % 2;
    const std::uint64_t value = static_cast<std::uint64_t>(i) + 1;
    auto& set = oracle[(addr / 64) % sets];
    auto it = std::find_if(set.begin(), set.end(), [&](const Line& l) { return l.addr == addr; });
    const auto r = llc.access(addr, store, value);
    if (it != set.end()) {
      REQUIRE(r.outcome == Llc::Outcome::kHit);
      REQUIRE(r.value == (store ? value : it->value));
      Line l = *it;
      set.erase(it);
      if (store) l = {addr, true, value};
      set.push_front(l);
      continue;
    }
    REQUIRE(r.outcome == Llc::Outcome::kMiss);
    if (set.size() == cfg.ways) {
      const Line victim = set.back();
      set.pop_back();
      if (victim.dirty) {
        REQUIRE(r.dirty_victim.has_value());
        REQUIRE(r.dirty_victim->line == victim.addr);
        REQUIRE(r.dirty_victim->value == victim.value);
        memory[victim.addr] = victim.value;
      } else {
        REQUIRE_FALSE(r.dirty_victim.has_value());
      }
    } else {
      REQUIRE_FALSE(r.dirty_victim.has_value());
    }
    if (store) {
      set.push_front({addr, true, value});
    } else {
      const std::uint64_t v = memory.count(addr) ? memory[addr] : 0;
      llc.complete_fill(addr, v);
      set.push_front({addr, false, v});
    }
  }
  std::size_t dirty = 0;
  for (const auto& s : oracle)
    for (const auto& l : s) dirty += l.dirty;
  CHECK(llc.dirty_lines().size() == dirty);
}

TEST_CASE("LLC pending lines block reuse until filled") {
  Llc llc({4 * 64, 4, 20});  // one set of four ways
  for (Hpa a = 0; a < 4 * 64; a += 64) REQUIRE(llc.access(a, false, 0).outcome == Llc::Outcome::kMiss);
  CHECK(llc.access(0, false, 0).outcome == Llc::Outcome::kPendingFill);
  CHECK(llc.access(0x1000, false, 0).outcome == Llc::Outcome::kNoWay);
  CHECK_FALSE(llc.peek(0).has_value());
  llc.complete_fill(0, 5);
  CHECK(llc.apply_merged(0, true, 6) == 6);
  CHECK(llc.peek(0) == 6u);
  CHECK_THROWS_AS(llc.complete_fill(0, 1), SimulationError);
  const auto r = llc.access(0x1000, true, 7);
  CHECK(r.outcome == Llc::Outcome::kMiss);
  REQUIRE(r.dirty_victim.has_value());
  CHECK(r.dirty_victim->line == 0);
  CHECK(r.dirty_victim->value == 6);
  CHECK_THROWS_AS(Llc({100, 4, 20}), ConfigError);
}

}
