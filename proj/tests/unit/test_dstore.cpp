#include <cstdint>
#include <map>
#include <random>

#include "doctest.h"

#include "cxlgpu/dstore.hpp"

using namespace cxlgpu;

TEST_SUITE("dstore") {

TEST_CASE("store buffer parks, updates and fills up") {
  StoreBuffer b(3 * 64);
  CHECK(b.push(0x40, 1, 0) == StoreBuffer::PushResult::kInserted);
  CHECK(b.push(0x80, 2, 1) == StoreBuffer::PushResult::kInserted);
  CHECK(b.push(0x40, 3, 2) == StoreBuffer::PushResult::kUpdated);
  CHECK(b.lookup(0x40) == 3u);
  CHECK(b.push(0xC0, 4, 3) == StoreBuffer::PushResult::kInserted);
  CHECK(b.push(0x100, 5, 4) == StoreBuffer::PushResult::kFull);
  CHECK(b.push(0x80, 6, 5) == StoreBuffer::PushResult::kUpdated);
  CHECK(b.bytes() == 192);
  CHECK(b.consistent());
  CHECK_FALSE(b.lookup(0x100).has_value());
}

TEST_CASE("store buffer drains oldest first and frees on completion") {
  StoreBuffer b(1 * kMiB);
  b.push(0x200, 1, 0);
  b.push(0x100, 2, 1);
  b.push(0x300, 3, 2);
  const auto first = b.take_oldest(2);
  REQUIRE(first.size() == 2);
  CHECK(first[0] == StoreBuffer::FlushItem{0x200, 1});
  CHECK(first[1] == StoreBuffer::FlushItem{0x100, 2});
  CHECK(b.in_flight_slots() == 2);
  CHECK(b.queued_slots() == 1);
  b.complete(0x200);
  CHECK_FALSE(b.contains(0x200));
  CHECK_THROWS_AS(b.complete(0x200), SimulationError);
  CHECK_THROWS_AS(b.complete(0x300), SimulationError);
  CHECK(b.consistent());
}

TEST_CASE("a slot rewritten in flight is flushed again with the new value") {
  StoreBuffer b(1 * kMiB);
  b.push(0x40, 1, 0);
  b.push(0x80, 2, 0);
  REQUIRE(b.take_oldest(1).front().value == 1);
  b.push(0x40, 9, 1);
  CHECK(b.lookup(0x40) == 9u);
  b.complete(0x40);
  CHECK(b.contains(0x40));
  const auto next = b.take_oldest(4);
  REQUIRE(next.size() == 2);
  CHECK(next[0] == StoreBuffer::FlushItem{0x80, 2});
  CHECK(next[1] == StoreBuffer::FlushItem{0x40, 9});
  CHECK(b.consistent());
}

TEST_CASE("store buffer stays consistent under random traffic") {
  StoreBuffer b(16 * 64);
  std::map<Hpa, std::uint64_t> newest;
  std::vector<Hpa> in_flight;
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20000; ++i) {
    const unsigned roll = static_cast<unsigned>(rng() % 3);
    if (roll == 0) {
      const Hpa a = (rng() % 40) * 64;
      if (b.push(a, static_cast<std::uint64_t>(i), 0) != StoreBuffer::PushResult::kFull) newest[a] = i;
    } else if (roll == 1) {
      for (const auto& item : b.take_oldest(rng() % 4)) in_flight.push_back(item.hpa);
    } else if (!in_flight.empty()) {
      const std::size_t k = rng() % in_flight.size();
      b.complete(in_flight[k]);
      in_flight.erase(in_flight.begin() + static_cast<std::ptrdiff_t>(k));
    }
    REQUIRE(b.consistent());
    for (const auto& item : b.snapshot()) REQUIRE(item.value == newest.at(item.hpa));
  }
}

TEST_CASE("DS controller switches modes on slow writes and DevLoad") {
  DsConfig cfg;
  cfg.slow_threshold_ns = 1000;
  DsController ds(cfg);
  CHECK(ds.mode() == WriteMode::kDual);
  CHECK(ds.on_store(0x40, 1, 0, true) == DsController::StoreAction::kDualWrite);
  CHECK(ds.on_store(0x80, 2, 0, false) == DsController::StoreAction::kBuffered);
  CHECK(ds.on_store(0x80, 3, 0, true) == DsController::StoreAction::kUpdatedInBuffer);
  CHECK(ds.intercept_load(0x80) == 3u);
  CHECK_FALSE(ds.detect_slow_write(900, DevLoad::kLight, 10));
  CHECK(ds.detect_slow_write(1001, DevLoad::kLight, 20));
  CHECK(ds.mode() == WriteMode::kSuspended);
  CHECK(ds.on_store(0xC0, 4, 21, true) == DsController::StoreAction::kBuffered);
  CHECK(ds.flush_step(32).empty());
  CHECK_FALSE(ds.on_poll(DevLoad::kModerateOverload, 30));
  CHECK(ds.on_poll(DevLoad::kOptimal, 40));
  REQUIRE(ds.suspensions().size() == 1);
  CHECK(ds.suspensions()[0] == std::pair<Ns, Ns>{20, 40});
  CHECK(ds.observe_devload(DevLoad::kSevereOverload, 50));
  CHECK(ds.on_poll(DevLoad::kLight, 60));
}

TEST_CASE("DS flush respects the budget and the memory queue") {
  DsConfig cfg;
  cfg.slow_threshold_ns = 1000;
  cfg.flush_budget = 2;
  DsController ds(cfg);
  for (Hpa a = 0; a < 5 * 64; a += 64) ds.on_store(a, a + 1, 0, false);
  CHECK(ds.flush_step(1).size() == 1);
  CHECK(ds.flush_step(8).size() == 1);
  CHECK(ds.flush_step(8).empty());
  ds.on_flush_complete(0, 100, DevLoad::kLight, 5);
  CHECK(ds.flush_step(8).size() == 1);
  ds.on_flush_complete(64, 5000, DevLoad::kLight, 6);
  CHECK(ds.mode() == WriteMode::kSuspended);
  CHECK(ds.flush_step(8).empty());
}

TEST_CASE("DS overflow falls back to write-through") {
  DsConfig cfg;
  cfg.reserved_bytes = 64;
  DsController ds(cfg);
  CHECK(ds.on_store(0x40, 1, 0, false) == DsController::StoreAction::kBuffered);
  CHECK(ds.on_store(0x80, 2, 0, false) == DsController::StoreAction::kWriteThrough);
  CHECK(ds.overflows() == 1);
  CHECK_THROWS_AS(DsController(DsConfig{0, 64, 0, 10}), ConfigError);
}

}
