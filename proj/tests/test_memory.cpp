#include <gtest/gtest.h>

#include <algorithm>
#include <list>
#include <map>
#include <random>
#include <vector>

#include "squire/machine.hpp"
#include "squire/memory.hpp"

using namespace squire;

namespace {
Program read_twice(std::uint64_t addr) {
  co_await act::read(addr, 8);
  co_await act::read(addr, 8);
}
}  // namespace

TEST(Memory, FirstReadMissesThenHits) {
  SquireConfig cfg;
  cfg.num_workers = 1;
  cfg.offload_cycles = 0;
  SquireMachine m(cfg);
  auto a = m.memory().allocate<std::uint64_t>("a", 8);
  const auto entry = m.register_entry("r", [&](std::uint64_t) { return read_twice(a.base); });
  m.start_squire(entry, 0);
  const RunReport r = m.run_until_idle(100);
  // issue 0, eligible 1, grant 1, data at 1 + 4 = 5; hit costs 1 more.
  EXPECT_EQ(r.cycles_total, 6u);
  EXPECT_EQ(r.per_worker[0].l1_misses, 1u);
  EXPECT_EQ(r.per_worker[0].l1_hits, 1u);
  EXPECT_EQ(r.per_worker[0].mem_stall, 6u);
}

TEST(Memory, WriteInvalidatesPeerCopy) {
  CoherentL1s l1s(2, CacheGeometry{});
  const std::uint64_t line = SimMemory::kBaseAddress / 64;
  EXPECT_EQ(l1s.access(0, line, false), CoherentL1s::Probe::NeedsBus);
  EXPECT_EQ(l1s.access(1, line, true), CoherentL1s::Probe::NeedsBus);
  EXPECT_EQ(l1s.access(0, line, false), CoherentL1s::Probe::NeedsBus);
  EXPECT_EQ(l1s.cache(0).stats.misses, 2u);
  EXPECT_EQ(l1s.cache(0).stats.invalidations, 1u);
  EXPECT_EQ(l1s.coherence_violations(), 0u);
}

TEST(Memory, HostWriteInvalidatesWorkers) {
  CoherentL1s l1s(2, CacheGeometry{});
  const std::uint64_t line = SimMemory::kBaseAddress / 64 + 3;
  l1s.access(0, line, false);
  l1s.access(1, line, false);
  l1s.host_write(line);
  EXPECT_EQ(l1s.access(0, line, false), CoherentL1s::Probe::NeedsBus);
  EXPECT_EQ(l1s.access(1, line, false), CoherentL1s::Probe::NeedsBus);
}

TEST(Memory, MpkiArithmetic) {
  ASSERT_TRUE(mpki(5, 1000).has_value());
  EXPECT_DOUBLE_EQ(*mpki(5, 1000), 5.0);
  EXPECT_DOUBLE_EQ(*mpki(1, 4000), 0.25);
  EXPECT_FALSE(mpki(0, 0).has_value());
}

TEST(Memory, OutOfRegionAccessFaults) {
  SimMemory mem;
  auto a = mem.allocate<std::uint32_t>("a", 10);
  EXPECT_NO_THROW(mem.check(a.base, 40));
  EXPECT_THROW(mem.check(a.base + 64, 4), SimulationFault);
  EXPECT_THROW(mem.check(0x10, 4), SimulationFault);
  const auto mark = mem.mark();
  auto b = mem.allocate<std::uint8_t>("b", 1);
  EXPECT_NO_THROW(mem.check(b.base, 1));
  mem.release(mark);
  EXPECT_THROW(mem.check(b.base, 1), SimulationFault);
}

namespace {

// Fully independent LRU reference per set.
struct RefCache {
  std::uint32_t sets, assoc;
  std::vector<std::list<std::uint64_t>> lru;
  std::uint64_t misses = 0;
  RefCache(std::uint32_t s, std::uint32_t a) : sets(s), assoc(a), lru(s) {}
  void access(std::uint64_t line) {
    auto& l = lru[line % sets];
    auto it = std::find(l.begin(), l.end(), line);
    if (it != l.end()) {
      l.erase(it);
    } else {
      ++misses;
      if (l.size() == assoc) l.pop_back();
    }
    l.push_front(line);
  }
};

std::vector<TraceEntry> random_trace(std::uint64_t seed, int workers, std::size_t n, bool writes) {
  std::mt19937_64 rng(seed);
  const std::uint64_t first = SimMemory::kBaseAddress / 64;
  std::vector<TraceEntry> t;
  for (std::size_t i = 0; i < n; ++i) {
    const auto w = static_cast<std::int32_t>(rng() % static_cast<std::uint64_t>(workers));
    // Skewed footprint so small and large caches differ.
    const std::uint64_t line = first + (rng() % 4 == 0 ? rng() % 2048 : rng() % 96);
    t.push_back(TraceEntry{w, writes && rng() % 5 == 0, line});
    if (writes && rng() % 200 == 0) t.push_back(TraceEntry{TraceEntry::kHostWrite, true, first + rng() % 96});
  }
  return t;
}

}  // namespace

TEST(Memory, SingleWorkerMatchesReferenceLru) {
  const auto trace = random_trace(11, 1, 20000, false);
  for (std::uint64_t size : {1024u, 4096u, 16384u}) {
    const CacheGeometry g = sweep_geometry(size);
    RefCache ref(g.sets(), g.assoc);
    for (const auto& e : trace) ref.access(e.line);
    EXPECT_EQ(replay_trace(trace, 1, g).stats.misses, ref.misses) << size;
  }
}

TEST(Memory, MissesNonIncreasingWithSize) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto trace = random_trace(seed, 4, 30000, true);
    std::uint64_t prev = UINT64_MAX;
    for (std::uint64_t size = 1024; size <= 65536; size *= 2) {
      const auto misses = replay_trace(trace, 4, sweep_geometry(size)).stats.misses;
      EXPECT_LE(misses, prev) << "seed " << seed << " size " << size;
      prev = misses;
    }
  }
}

TEST(Memory, CoherenceSafetyOnRandomTraces) {
  // Shadow memory: every read hit must observe the version of the last write.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto trace = random_trace(seed + 100, 8, 40000, true);
    CoherentL1s l1s(8, sweep_geometry(2048));
    std::map<std::uint64_t, std::uint64_t> shadow;
    std::vector<std::map<std::uint64_t, std::uint64_t>> seen(8);
    std::uint64_t stale = 0;
    for (const auto& e : trace) {
      if (e.worker == TraceEntry::kHostWrite) {
        l1s.host_write(e.line);
        ++shadow[e.line];
        continue;
      }
      const auto p = l1s.access(e.worker, e.line, e.write);
      auto& mine = seen[static_cast<std::size_t>(e.worker)];
      if (e.write) {
        ++shadow[e.line];
      } else if (p == CoherentL1s::Probe::Hit && mine[e.line] != shadow[e.line]) {
        ++stale;
      }
      mine[e.line] = shadow[e.line];
    }
    EXPECT_EQ(stale, 0u);
    EXPECT_EQ(l1s.coherence_violations(), 0u);
  }
}

TEST(Memory, SweepGeometryKeepsFourSets) {
  for (std::uint64_t size = 1024; size <= 65536; size *= 2) {
    const CacheGeometry g = sweep_geometry(size);
    EXPECT_EQ(g.sets(), 4u);
    EXPECT_EQ(static_cast<std::uint64_t>(g.assoc) * 4 * 64, size);
  }
}
