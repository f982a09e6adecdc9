#include <gtest/gtest.h>

#include <algorithm>
#include <memory>
#include <vector>

#include "squire/machine.hpp"

using namespace squire;

namespace {

SquireConfig small_config(int workers) {
  SquireConfig c;
  c.num_workers = workers;
  c.offload_cycles = 0;
  return c;
}

Program halt_now(std::uint64_t) { co_return; }

Program compute_ops(std::uint64_t ops) { co_await act::compute(ops); }

Program inc_g_times(std::uint64_t times) {
  for (std::uint64_t i = 0; i < times; ++i) co_await act::inc_gcounter();
}

Program wait_g(std::uint64_t s) { co_await act::wait_gcounter(s); }

// Each worker waits on its neighbour before incrementing its own counter.
Program circular_wait(std::uint64_t) {
  const auto id = static_cast<int>(co_await act::id_worker());
  const auto n = static_cast<int>(co_await act::num_workers());
  co_await act::wait_lcounter((id + 1) % n, 1);
  co_await act::inc_lcounter(id);
}

Program ordered_chain(std::uint64_t rounds) {
  const auto id = co_await act::id_worker();
  const auto n = co_await act::num_workers();
  for (std::uint64_t r = 0; r < rounds; ++r) {
    const std::uint64_t i = r * n + id;
    co_await act::wait_gcounter(i);
    co_await act::compute(3 + (i * 7) % 5);
    co_await act::inc_gcounter();
  }
}

// Worker 0 commits after `delay` cycles; worker 1 waits for it.
Program commit_then_observe(std::uint64_t delay, std::shared_ptr<std::uint64_t> resumed) {
  if (co_await act::id_worker() == 0) {
    co_await act::compute(delay * 2);
    co_await act::inc_gcounter();
  } else {
    co_await act::wait_gcounter(1);
    *resumed = co_await act::clock();
  }
}

Program two_local_increments(std::shared_ptr<std::uint64_t> resumed) {
  if (co_await act::id_worker() == 0) {
    co_await act::compute(8);
    co_await act::inc_lcounter(1);
    co_await act::compute(8);
    co_await act::inc_lcounter(1);
  } else {
    co_await act::wait_lcounter(1, 2);
    *resumed = co_await act::clock();
  }
}

Program only_worker_one_increments(std::uint64_t) {
  if (co_await act::id_worker() == 1) co_await act::inc_gcounter();
}

// Worker w streams `lines` consecutive lines from its own slice.
Program stream_reads(std::uint64_t base, std::uint64_t lines) {
  const auto id = co_await act::id_worker();
  const std::uint64_t mine = base + id * lines * 64;
  for (std::uint64_t i = 0; i < lines; ++i) co_await act::read(mine + 64 * i, 8);
}

Program host_calls_id() { (void)co_await act::id_worker(); }
Program host_calls_inc() { co_await act::inc_gcounter(); }
Program bad_lcounter(std::uint64_t) { co_await act::inc_lcounter(7); }
Program offload(std::uint32_t entry) { co_await act::start_squire(entry, 0); }
Program offload_twice(std::uint32_t entry) {
  co_await act::start_squire(entry, 0);
  co_await act::start_squire(entry, 0);
}
Program unregistered_read(std::uint64_t) { co_await act::read(0x10, 4); }

Program staged(std::uint32_t a, std::uint32_t b) {
  co_await act::stage(a);
  co_await act::compute(60);
  co_await act::stage(b);
  co_await act::compute(30);
}

}  // namespace

TEST(Machine, AllHaltProgramGoesIdleWithinWCycles) {
  SquireMachine m(small_config(4));
  m.start_squire(m.register_entry("halt", halt_now), 0);
  const RunReport r = m.run_until_idle(1000);
  EXPECT_TRUE(m.idle());
  EXPECT_FALSE(r.deadlock.has_value());
  EXPECT_LE(r.cycles_total, 4u);
}

TEST(Machine, ComputeRetiresAtIssueWidth) {
  SquireMachine m(small_config(1));
  m.start_squire(m.register_entry("c", [](std::uint64_t) { return compute_ops(4); }), 0);
  const RunReport r = m.run_until_idle(1000);
  EXPECT_EQ(r.cycles_total, 2u);
  EXPECT_EQ(r.per_worker[0].compute, 2u);
}

TEST(Machine, HostExecuteDividesByIpcFactor) {
  SquireMachine m(small_config(2));
  EXPECT_EQ(m.host_execute(compute_ops(6)), 1u);
  EXPECT_EQ(m.host_execute(compute_ops(12)), 2u);
}

TEST(Machine, SingleWorkerIncrement) {
  SquireMachine m(small_config(1));
  m.start_squire(m.register_entry("inc", [](std::uint64_t) { return inc_g_times(1); }), 0);
  const RunReport r = m.run_until_idle(100);
  EXPECT_EQ(r.gcounter.final_value, 1u);
  EXPECT_EQ(r.gcounter.final_token, 0);
}

TEST(Machine, ThreeWorkersCommitInTokenOrder) {
  SquireConfig cfg = small_config(3);
  cfg.record_events = true;
  SquireMachine m(cfg);
  m.start_squire(m.register_entry("inc", [](std::uint64_t) { return inc_g_times(1); }), 0);
  const RunReport r = m.run_until_idle(100);
  EXPECT_EQ(r.gcounter.final_value, 3u);
  EXPECT_EQ(r.gcounter.final_token, 0);
  std::vector<std::uint64_t> commits;
  for (const auto& e : m.events()) {
    if (e.kind == SimEvent::Kind::GCommit) commits.push_back(e.value);
  }
  EXPECT_EQ(commits, (std::vector<std::uint64_t>{1, 2, 3}));
}

TEST(Machine, SatisfiedWaitCostsOneCycle) {
  SquireMachine m(small_config(1));
  m.start_squire(m.register_entry("w", [](std::uint64_t) { return wait_g(0); }), 0);
  const RunReport r = m.run_until_idle(100);
  EXPECT_EQ(r.cycles_total, 1u);
  EXPECT_EQ(r.per_worker[0].counter, 1u);
  EXPECT_EQ(r.per_worker[0].wait, 0u);
}

TEST(Machine, WaiterResumesTheCycleAfterCommit) {
  // id_worker at 0, worker 0 computes 1..10 and commits at 11; worker 1 resumes at 12.
  SquireMachine m(small_config(2));
  auto resumed = std::make_shared<std::uint64_t>(0);
  m.start_squire(m.register_entry("pair", [resumed](std::uint64_t) { return commit_then_observe(10, resumed); }), 0);
  const RunReport r = m.run_until_idle(100);
  EXPECT_EQ(*resumed, 12u);
  EXPECT_EQ(r.per_worker[1].counter + r.per_worker[1].wait, 12u);
}

TEST(Machine, LocalWaitResumesAfterSecondIncrement) {
  // After id_worker at 0, increments land at cycles 5 and 10.
  SquireMachine m(small_config(2));
  auto resumed = std::make_shared<std::uint64_t>(0);
  m.start_squire(m.register_entry("lw", [resumed](std::uint64_t) { return two_local_increments(resumed); }), 0);
  const RunReport r = m.run_until_idle(100);
  EXPECT_EQ(*resumed, 11u);
  EXPECT_EQ(r.lcounters[1], 2u);
}

TEST(Machine, CircularLocalWaitIsReportedAsDeadlock) {
  SquireMachine m(small_config(2));
  m.start_squire(m.register_entry("circ", circular_wait), 0);
  const RunReport r = m.run_until_idle(10'000);
  ASSERT_TRUE(r.deadlock.has_value());
  ASSERT_EQ(r.deadlock->blocked.size(), 2u);
  EXPECT_NE(r.deadlock->blocked[0].find("worker 0 blocked on wait_lcounter(1, 1)"), std::string::npos);
  EXPECT_NE(r.deadlock->blocked[1].find("worker 1 blocked on wait_lcounter(0, 1)"), std::string::npos);
  EXPECT_LT(r.deadlock->cycle, 10'000u);
}

TEST(Machine, StartWhileActiveFaults) {
  SquireMachine m(small_config(2));
  const auto entry = m.register_entry("circ", circular_wait);
  m.start_squire(entry, 0);
  (void)m.run_until_idle(100);
  EXPECT_THROW(m.start_squire(entry, 0), SimulationFault);
}

TEST(Machine, HostMayNotUseWorkerOperations) {
  SquireMachine m(small_config(2));
  EXPECT_THROW(m.run(host_calls_id()), SimulationFault);
  SquireMachine m2(small_config(2));
  EXPECT_THROW(m2.run(host_calls_inc()), SimulationFault);
}

TEST(Machine, LocalCounterIndexOutOfRangeFaults) {
  SquireMachine m(small_config(2));
  m.start_squire(m.register_entry("bad", bad_lcounter), 0);
  EXPECT_THROW(m.run_until_idle(100), SimulationFault);
}

TEST(Machine, SecondOffloadWhileRunningFaults) {
  SquireMachine m(small_config(2));
  const auto spin = m.register_entry("spin", [](std::uint64_t) { return compute_ops(100); });
  EXPECT_THROW(m.run(offload_twice(spin)), SimulationFault);
}

TEST(Machine, UnregisteredAddressFaultNamesRegions) {
  SquireMachine m(small_config(2));
  const auto oob = m.register_entry("oob", unregistered_read);
  try {
    (void)m.run(offload(oob));
    FAIL() << "expected fault";
  } catch (const SimulationFault& e) {
    EXPECT_NE(std::string(e.what()).find("outside registered regions"), std::string::npos);
  }
}

TEST(Machine, CycleLimitRaisesTimeoutWithDump) {
  SquireMachine m(small_config(1));
  m.start_squire(m.register_entry("long", [](std::uint64_t) { return compute_ops(1000); }), 0);
  try {
    (void)m.run_until_idle(10);
    FAIL() << "expected timeout";
  } catch (const SimulationFault& e) {
    EXPECT_NE(std::string(e.what()).find("cycle limit"), std::string::npos);
  }
}

TEST(Machine, HaltingWithPendingIncrementsLeavesThemVisible) {
  SquireMachine m(small_config(2));
  m.start_squire(m.register_entry("stall", only_worker_one_increments), 0);
  const RunReport r = m.run_until_idle(100);
  EXPECT_FALSE(r.deadlock.has_value());
  EXPECT_EQ(r.gcounter.final_value, 0u);
  EXPECT_EQ(r.gcounter.pending_total, 1u);
  EXPECT_EQ(m.gcounter().pending(1), 1u);
}

TEST(Machine, ConsecutiveStartsGetFreshCounters) {
  auto entry_fn = [](std::uint64_t) { return inc_g_times(2); };
  SquireMachine m(small_config(3));
  const auto entry = m.register_entry("inc2", entry_fn);
  m.start_squire(entry, 0);
  const RunReport first = m.run_until_idle(1000);
  m.start_squire(entry, 0);
  const RunReport second = m.run_until_idle(1000);
  SquireMachine fresh(small_config(3));
  fresh.start_squire(fresh.register_entry("inc2", entry_fn), 0);
  const RunReport ref = fresh.run_until_idle(1000);
  EXPECT_EQ(first.gcounter.final_value, 6u);
  EXPECT_EQ(second.gcounter.final_value, ref.gcounter.final_value);
  EXPECT_EQ(second.gcounter.final_token, ref.gcounter.final_token);
  EXPECT_EQ(second.cycles_total, ref.cycles_total);
}

TEST(Machine, TwoPendingMissesAreGrantedOnConsecutiveCycles) {
  SquireMachine m(small_config(2));
  auto data = m.memory().allocate<std::uint64_t>("data", 64);
  const std::uint64_t base = data.base;
  m.start_squire(m.register_entry("miss", [base](std::uint64_t) { return stream_reads(base, 1); }), 0);
  const RunReport r = m.run_until_idle(100);
  // id_worker at 0; both issue at 1, eligible at 2: grants at 2 and 3, data at 6 and 7.
  EXPECT_EQ(r.arbiter_grants, 2u);
  EXPECT_EQ(r.cycles_total, 7u);
  std::vector<std::uint64_t> stalls{r.per_worker[0].mem_stall, r.per_worker[1].mem_stall};
  std::sort(stalls.begin(), stalls.end());
  EXPECT_EQ(stalls, (std::vector<std::uint64_t>{5, 6}));
}

TEST(Machine, ArbiterIsFairUnderSaturation) {
  constexpr int kWorkers = 8;
  constexpr std::uint64_t kLines = 64;
  SquireMachine m(small_config(kWorkers));
  auto data = m.memory().allocate<std::uint8_t>("data", 64 * kLines * kWorkers);
  const std::uint64_t base = data.base;
  m.start_squire(m.register_entry("stream", [base](std::uint64_t) { return stream_reads(base, kLines); }), 0);
  const RunReport r = m.run_until_idle();
  for (const auto& w : r.per_worker) EXPECT_EQ(w.l2_accesses, kLines);
  EXPECT_EQ(r.arbiter_grants, kLines * kWorkers);
  EXPECT_LE(r.arbiter_grants, r.cycles_total);
  // Round robin: per-worker finish times differ by less than one rotation plus latency.
  std::uint64_t lo = UINT64_MAX, hi = 0;
  for (const auto& w : r.per_worker) {
    lo = std::min(lo, w.active);
    hi = std::max(hi, w.active);
  }
  EXPECT_LE(hi - lo, static_cast<std::uint64_t>(kWorkers));
}

TEST(Machine, CycleAccountingCrossFoots) {
  for (auto backend : {SyncBackend::HardwareCounters, SyncBackend::SoftwareLock}) {
    SquireConfig cfg = small_config(4);
    cfg.sync_backend = backend;
    SquireMachine m(cfg);
    m.start_squire(m.register_entry("chain", [](std::uint64_t) { return ordered_chain(25); }), 0);
    const RunReport r = m.run_until_idle();
    EXPECT_EQ(r.gcounter.final_value, 100u);
    for (const auto& w : r.per_worker) EXPECT_EQ(w.active, w.compute + w.mem_stall + w.counter + w.wait);
  }
}

TEST(Machine, DeterministicForSameSeed) {
  auto run_once = [](std::uint64_t seed) {
    SquireConfig cfg = small_config(4);
    cfg.scheduler_seed = seed;
    cfg.schedule_jitter = 3;
    SquireMachine m(cfg);
    auto data = m.memory().allocate<std::uint8_t>("data", 64 * 32 * 4);
    const std::uint64_t base = data.base;
    m.start_squire(m.register_entry("stream", [base](std::uint64_t) { return stream_reads(base, 32); }), 0);
    const RunReport r = m.run_until_idle();
    std::vector<std::uint64_t> v{r.cycles_total};
    for (const auto& w : r.per_worker) v.push_back(w.mem_stall);
    return v;
  };
  EXPECT_EQ(run_once(7), run_once(7));
}

TEST(Machine, StageMarksSumToTotal) {
  SquireMachine m(small_config(2));
  const auto a = m.define_stage("a");
  const auto b = m.define_stage("b");
  const auto r = m.run(staged(a, b));
  EXPECT_EQ(r.stage_cycles("a") + r.stage_cycles("b"), r.cycles_total);
  EXPECT_EQ(r.stage_cycles("a"), 10u);
  EXPECT_EQ(r.stage_cycles("b"), 5u);
}

TEST(Machine, SoftwareLockChargesAcquireCost) {
  SquireConfig cfg = small_config(1);
  cfg.sync_backend = SyncBackend::SoftwareLock;
  cfg.lock_acquire_cycles = 30;
  SquireMachine m(cfg);
  m.start_squire(m.register_entry("inc", [](std::uint64_t) { return inc_g_times(1); }), 0);
  const RunReport r = m.run_until_idle();
  EXPECT_EQ(r.cycles_total, 30u);
  EXPECT_EQ(r.per_worker[0].counter, 30u);
  EXPECT_EQ(r.gcounter.final_value, 1u);
}

TEST(Machine, SoftwareLockGivesSameFunctionalResult) {
  auto final_state = [](SyncBackend b) {
    SquireConfig cfg = small_config(4);
    cfg.sync_backend = b;
    SquireMachine m(cfg);
    m.start_squire(m.register_entry("chain", [](std::uint64_t) { return ordered_chain(10); }), 0);
    const RunReport r = m.run_until_idle();
    return std::pair{r.gcounter.final_value, r.cycles_total};
  };
  const auto hw = final_state(SyncBackend::HardwareCounters);
  const auto sw = final_state(SyncBackend::SoftwareLock);
  EXPECT_EQ(hw.first, sw.first);
  EXPECT_GT(sw.second, hw.second);
}
