#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "squire/config.hpp"
#include "squire/memory.hpp"
#include "squire/program.hpp"
#include "squire/sync.hpp"

namespace squire {

/// Cycle accounting for one context. active = compute + mem_stall +
/// counter + wait holds exactly.
struct ContextStats {
  std::uint64_t compute = 0;
  std::uint64_t mem_stall = 0;
  std::uint64_t counter = 0;
  std::uint64_t wait = 0;
  std::uint64_t active = 0;
  std::uint64_t l1_hits = 0;
  std::uint64_t l1_misses = 0;
  std::uint64_t l2_accesses = 0;
  std::uint64_t instructions = 0;
  std::uint64_t activations = 0;
};

struct DeadlockInfo {
  std::uint64_t cycle = 0;
  std::vector<std::string> blocked;
  std::string pending;
};

struct GlobalCounterReport {
  std::uint64_t final_value = 0;
  int final_token = 0;
  std::uint64_t max_pending = 0;
  std::uint64_t pending_total = 0;
};

struct RunReport {
  SquireConfig config;
  std::uint64_t cycles_total = 0;
  std::vector<std::pair<std::string, std::uint64_t>> cycles_per_stage;
  std::vector<ContextStats> per_worker;
  ContextStats host;
  GlobalCounterReport gcounter;
  std::vector<std::uint64_t> lcounters;
  std::uint64_t arbiter_grants = 0;
  std::uint64_t coherence_violations = 0;
  std::uint64_t offloads = 0;
  std::optional<DeadlockInfo> deadlock;

  std::uint64_t worker_active_cycles() const;
  std::uint64_t worker_instructions() const;
  std::uint64_t worker_l1_misses() const;
  std::optional<double> worker_mpki() const;
  /// Average L2 grants per cycle over the run.
  double l2_access_rate() const;
  std::uint64_t stage_cycles(const std::string& name) const;
};

/// Entry in the optional event log (config.record_events).
struct SimEvent {
  enum class Kind : std::uint8_t { GCommit, LIncrement, Read, Write };
  std::uint64_t cycle;
  Kind kind;
  std::int32_t worker;
  std::uint64_t value;  // committed value, counter index or address
  std::uint64_t bytes;
};

/// The Squire engine attached to one host core: W workers, control
/// registers, the synchronization module, the L2 arbiter, the worker L1Ds
/// and the simulated memory. Single-threaded and deterministic: identical
/// configuration, inputs and scheduler seed give bit-identical reports.
class SquireMachine {
 public:
  static constexpr std::uint64_t kDefaultCycleLimit = 50'000'000'000ULL;

  explicit SquireMachine(SquireConfig config);
  SquireMachine(const SquireMachine&) = delete;
  SquireMachine& operator=(const SquireMachine&) = delete;

  const SquireConfig& config() const { return config_; }
  int num_workers() const { return config_.num_workers; }
  SimMemory& memory() { return memory_; }
  const GlobalCounter& gcounter() const { return gcounter_; }
  const LocalCounters& lcounters() const { return lcounters_; }
  const CoherentL1s& l1s() const { return l1s_; }
  std::uint64_t now() const { return now_; }

  std::uint32_t register_entry(std::string name, WorkerEntry entry);
  std::optional<std::uint32_t> find_entry(const std::string& name) const;
  std::uint32_t define_stage(const std::string& name);

  /// Runs `host` on the host context (workers start halted) until every
  /// context is halted. Clock and statistics restart at zero; cache
  /// contents persist across runs.
  RunReport run(Program host, std::uint64_t cycle_limit = kDefaultCycleLimit);

  /// Baseline: the sequential program alone on the host context.
  std::uint64_t host_execute(Program program);

  /// Host-side offload used directly by tests: writes the control
  /// registers, resets the counters and makes every worker runnable.
  void start_squire(std::uint32_t entry, std::uint64_t args);
  /// Advances the clock by one cycle.
  void step_cycle();
  /// Runs without a host program until idle, deadlock or the limit.
  RunReport run_until_idle(std::uint64_t cycle_limit = kDefaultCycleLimit);
  bool idle() const;

  /// Frees simulated memory allocated after `mark` and invalidates any L1
  /// copy of the freed lines.
  void release(const SimMemory::Mark& mark);

  const std::vector<SimEvent>& events() const { return events_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  void clear_trace() { trace_.clear(); }

  struct ControlRegisters {
    std::uint32_t entry = 0;
    std::uint64_t args = 0;
    bool running = false;
  };
  const ControlRegisters& control() const { return control_; }

 private:
  enum class State : std::uint8_t { Halted, Scheduled, Granting, Blocked };

  struct Context {
    int id = 0;
    bool host = false;
    State state = State::Halted;
    Program program;
    std::uint64_t result = 0;
    double frac = 0.0;  // host clock (fractional cycles)
    std::uint64_t activated_at = 0;
    // multi-line memory access in flight
    bool mem_active = false;
    bool mem_write = false;
    std::uint64_t mem_line = 0;
    std::uint64_t mem_last = 0;
    std::uint64_t mem_start = 0;
    // counter operation held until its lock slot (software-lock backend)
    bool deferred = false;
    Action pending_op{};
    // blocked wait
    Action wait_op{};
    std::uint64_t blocked_since = 0;
    ContextStats stats;
  };

  struct Event {
    std::uint64_t time;
    std::uint32_t rank;
    std::int32_t ctx;  // -1 = arbiter
    bool operator>(const Event& o) const { return time != o.time ? time > o.time : rank > o.rank; }
  };

  void reset_run();
  void schedule(Context& c, std::uint64_t time);
  void schedule_arbiter(std::uint64_t earliest);
  void process_until(std::uint64_t limit, bool single_cycle);
  void dispatch(Context& c);
  void execute(Context& c, const Action& a);
  void execute_counter_op(Context& c, const Action& a);
  void continue_memory(Context& c);
  void request_bus(Context& c, std::uint64_t at);
  void arbitrate();
  void commit_global(std::uint64_t committed);
  void wake_local(int index);
  void wake(Context& c);
  void halt(Context& c);
  std::uint64_t& lock_for(const Action& a);
  bool satisfied(const Action& wait) const;
  std::string describe_wait(const Context& c) const;
  DeadlockInfo deadlock_info() const;
  RunReport make_report() const;
  [[noreturn]] void fault(const Context& c, const std::string& what) const;
  Context& host() { return contexts_.back(); }

  SquireConfig config_;
  SimMemory memory_;
  CoherentL1s l1s_;
  GlobalCounter gcounter_;
  LocalCounters lcounters_;
  ControlRegisters control_;
  std::vector<std::pair<std::string, WorkerEntry>> entries_;
  std::vector<std::string> stage_names_;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> stage_marks_;

  std::vector<Context> contexts_;  // workers 0..W-1, then host
  std::vector<std::uint32_t> rank_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::uint64_t now_ = 0;
  std::uint64_t last_event_ = 0;
  std::mt19937_64 rng_;

  // arbiter
  std::uint64_t requesters_ = 0;  // bitmask of workers waiting for a grant
  std::vector<std::uint64_t> eligible_at_;
  int arbiter_pointer_ = 0;
  bool arbiter_scheduled_ = false;
  std::uint64_t arbiter_time_ = 0;
  std::uint64_t last_grant_ = 0;
  bool granted_once_ = false;
  std::uint64_t grants_ = 0;

  // waiters
  using Waiter = std::pair<std::uint64_t, int>;  // threshold, context index
  std::priority_queue<Waiter, std::vector<Waiter>, std::greater<>> gwaiters_;
  std::vector<std::vector<Waiter>> lwaiters_;

  // software-lock backend
  std::uint64_t glock_free_ = 0;
  std::vector<std::uint64_t> llock_free_;

  std::uint64_t offloads_ = 0;
  std::vector<SimEvent> events_;
  std::vector<TraceEntry> trace_;
};

}  // namespace squire
