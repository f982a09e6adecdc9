#include "squire/machine.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

namespace squire {

namespace {
constexpr std::uint32_t kArbiterRank = 0;

std::uint64_t ceil_cycles(double t) { return static_cast<std::uint64_t>(std::ceil(t - 1e-9)); }
}  // namespace

// --------------------------------------------------------------- RunReport

std::uint64_t RunReport::worker_active_cycles() const {
  std::uint64_t total = 0;
  for (const auto& w : per_worker) total += w.active;
  return total;
}

std::uint64_t RunReport::worker_instructions() const {
  std::uint64_t total = 0;
  for (const auto& w : per_worker) total += w.instructions;
  return total;
}

std::uint64_t RunReport::worker_l1_misses() const {
  std::uint64_t total = 0;
  for (const auto& w : per_worker) total += w.l1_misses;
  return total;
}

std::optional<double> RunReport::worker_mpki() const { return mpki(worker_l1_misses(), worker_instructions()); }

double RunReport::l2_access_rate() const {
  return cycles_total == 0 ? 0.0 : static_cast<double>(arbiter_grants) / static_cast<double>(cycles_total);
}

std::uint64_t RunReport::stage_cycles(const std::string& name) const {
  for (const auto& [stage, cycles] : cycles_per_stage) {
    if (stage == name) return cycles;
  }
  return 0;
}

// ----------------------------------------------------------------- Machine

SquireMachine::SquireMachine(SquireConfig config)
    : config_((config.validate(), config)),
      l1s_(config_.num_workers, config_.l1d),
      gcounter_(config_.num_workers),
      lcounters_(config_.num_workers),
      eligible_at_(static_cast<std::size_t>(config_.num_workers), 0),
      lwaiters_(static_cast<std::size_t>(config_.num_workers)),
      llock_free_(static_cast<std::size_t>(config_.num_workers), 0) {
  const int w = config_.num_workers;
  contexts_.resize(static_cast<std::size_t>(w) + 1);
  for (int i = 0; i < w; ++i) contexts_[static_cast<std::size_t>(i)].id = i;
  contexts_.back().id = -1;
  contexts_.back().host = true;
  rank_.resize(contexts_.size());
  gcounter_.set_logging(config_.record_events);
  reset_run();
}

std::uint32_t SquireMachine::register_entry(std::string name, WorkerEntry entry) {
  entries_.emplace_back(std::move(name), std::move(entry));
  return static_cast<std::uint32_t>(entries_.size() - 1);
}

std::optional<std::uint32_t> SquireMachine::find_entry(const std::string& name) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first == name) return static_cast<std::uint32_t>(i);
  }
  return std::nullopt;
}

std::uint32_t SquireMachine::define_stage(const std::string& name) {
  for (std::size_t i = 0; i < stage_names_.size(); ++i) {
    if (stage_names_[i] == name) return static_cast<std::uint32_t>(i);
  }
  stage_names_.push_back(name);
  return static_cast<std::uint32_t>(stage_names_.size() - 1);
}

void SquireMachine::reset_run() {
  now_ = 0;
  last_event_ = 0;
  queue_ = {};
  rng_.seed(config_.scheduler_seed);

  // Seeded intra-cycle processing order: arbiter first, workers in a
  // shuffled order, host last.
  const int w = config_.num_workers;
  std::vector<std::uint32_t> order(static_cast<std::size_t>(w));
  for (int i = 0; i < w; ++i) order[static_cast<std::size_t>(i)] = static_cast<std::uint32_t>(i + 1);
  for (int i = w - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng_() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  for (int i = 0; i < w; ++i) rank_[static_cast<std::size_t>(i)] = order[static_cast<std::size_t>(i)];
  rank_.back() = static_cast<std::uint32_t>(w + 1);
  arbiter_pointer_ = static_cast<int>(rng_() % static_cast<std::uint64_t>(w));

  for (auto& c : contexts_) {
    c.state = State::Halted;
    c.program = Program{};
    c.result = 0;
    c.frac = 0.0;
    c.mem_active = false;
    c.deferred = false;
    c.stats = ContextStats{};
  }
  gcounter_.reset();
  lcounters_.reset();
  control_ = ControlRegisters{};
  requesters_ = 0;
  arbiter_scheduled_ = false;
  granted_once_ = false;
  last_grant_ = 0;
  grants_ = 0;
  gwaiters_ = {};
  for (auto& lw : lwaiters_) lw.clear();
  glock_free_ = 0;
  std::fill(llock_free_.begin(), llock_free_.end(), 0);
  offloads_ = 0;
  stage_marks_.clear();
  events_.clear();
}

void SquireMachine::release(const SimMemory::Mark& mark) {
  const std::uint64_t first_line = mark.top / config_.l1d.line_bytes;
  memory_.release(mark);
  l1s_.invalidate_from(first_line);
  if (config_.record_trace) trace_.push_back({TraceEntry::kRelease, false, first_line});
}

bool SquireMachine::idle() const {
  return std::all_of(contexts_.begin(), contexts_.end(), [](const Context& c) { return c.state == State::Halted; });
}

void SquireMachine::schedule(Context& c, std::uint64_t time) {
  c.state = State::Scheduled;
  const std::size_t idx = c.host ? contexts_.size() - 1 : static_cast<std::size_t>(c.id);
  queue_.push(Event{time, rank_[idx], static_cast<std::int32_t>(idx)});
}

void SquireMachine::schedule_arbiter(std::uint64_t earliest) {
  if (granted_once_ && earliest <= last_grant_) earliest = last_grant_ + 1;
  // A queued arbiter event at or before `earliest` reschedules itself when
  // nothing is grantable yet.
  if (arbiter_scheduled_ && arbiter_time_ <= earliest) return;
  arbiter_scheduled_ = true;
  arbiter_time_ = earliest;
  queue_.push(Event{earliest, kArbiterRank, -1});
}

// --------------------------------------------------------------- offload

void SquireMachine::start_squire(std::uint32_t entry, std::uint64_t args) {
  if (!idle()) throw SimulationFault("start_squire called while workers are active");
  reset_run();
  control_ = ControlRegisters{entry, args, false};
  if (entry >= entries_.size()) throw SimulationFault("start_squire with unknown entry " + std::to_string(entry));
  ++offloads_;
  control_.running = true;
  for (int w = 0; w < config_.num_workers; ++w) {
    Context& c = contexts_[static_cast<std::size_t>(w)];
    c.program = entries_[entry].second(args);
    c.result = 0;
    c.activated_at = now_;
    ++c.stats.activations;
    schedule(c, now_);
  }
}

RunReport SquireMachine::run(Program host_program, std::uint64_t cycle_limit) {
  reset_run();
  Context& h = host();
  h.program = std::move(host_program);
  h.activated_at = 0;
  ++h.stats.activations;
  schedule(h, 0);
  return run_until_idle(cycle_limit);
}

std::uint64_t SquireMachine::host_execute(Program program) { return run(std::move(program)).cycles_total; }

void SquireMachine::step_cycle() {
  while (!queue_.empty() && queue_.top().time <= now_) {
    const Event e = queue_.top();
    queue_.pop();
    last_event_ = now_;
    if (e.ctx < 0) {
      if (!arbiter_scheduled_ || e.time != arbiter_time_) continue;
      arbiter_scheduled_ = false;
      arbitrate();
    } else {
      dispatch(contexts_[static_cast<std::size_t>(e.ctx)]);
    }
  }
  ++now_;
}

void SquireMachine::process_until(std::uint64_t limit, bool) {
  while (!queue_.empty()) {
    const Event e = queue_.top();
    if (e.time > limit) {
      now_ = limit;
      const DeadlockInfo info = deadlock_info();
      std::ostringstream os;
      os << "cycle limit " << limit << " exceeded; blocked state:";
      for (const auto& b : info.blocked) os << " [" << b << "]";
      os << " " << info.pending;
      throw SimulationFault(os.str());
    }
    queue_.pop();
    now_ = e.time;
    last_event_ = now_;
    if (e.ctx < 0) {
      if (!arbiter_scheduled_ || e.time != arbiter_time_) continue;
      arbiter_scheduled_ = false;
      arbitrate();
    } else {
      dispatch(contexts_[static_cast<std::size_t>(e.ctx)]);
    }
  }
}

RunReport SquireMachine::run_until_idle(std::uint64_t cycle_limit) {
  process_until(cycle_limit, false);
  RunReport report = make_report();
  if (!idle()) report.deadlock = deadlock_info();
  return report;
}

// -------------------------------------------------------------- dispatch

void SquireMachine::fault(const Context& c, const std::string& what) const {
  std::ostringstream os;
  os << (c.host ? std::string("host") : "worker " + std::to_string(c.id)) << " at cycle " << now_ << ": " << what;
  throw SimulationFault(os.str());
}

void SquireMachine::dispatch(Context& c) {
  if (c.deferred) {
    c.deferred = false;
    execute_counter_op(c, c.pending_op);
    return;
  }
  if (c.mem_active) {
    continue_memory(c);
    return;
  }
  Action a;
  try {
    a = c.program.next(c.result);
  } catch (const SimulationFault&) {
    throw;
  } catch (const std::exception& e) {
    fault(c, e.what());
  }
  execute(c, a);
}

void SquireMachine::execute(Context& c, const Action& a) {
  const auto host_at = [&](double t) {
    c.frac = t;
    return ceil_cycles(t);
  };

  switch (a.kind) {
    case ActionKind::Compute: {
      if (a.a == 0) fault(c, "compute action with zero ops");
      c.stats.instructions += a.a;
      if (c.host) {
        const std::uint64_t t =
            host_at(c.frac + static_cast<double>(a.a) / (config_.worker_issue_width * config_.host_ipc_factor));
        c.stats.compute += t - now_;
        schedule(c, t);
      } else {
        const std::uint64_t cycles = (a.a + static_cast<std::uint64_t>(config_.worker_issue_width) - 1) /
                                     static_cast<std::uint64_t>(config_.worker_issue_width);
        c.stats.compute += cycles;
        schedule(c, now_ + cycles);
      }
      return;
    }
    case ActionKind::MemRead:
    case ActionKind::MemWrite: {
      const bool write = a.kind == ActionKind::MemWrite;
      try {
        memory_.check(a.a, a.b);
      } catch (const SimulationFault& e) {
        fault(c, e.what());
      }
      const std::uint64_t first = a.a / config_.l1d.line_bytes;
      const std::uint64_t last = (a.a + a.b - 1) / config_.l1d.line_bytes;
      ++c.stats.instructions;
      if (c.host) {
        if (write) {
          for (std::uint64_t line = first; line <= last; ++line) {
            l1s_.host_write(line);
            if (config_.record_trace) trace_.push_back({TraceEntry::kHostWrite, true, line});
          }
        }
        const std::uint64_t t =
            host_at(c.frac + static_cast<double>(last - first + 1) / config_.host_ipc_factor);
        c.stats.mem_stall += t - now_;
        schedule(c, t);
        return;
      }
      if (config_.record_events) {
        events_.push_back({now_, write ? SimEvent::Kind::Write : SimEvent::Kind::Read, c.id, a.a, a.b});
      }
      c.mem_active = true;
      c.mem_write = write;
      c.mem_line = first;
      c.mem_last = last;
      c.mem_start = now_;
      continue_memory(c);
      return;
    }
    case ActionKind::IncG:
    case ActionKind::IncL:
    case ActionKind::WaitG:
    case ActionKind::WaitL: {
      if (c.host && (a.kind == ActionKind::IncG || a.kind == ActionKind::IncL)) {
        fault(c, std::string(to_string(a.kind)) + " may only be called by workers");
      }
      if ((a.kind == ActionKind::IncL || a.kind == ActionKind::WaitL) &&
          a.a >= static_cast<std::uint64_t>(config_.num_workers)) {
        fault(c, std::string(to_string(a.kind)) + " index " + std::to_string(a.a) + " out of range [0, " +
                     std::to_string(config_.num_workers) + ")");
      }
      ++c.stats.instructions;
      if (c.host) c.frac = static_cast<double>(now_);
      if (config_.sync_backend == SyncBackend::SoftwareLock) {
        std::uint64_t& lock = lock_for(a);
        const std::uint64_t start = std::max(now_, lock);
        lock = start + config_.lock_acquire_cycles;
        const std::uint64_t at = start + config_.lock_acquire_cycles - 1;
        c.stats.counter += at - now_;
        c.pending_op = a;
        c.deferred = true;
        if (c.host) c.frac = static_cast<double>(at);
        schedule(c, at);
        return;
      }
      execute_counter_op(c, a);
      return;
    }
    case ActionKind::IdWorker:
    case ActionKind::NumWorkers: {
      if (c.host && a.kind == ActionKind::IdWorker) fault(c, "id_worker called from the host");
      ++c.stats.instructions;
      c.result = a.kind == ActionKind::IdWorker ? static_cast<std::uint64_t>(c.id)
                                                : static_cast<std::uint64_t>(config_.num_workers);
      c.stats.counter += SquireConfig::counter_access_cycles;
      if (c.host) c.frac = static_cast<double>(now_ + SquireConfig::counter_access_cycles);
      schedule(c, now_ + SquireConfig::counter_access_cycles);
      return;
    }
    case ActionKind::StartSquire: {
      if (!c.host) fault(c, "start_squire may only be called by the host");
      for (int w = 0; w < config_.num_workers; ++w) {
        if (contexts_[static_cast<std::size_t>(w)].state != State::Halted) {
          fault(c, "start_squire while worker " + std::to_string(w) + " is active");
        }
      }
      if (a.a >= entries_.size()) fault(c, "start_squire with unknown entry " + std::to_string(a.a));
      ++c.stats.instructions;
      gcounter_.reset();
      lcounters_.reset();
      control_ = ControlRegisters{static_cast<std::uint32_t>(a.a), a.b, true};
      ++offloads_;
      const std::uint64_t at = now_ + config_.offload_cycles;
      for (int w = 0; w < config_.num_workers; ++w) {
        Context& wc = contexts_[static_cast<std::size_t>(w)];
        try {
          wc.program = entries_[a.a].second(a.b);
        } catch (const std::exception& e) {
          fault(wc, e.what());
        }
        wc.result = 0;
        wc.activated_at = at;
        ++wc.stats.activations;
        schedule(wc, at);
      }
      c.stats.counter += 1;
      c.frac = static_cast<double>(now_ + 1);
      schedule(c, now_ + 1);
      return;
    }
    case ActionKind::StageMark: {
      if (!c.host) fault(c, "stage marks are host-only");
      stage_marks_.emplace_back(static_cast<std::uint32_t>(a.a), now_);
      schedule(c, now_);
      return;
    }
    case ActionKind::ReadClock: {
      c.result = now_;
      schedule(c, now_);
      return;
    }
    case ActionKind::Halt:
      halt(c);
      return;
  }
}

void SquireMachine::execute_counter_op(Context& c, const Action& a) {
  constexpr std::uint64_t kCost = SquireConfig::counter_access_cycles;
  c.stats.counter += kCost;
  switch (a.kind) {
    case ActionKind::IncG: {
      const std::uint64_t committed = gcounter_.increment(c.id);
      if (config_.pending_queue_limit != 0 &&
          gcounter_.pending(c.id) > static_cast<std::uint64_t>(config_.pending_queue_limit)) {
        fault(c, "pending increment queue overflow (limit " + std::to_string(config_.pending_queue_limit) + ")");
      }
      if (committed > 0) commit_global(committed);
      break;
    }
    case ActionKind::IncL: {
      const int index = static_cast<int>(a.a);
      lcounters_.increment(index);
      if (config_.record_events) {
        events_.push_back({now_, SimEvent::Kind::LIncrement, c.id, a.a, lcounters_.value(index)});
      }
      wake_local(index);
      break;
    }
    case ActionKind::WaitG:
    case ActionKind::WaitL: {
      if (!satisfied(a)) {
        c.state = State::Blocked;
        c.wait_op = a;
        c.blocked_since = now_ + kCost;
        const int idx = c.host ? static_cast<int>(contexts_.size() - 1) : c.id;
        if (a.kind == ActionKind::WaitG) {
          gwaiters_.push({a.a, idx});
        } else {
          lwaiters_[static_cast<std::size_t>(a.a)].push_back({a.b, idx});
        }
        return;
      }
      break;
    }
    default:
      fault(c, "internal: not a counter operation");
  }
  if (c.host) c.frac = static_cast<double>(now_ + kCost);
  schedule(c, now_ + kCost);
}

bool SquireMachine::satisfied(const Action& wait) const {
  if (wait.kind == ActionKind::WaitG) return gcounter_.value() >= wait.a;
  return lcounters_.value(static_cast<int>(wait.a)) >= wait.b;
}

std::uint64_t& SquireMachine::lock_for(const Action& a) {
  if (a.kind == ActionKind::IncG || a.kind == ActionKind::WaitG) return glock_free_;
  return llock_free_[static_cast<std::size_t>(a.a)];
}

void SquireMachine::commit_global(std::uint64_t committed) {
  if (config_.record_events) {
    const std::uint64_t value = gcounter_.value();
    for (std::uint64_t v = value - committed + 1; v <= value; ++v) {
      events_.push_back({now_, SimEvent::Kind::GCommit, -1, v, 0});
    }
  }
  while (!gwaiters_.empty() && gwaiters_.top().first <= gcounter_.value()) {
    const int idx = gwaiters_.top().second;
    gwaiters_.pop();
    wake(contexts_[static_cast<std::size_t>(idx)]);
  }
}

void SquireMachine::wake_local(int index) {
  auto& list = lwaiters_[static_cast<std::size_t>(index)];
  const std::uint64_t value = lcounters_.value(index);
  for (std::size_t i = 0; i < list.size();) {
    if (list[i].first <= value) {
      const int idx = list[i].second;
      list[i] = list.back();
      list.pop_back();
      wake(contexts_[static_cast<std::size_t>(idx)]);
    } else {
      ++i;
    }
  }
}

void SquireMachine::wake(Context& c) {
  const std::uint64_t resume = now_ + 1;
  c.stats.wait += resume - c.blocked_since;
  std::uint64_t ready = resume;
  if (config_.sync_backend == SyncBackend::SoftwareLock) {
    // Re-acquire the lock to observe the new value.
    std::uint64_t& lock = lock_for(c.wait_op);
    const std::uint64_t start = std::max(resume, lock);
    lock = start + config_.lock_acquire_cycles;
    ready = lock;
    c.stats.counter += ready - resume;
  }
  if (c.host) c.frac = static_cast<double>(ready);
  schedule(c, ready);
}

void SquireMachine::halt(Context& c) {
  c.state = State::Halted;
  c.stats.active += now_ - c.activated_at;
  c.program = Program{};
  if (!c.host && control_.running) {
    bool all = true;
    for (int w = 0; w < config_.num_workers && all; ++w) {
      all = contexts_[static_cast<std::size_t>(w)].state == State::Halted;
    }
    if (all) control_.running = false;
  }
}

// ---------------------------------------------------------------- memory

void SquireMachine::continue_memory(Context& c) {
  std::uint64_t t = now_;
  while (c.mem_line <= c.mem_last) {
    const std::uint64_t line = c.mem_line;
    if (config_.record_trace) trace_.push_back({c.id, c.mem_write, line});
    if (l1s_.probe(c.id, line, c.mem_write) == CoherentL1s::Probe::Hit) {
      ++c.stats.l1_hits;
      ++t;
      ++c.mem_line;
      continue;
    }
    ++c.stats.l1_misses;
    request_bus(c, t + 1);
    return;
  }
  c.mem_active = false;
  c.stats.mem_stall += t - c.mem_start;
  schedule(c, t);
}

void SquireMachine::request_bus(Context& c, std::uint64_t at) {
  c.state = State::Granting;
  requesters_ |= std::uint64_t{1} << c.id;
  eligible_at_[static_cast<std::size_t>(c.id)] = at;
  schedule_arbiter(at);
}

void SquireMachine::arbitrate() {
  std::uint64_t candidates = 0;
  std::uint64_t next_eligible = std::numeric_limits<std::uint64_t>::max();
  for (std::uint64_t bits = requesters_; bits != 0; bits &= bits - 1) {
    const int w = std::countr_zero(bits);
    const std::uint64_t at = eligible_at_[static_cast<std::size_t>(w)];
    if (at <= now_) {
      candidates |= std::uint64_t{1} << w;
    } else {
      next_eligible = std::min(next_eligible, at);
    }
  }
  if (candidates == 0) {
    if (requesters_ != 0) schedule_arbiter(next_eligible);
    return;
  }
  const int n = config_.num_workers;
  int chosen = -1;
  for (int k = 1; k <= n; ++k) {
    const int w = (arbiter_pointer_ + k) % n;
    if ((candidates >> w) & 1U) {
      chosen = w;
      break;
    }
  }
  arbiter_pointer_ = chosen;
  requesters_ &= ~(std::uint64_t{1} << chosen);
  last_grant_ = now_;
  granted_once_ = true;
  ++grants_;

  Context& c = contexts_[static_cast<std::size_t>(chosen)];
  ++c.stats.l2_accesses;
  l1s_.fill(chosen, c.mem_line, c.mem_write);
  std::uint64_t latency = config_.l2_latency_cycles;
  if (config_.l2_miss_ratio > 0.0) {
    const double draw = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    if (draw < config_.l2_miss_ratio) latency += config_.beyond_l2_latency_cycles;
  }
  if (config_.schedule_jitter > 0) latency += rng_() % (config_.schedule_jitter + 1ULL);
  ++c.mem_line;
  schedule(c, now_ + latency);
  if (requesters_ != 0) schedule_arbiter(now_ + 1);
}

// --------------------------------------------------------------- reports

std::string SquireMachine::describe_wait(const Context& c) const {
  std::ostringstream os;
  os << (c.host ? std::string("host") : "worker " + std::to_string(c.id)) << " blocked on ";
  if (c.wait_op.kind == ActionKind::WaitG) {
    os << "wait_gcounter(" << c.wait_op.a << ") [value " << gcounter_.value() << "]";
  } else {
    os << "wait_lcounter(" << c.wait_op.a << ", " << c.wait_op.b << ") [value "
       << lcounters_.value(static_cast<int>(c.wait_op.a)) << "]";
  }
  os << " since cycle " << c.blocked_since;
  return os.str();
}

DeadlockInfo SquireMachine::deadlock_info() const {
  DeadlockInfo info;
  info.cycle = now_;
  for (const auto& c : contexts_) {
    if (c.state == State::Blocked) {
      info.blocked.push_back(describe_wait(c));
      // The failed check itself costs a cycle; detection is not earlier than the block.
      info.cycle = std::max(info.cycle, c.blocked_since);
    }
  }
  std::ostringstream os;
  os << "gcounter{value=" << gcounter_.value() << ", token=" << gcounter_.token() << ", pending=[";
  for (int w = 0; w < gcounter_.num_workers(); ++w) os << (w ? "," : "") << gcounter_.pending(w);
  os << "]} lcounters=[";
  for (int w = 0; w < lcounters_.size(); ++w) os << (w ? "," : "") << lcounters_.value(w);
  os << "]";
  info.pending = os.str();
  return info;
}

RunReport SquireMachine::make_report() const {
  RunReport r;
  r.config = config_;
  r.cycles_total = last_event_;
  for (int w = 0; w < config_.num_workers; ++w) r.per_worker.push_back(contexts_[static_cast<std::size_t>(w)].stats);
  r.host = contexts_.back().stats;
  r.gcounter = GlobalCounterReport{gcounter_.value(), gcounter_.token(), gcounter_.max_pending(),
                                   gcounter_.total_pending()};
  r.lcounters = lcounters_.values();
  r.arbiter_grants = grants_;
  r.coherence_violations = l1s_.coherence_violations();
  r.offloads = offloads_;

  auto add = [&](const std::string& name, std::uint64_t cycles) {
    for (auto& [stage, total] : r.cycles_per_stage) {
      if (stage == name) {
        total += cycles;
        return;
      }
    }
    r.cycles_per_stage.emplace_back(name, cycles);
  };
  if (!stage_marks_.empty()) {
    if (stage_marks_.front().second > 0) add("setup", stage_marks_.front().second);
    for (std::size_t i = 0; i < stage_marks_.size(); ++i) {
      const std::uint64_t end = i + 1 < stage_marks_.size() ? stage_marks_[i + 1].second : r.cycles_total;
      add(stage_names_[stage_marks_[i].first], end - stage_marks_[i].second);
    }
  }
  return r;
}

}  // namespace squire
