#pragma once

#include <coroutine>
#include <cstdint>
#include <exception>
#include <functional>
#include <utility>

namespace squire {

enum class ActionKind : std::uint8_t {
  Compute,     // a = op count
  MemRead,     // a = address, b = bytes
  MemWrite,    // a = address, b = bytes
  IncG,
  IncL,        // a = counter index
  WaitG,       // a = threshold
  WaitL,       // a = counter index, b = threshold
  IdWorker,
  NumWorkers,
  StartSquire, // a = entry id, b = argument block address
  StageMark,   // a = stage id (host only, zero cost)
  ReadClock,   // zero cost
  Halt,
};

const char* to_string(ActionKind kind);

/// One costed step of a worker or host program.
struct Action {
  ActionKind kind = ActionKind::Halt;
  std::uint64_t a = 0;
  std::uint64_t b = 0;
};

namespace act {
inline Action compute(std::uint64_t ops) { return {ActionKind::Compute, ops, 0}; }
inline Action read(std::uint64_t addr, std::uint64_t bytes) { return {ActionKind::MemRead, addr, bytes}; }
inline Action write(std::uint64_t addr, std::uint64_t bytes) { return {ActionKind::MemWrite, addr, bytes}; }
inline Action inc_gcounter() { return {ActionKind::IncG, 0, 0}; }
inline Action inc_lcounter(int w) { return {ActionKind::IncL, static_cast<std::uint64_t>(w), 0}; }
inline Action wait_gcounter(std::uint64_t s) { return {ActionKind::WaitG, s, 0}; }
inline Action wait_lcounter(int w, std::uint64_t s) { return {ActionKind::WaitL, static_cast<std::uint64_t>(w), s}; }
inline Action id_worker() { return {ActionKind::IdWorker, 0, 0}; }
inline Action num_workers() { return {ActionKind::NumWorkers, 0, 0}; }
inline Action start_squire(std::uint32_t entry, std::uint64_t args) { return {ActionKind::StartSquire, entry, args}; }
inline Action stage(std::uint32_t id) { return {ActionKind::StageMark, id, 0}; }
inline Action clock() { return {ActionKind::ReadClock, 0, 0}; }
inline Action stop_worker() { return {ActionKind::Halt, 0, 0}; }
}  // namespace act

/// A resumable producer of Actions. Programs are C++20 coroutines: each
/// `co_await action` hands the action to the machine and resumes with its
/// result (worker id, clock, ...) once the machine has charged for it.
/// `co_await other_program` runs a sub-program inline. Falling off the end
/// is an implicit stop_worker().
class Program {
 public:
  struct promise_type;
  using Handle = std::coroutine_handle<promise_type>;

  struct ActionAwaiter {
    promise_type* promise;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<>) const noexcept {}
    std::uint64_t await_resume() const noexcept { return promise->result; }
  };

  struct CallAwaiter {
    Handle child;
    promise_type* parent;
    bool await_ready() const noexcept { return false; }
    void await_suspend(std::coroutine_handle<>) const noexcept {}
    void await_resume() const {}
  };

  struct promise_type {
    Action action{};
    std::uint64_t result = 0;
    std::exception_ptr error;
    Handle child{};
    promise_type* parent = nullptr;
    bool new_child = false;

    Program get_return_object() { return Program(Handle::from_promise(*this)); }
    std::suspend_always initial_suspend() noexcept { return {}; }
    std::suspend_always final_suspend() noexcept { return {}; }
    void return_void() noexcept {}
    void unhandled_exception() noexcept { error = std::current_exception(); }

    ActionAwaiter await_transform(Action a) noexcept {
      action = a;
      return ActionAwaiter{this};
    }
    CallAwaiter await_transform(Program&& sub) noexcept {
      child = std::exchange(sub.handle_, {});
      child.promise().parent = this;
      new_child = true;
      return CallAwaiter{child, this};
    }
  };

  Program() = default;
  Program(Program&& other) noexcept : handle_(std::exchange(other.handle_, {})) {}
  Program& operator=(Program&& other) noexcept {
    if (this != &other) {
      destroy();
      handle_ = std::exchange(other.handle_, {});
    }
    return *this;
  }
  Program(const Program&) = delete;
  Program& operator=(const Program&) = delete;
  ~Program() { destroy(); }

  bool valid() const { return static_cast<bool>(handle_); }

  /// Resumes the innermost active frame with `result` and returns the next
  /// action. Returns Halt once the outermost frame has finished.
  Action next(std::uint64_t result);

 private:
  explicit Program(Handle h) : handle_(h) {}
  void destroy();

  Handle handle_{};
};

/// Factory run once per worker on start_squire; `args` is the argument
/// block address from the control registers.
using WorkerEntry = std::function<Program(std::uint64_t args)>;

}  // namespace squire
