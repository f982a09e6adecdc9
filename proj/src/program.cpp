#include "squire/program.hpp"

#include <vector>

namespace squire {

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Compute: return "compute";
    case ActionKind::MemRead: return "mem_read";
    case ActionKind::MemWrite: return "mem_write";
    case ActionKind::IncG: return "inc_gcounter";
    case ActionKind::IncL: return "inc_lcounter";
    case ActionKind::WaitG: return "wait_gcounter";
    case ActionKind::WaitL: return "wait_lcounter";
    case ActionKind::IdWorker: return "id_worker";
    case ActionKind::NumWorkers: return "num_workers";
    case ActionKind::StartSquire: return "start_squire";
    case ActionKind::StageMark: return "stage";
    case ActionKind::ReadClock: return "clock";
    case ActionKind::Halt: return "stop_worker";
  }
  return "?";
}

Action Program::next(std::uint64_t result) {
  if (!handle_ || handle_.done()) return act::stop_worker();

  promise_type* p = &handle_.promise();
  while (p->child) p = &p->child.promise();
  Handle h = Handle::from_promise(*p);
  p->result = result;
  h.resume();

  for (;;) {
    auto& pr = h.promise();
    if (pr.error) {
      auto error = std::exchange(pr.error, nullptr);
      std::rethrow_exception(error);
    }
    if (pr.new_child) {
      pr.new_child = false;
      h = pr.child;
      h.resume();
      continue;
    }
    if (h.done()) {
      if (pr.parent == nullptr) return act::stop_worker();
      promise_type* parent = pr.parent;
      parent->child.destroy();
      parent->child = {};
      h = Handle::from_promise(*parent);
      h.resume();
      continue;
    }
    return pr.action;
  }
}

void Program::destroy() {
  if (!handle_) return;
  std::vector<Handle> frames;
  for (Handle h = handle_; h; h = h.promise().child) frames.push_back(h);
  for (auto it = frames.rbegin(); it != frames.rend(); ++it) it->destroy();
  handle_ = {};
}

}  // namespace squire
