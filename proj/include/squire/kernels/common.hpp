#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "squire/kernels/costs.hpp"
#include "squire/machine.hpp"

namespace squire {

// Issues a prerecorded action list in order.
Program replay(std::vector<Action> actions);

// Registers `make(costs)` under `name` unless an entry with the same name and
// cost table already exists on the machine.
std::uint32_t kernel_entry(SquireMachine& machine, const std::string& name, const KernelCosts& costs,
                           const std::function<WorkerEntry(const KernelCosts&)>& make);

// Throws SimulationFault carrying the deadlock report when the run deadlocked.
void require_clean(const RunReport& report, const std::string& what);

inline std::uint64_t ceil_log2(std::uint64_t v) { return v <= 1 ? 0 : std::bit_width(v - 1); }

// Host-side action appender used by traced native routines.
class ActionTrace {
 public:
  void compute(std::uint64_t ops) {
    if (ops > 0) actions_.push_back(act::compute(ops));
  }
  void read(std::uint64_t addr, std::uint64_t bytes) {
    if (bytes > 0) actions_.push_back(act::read(addr, bytes));
  }
  void write(std::uint64_t addr, std::uint64_t bytes) {
    if (bytes > 0) actions_.push_back(act::write(addr, bytes));
  }
  std::vector<Action>& actions() { return actions_; }
  std::vector<Action> take() { return std::move(actions_); }

 private:
  std::vector<Action> actions_;
};

}  // namespace squire
