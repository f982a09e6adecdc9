#include "squire/kernels/common.hpp"

#include <sstream>

namespace squire {

Program replay(std::vector<Action> actions) {
  for (const Action& a : actions) co_await a;
}

std::uint32_t kernel_entry(SquireMachine& machine, const std::string& name, const KernelCosts& costs,
                           const std::function<WorkerEntry(const KernelCosts&)>& make) {
  std::ostringstream key;
  key << name;
  const auto* words = reinterpret_cast<const std::uint64_t*>(&costs);
  for (std::size_t i = 0; i < sizeof(KernelCosts) / sizeof(std::uint64_t); ++i) key << '/' << words[i];
  if (auto id = machine.find_entry(key.str())) return *id;
  return machine.register_entry(key.str(), make(costs));
}

void require_clean(const RunReport& report, const std::string& what) {
  if (!report.deadlock) return;
  std::ostringstream os;
  os << what << ": deadlock at cycle " << report.deadlock->cycle << ":";
  for (const auto& b : report.deadlock->blocked) os << " [" << b << "]";
  os << " " << report.deadlock->pending;
  throw SimulationFault(os.str());
}

}  // namespace squire
