#include "squire/sync.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "squire/config.hpp"

namespace squire {

GlobalCounter::GlobalCounter(int num_workers) : pending_(static_cast<std::size_t>(num_workers), 0) {
  if (num_workers < 1) throw SimulationFault("global counter needs at least one worker");
}

void GlobalCounter::commit() {
  ++value_;
  if (logging_) committed_log_.push_back(token_);
  token_ = (token_ + 1) % num_workers();
}

std::uint64_t GlobalCounter::increment(int worker) {
  if (worker < 0 || worker >= num_workers()) {
    throw SimulationFault("inc_gcounter from invalid worker " + std::to_string(worker));
  }
  ++requests_;
  if (worker != token_) {
    auto& slot = pending_[static_cast<std::size_t>(worker)];
    ++slot;
    max_pending_ = std::max(max_pending_, slot);
    return 0;
  }
  std::uint64_t committed = 1;
  commit();
  // Drain parked increments in token order.
  while (pending_[static_cast<std::size_t>(token_)] > 0) {
    --pending_[static_cast<std::size_t>(token_)];
    commit();
    ++committed;
  }
  return committed;
}

void GlobalCounter::reset() {
  value_ = 0;
  token_ = 0;
  std::fill(pending_.begin(), pending_.end(), 0);
  max_pending_ = 0;
  requests_ = 0;
  committed_log_.clear();
}

std::uint64_t GlobalCounter::total_pending() const {
  return std::accumulate(pending_.begin(), pending_.end(), std::uint64_t{0});
}

void LocalCounters::increment(int index) {
  if (index < 0 || index >= size()) {
    throw SimulationFault("inc_lcounter index " + std::to_string(index) + " out of range [0, " +
                          std::to_string(size()) + ")");
  }
  ++counters_[static_cast<std::size_t>(index)];
}

std::uint64_t LocalCounters::value(int index) const {
  if (index < 0 || index >= size()) {
    throw SimulationFault("local counter index " + std::to_string(index) + " out of range [0, " +
                          std::to_string(size()) + ")");
  }
  return counters_[static_cast<std::size_t>(index)];
}

void LocalCounters::reset() { std::fill(counters_.begin(), counters_.end(), 0); }

}  // namespace squire
