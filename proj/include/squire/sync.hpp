#pragma once

#include <cstdint>
#include <vector>

namespace squire {

/// Ordered-increment counter. Increments commit strictly in worker
/// round-robin order (0, 1, ..., W-1, 0, ...); an increment issued out of
/// turn is parked in the issuer's pending count until the token reaches it.
class GlobalCounter {
 public:
  explicit GlobalCounter(int num_workers = 1);

  /// Returns the number of increments committed by this call (0 when the
  /// increment was parked).
  std::uint64_t increment(int worker);
  void reset();

  std::uint64_t value() const { return value_; }
  int token() const { return token_; }
  int num_workers() const { return static_cast<int>(pending_.size()); }
  std::uint64_t pending(int worker) const { return pending_.at(static_cast<std::size_t>(worker)); }
  std::uint64_t total_pending() const;
  std::uint64_t max_pending() const { return max_pending_; }
  std::uint64_t requests() const { return requests_; }

  // Diagnostic only; off by default since chain runs commit ~10^5 times.
  void set_logging(bool on) { logging_ = on; }
  const std::vector<int>& committed_log() const { return committed_log_; }

 private:
  void commit();

  std::uint64_t value_ = 0;
  int token_ = 0;
  std::vector<std::uint64_t> pending_;
  std::uint64_t max_pending_ = 0;
  std::uint64_t requests_ = 0;
  bool logging_ = false;
  std::vector<int> committed_log_;
};

class LocalCounters {
 public:
  explicit LocalCounters(int num_workers = 1) : counters_(static_cast<std::size_t>(num_workers), 0) {}

  void increment(int index);
  std::uint64_t value(int index) const;
  void reset();
  int size() const { return static_cast<int>(counters_.size()); }
  const std::vector<std::uint64_t>& values() const { return counters_; }

 private:
  std::vector<std::uint64_t> counters_;
};

}  // namespace squire
