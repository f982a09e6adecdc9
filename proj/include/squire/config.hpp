#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace squire {

/// Raised for any condition the simulated hardware would treat as a fault:
/// bad counter index, out-of-region access, start while running, timeout.
class SimulationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SyncBackend { HardwareCounters, SoftwareLock };

std::string to_string(SyncBackend backend);
SyncBackend sync_backend_from_string(const std::string& name);

struct CacheGeometry {
  std::uint32_t size_bytes = 8 * 1024;
  std::uint32_t assoc = 4;
  std::uint32_t line_bytes = 64;

  std::uint32_t sets() const { return size_bytes / (assoc * line_bytes); }
  void validate() const;
};

/// Geometry used by the cache sweep: the set count stays fixed and the
/// associativity scales with the size, which keeps LRU inclusion exact.
CacheGeometry sweep_geometry(std::uint32_t size_bytes, std::uint32_t line_bytes = 64,
                             std::uint32_t sets = 4);

struct SquireConfig {
  int num_workers = 16;
  int worker_issue_width = 2;
  double host_ipc_factor = 3.0;
  CacheGeometry l1d{};
  std::uint32_t l2_latency_cycles = 4;
  std::uint32_t beyond_l2_latency_cycles = 40;
  // Fraction of granted L2 requests that pay the beyond-L2 latency. Zero
  // means worker data always hits in the L2.
  double l2_miss_ratio = 0.0;
  // Fixed by the hardware; not configurable.
  static constexpr std::uint32_t counter_access_cycles = 1;
  // Control-register write plus worker pipeline start after start_squire.
  std::uint32_t offload_cycles = 20;
  std::uint64_t scheduler_seed = 0;
  // Extra random cycles (0..jitter) added to each L2 grant; stresses
  // interleavings in tests without changing the nominal cost model.
  std::uint32_t schedule_jitter = 0;
  SyncBackend sync_backend = SyncBackend::HardwareCounters;
  std::uint32_t lock_acquire_cycles = 30;
  // 0 = unbounded pending-increment queues.
  std::uint32_t pending_queue_limit = 0;
  // Record the global counter commits and worker memory accesses.
  bool record_events = false;
  // Record the worker line-access trace for offline cache replay.
  bool record_trace = false;

  void validate() const;
};

}  // namespace squire
