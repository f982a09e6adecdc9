#include "squire/config.hpp"

#include <bit>

namespace squire {

std::string to_string(SyncBackend backend) {
  return backend == SyncBackend::HardwareCounters ? "hardware-counters" : "software-lock";
}

SyncBackend sync_backend_from_string(const std::string& name) {
  if (name == "hardware-counters" || name == "hw") return SyncBackend::HardwareCounters;
  if (name == "software-lock" || name == "sw") return SyncBackend::SoftwareLock;
  throw std::invalid_argument("unknown sync backend '" + name + "'");
}

void CacheGeometry::validate() const {
  if (!std::has_single_bit(size_bytes) || !std::has_single_bit(line_bytes) || assoc == 0) {
    throw std::invalid_argument("cache size and line must be powers of two");
  }
  if (line_bytes > size_bytes || size_bytes % line_bytes != 0) {
    throw std::invalid_argument("cache line must divide cache size");
  }
  if (size_bytes % (assoc * line_bytes) != 0 || !std::has_single_bit(sets())) {
    throw std::invalid_argument("cache set count must be a power of two");
  }
}

CacheGeometry sweep_geometry(std::uint32_t size_bytes, std::uint32_t line_bytes, std::uint32_t sets) {
  CacheGeometry g;
  g.size_bytes = size_bytes;
  g.line_bytes = line_bytes;
  g.assoc = size_bytes / (line_bytes * sets);
  g.validate();
  return g;
}

void SquireConfig::validate() const {
  if (num_workers < 1 || num_workers > 64) throw std::invalid_argument("num_workers must be in [1, 64]");
  if (worker_issue_width < 1) throw std::invalid_argument("worker_issue_width must be >= 1");
  if (!(host_ipc_factor > 0.0)) throw std::invalid_argument("host_ipc_factor must be positive");
  if (l2_miss_ratio < 0.0 || l2_miss_ratio > 1.0) throw std::invalid_argument("l2_miss_ratio must be in [0, 1]");
  if (lock_acquire_cycles < 1) throw std::invalid_argument("lock_acquire_cycles must be >= 1");
  l1d.validate();
}

}  // namespace squire
