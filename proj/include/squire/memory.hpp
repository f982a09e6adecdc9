#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "squire/config.hpp"

namespace squire {

/// Typed view of an array living in simulated memory: native storage for
/// the functional result plus the simulated base address for timing.
template <class T>
struct SimArray {
  std::uint64_t base = 0;
  std::span<T> data;

  std::uint64_t addr(std::size_t i) const { return base + i * sizeof(T); }
  std::uint64_t bytes() const { return data.size() * sizeof(T); }
  std::size_t size() const { return data.size(); }
  T& operator[](std::size_t i) const { return data[i]; }
};

/// Flat simulated address space. Regions are bump-allocated, line aligned
/// and never overlap; a mark/release pair frees everything allocated after
/// the mark.
class SimMemory {
 public:
  static constexpr std::uint64_t kBaseAddress = 0x10000;
  static constexpr std::uint64_t kAlignment = 64;

  struct Region {
    std::string name;
    std::uint64_t base = 0;
    std::uint64_t size = 0;
    std::unique_ptr<std::byte[]> storage;
  };
  struct Mark {
    std::size_t regions = 0;
    std::uint64_t top = kBaseAddress;
  };

  std::uint64_t allocate_bytes(const std::string& name, std::uint64_t bytes);

  template <class T>
  SimArray<T> allocate(const std::string& name, std::size_t count) {
    static_assert(std::is_trivially_copyable_v<T> && alignof(T) <= 16);
    const std::uint64_t base = allocate_bytes(name, count * sizeof(T));
    T* first = reinterpret_cast<T*>(regions_.back().storage.get());
    return SimArray<T>{base, std::span<T>(first, count)};
  }

  // Typed view of `count` elements at `addr`; faults when out of region.
  template <class T>
  SimArray<T> view(std::uint64_t addr, std::size_t count) const {
    static_assert(std::is_trivially_copyable_v<T>);
    check(addr, std::max<std::uint64_t>(count * sizeof(T), 1));
    const Region* r = find(addr);
    T* first = reinterpret_cast<T*>(r->storage.get() + (addr - r->base));
    return SimArray<T>{addr, std::span<T>(first, count)};
  }

  /// Throws SimulationFault naming the region map when [addr, addr+bytes)
  /// is not inside a single region.
  void check(std::uint64_t addr, std::uint64_t bytes) const;
  const Region* find(std::uint64_t addr) const;

  Mark mark() const { return Mark{regions_.size(), top_}; }
  void release(const Mark& m);

  std::uint64_t top() const { return top_; }
  std::uint64_t used_bytes() const { return top_ - kBaseAddress; }
  const std::vector<Region>& regions() const { return regions_; }
  std::string describe() const;

 private:
  std::vector<Region> regions_;
  std::uint64_t top_ = kBaseAddress;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t evictions = 0;
  std::uint64_t invalidations = 0;
  std::uint64_t writebacks = 0;
  std::uint64_t accesses() const { return hits + misses; }
};

/// Set-associative LRU cache of line numbers. A line is either clean
/// (shared) or dirty (modified).
class CacheModel {
 public:
  explicit CacheModel(CacheGeometry geometry);

  struct Way {
    std::uint64_t line = 0;
    std::uint64_t stamp = 0;
    std::uint32_t version = 0;
    bool valid = false;
    bool dirty = false;
  };

  Way* find(std::uint64_t line);
  /// Marks `way` most recently used.
  void touch(Way& way) { way.stamp = ++clock_; }
  /// Inserts `line`, evicting the LRU way of its set if needed; returns the
  /// evicted line when one was valid.
  std::optional<Way> insert(std::uint64_t line, bool dirty, std::uint32_t version);
  bool invalidate(std::uint64_t line);
  void clear();

  const CacheGeometry& geometry() const { return geometry_; }
  CacheStats stats;

 private:
  CacheGeometry geometry_;
  std::uint64_t set_mask_;
  std::vector<Way> ways_;
  std::uint64_t clock_ = 0;
};

/// One recorded worker line access in global simulation order. worker ==
/// kHostWrite marks a host write to `line`; kRelease marks a memory release
/// invalidating every line from `line` upward.
struct TraceEntry {
  static constexpr std::int32_t kHostWrite = -1;
  static constexpr std::int32_t kRelease = -2;
  std::int32_t worker;
  bool write;
  std::uint64_t line;
};

/// Private worker L1 data caches kept coherent by snooping invalidations
/// (write-back, write-allocate, MSI). Functional data always lives in
/// SimMemory so coherence only affects timing; a per-line version stamp
/// lets every read hit be checked against the last committed write.
class CoherentL1s {
 public:
  CoherentL1s(int num_workers, CacheGeometry geometry);

  enum class Probe { Hit, NeedsBus };

  /// Looks the line up for `worker` and updates hit/miss statistics. A
  /// write to a clean line counts as a (coherence) miss.
  Probe probe(int worker, std::uint64_t line, bool write);
  /// Completes a bus transaction: fills the line, invalidates peers on a
  /// write, downgrades a modified peer on a read.
  void fill(int worker, std::uint64_t line, bool write);
  /// Host write snooped from the L2 side.
  void host_write(std::uint64_t line);
  void invalidate_from(std::uint64_t first_line);

  /// probe() followed by fill() on a miss; used for trace replay.
  Probe access(int worker, std::uint64_t line, bool write);

  int num_workers() const { return static_cast<int>(caches_.size()); }
  const CacheModel& cache(int worker) const { return caches_[static_cast<std::size_t>(worker)]; }
  CacheStats total_stats() const;
  std::uint64_t coherence_violations() const { return violations_; }

 private:
  void ensure(std::uint64_t line);
  void drop_sharer(std::uint64_t line, int worker);

  std::vector<CacheModel> caches_;
  std::vector<std::uint64_t> sharers_;
  std::vector<std::uint32_t> versions_;
  std::uint64_t violations_ = 0;
};

/// Misses per thousand instructions; absent when no instructions retired.
std::optional<double> mpki(std::uint64_t misses, std::uint64_t instructions_retired);

struct ReplayResult {
  CacheStats stats;
  std::vector<CacheStats> per_worker;
};

/// Replays a recorded trace through fresh coherent L1s of the given
/// geometry.
ReplayResult replay_trace(const std::vector<TraceEntry>& trace, int num_workers, CacheGeometry geometry);

}  // namespace squire
