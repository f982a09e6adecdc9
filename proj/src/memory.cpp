#include "squire/memory.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <sstream>

namespace squire {

namespace {
constexpr std::uint64_t kFirstLine = SimMemory::kBaseAddress / SimMemory::kAlignment;

std::uint64_t align_up(std::uint64_t v, std::uint64_t a) { return (v + a - 1) / a * a; }
}  // namespace

// ---------------------------------------------------------------- SimMemory

std::uint64_t SimMemory::allocate_bytes(const std::string& name, std::uint64_t bytes) {
  const std::uint64_t size = std::max<std::uint64_t>(align_up(bytes, kAlignment), kAlignment);
  Region r;
  r.name = name;
  r.base = top_;
  r.size = size;
  r.storage = std::make_unique<std::byte[]>(size);
  std::memset(r.storage.get(), 0, size);
  top_ += size;
  regions_.push_back(std::move(r));
  return regions_.back().base;
}

const SimMemory::Region* SimMemory::find(std::uint64_t addr) const {
  auto it = std::upper_bound(regions_.begin(), regions_.end(), addr,
                             [](std::uint64_t a, const Region& r) { return a < r.base; });
  if (it == regions_.begin()) return nullptr;
  --it;
  return addr < it->base + it->size ? &*it : nullptr;
}

void SimMemory::check(std::uint64_t addr, std::uint64_t bytes) const {
  const Region* r = find(addr);
  if (r != nullptr && bytes > 0 && addr + bytes <= r->base + r->size) return;
  std::ostringstream os;
  os << "access [0x" << std::hex << addr << ", 0x" << addr + bytes << ") outside registered regions; map: "
     << describe();
  throw SimulationFault(os.str());
}

void SimMemory::release(const Mark& m) {
  if (m.regions > regions_.size()) throw SimulationFault("release of a mark newer than the allocator");
  regions_.resize(m.regions);
  top_ = m.top;
}

std::string SimMemory::describe() const {
  std::ostringstream os;
  os << "{";
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    const auto& r = regions_[i];
    os << (i ? ", " : "") << r.name << "@0x" << std::hex << r.base << "+0x" << r.size << std::dec;
  }
  os << "}";
  return os.str();
}

// -------------------------------------------------------------- CacheModel

CacheModel::CacheModel(CacheGeometry geometry) : geometry_(geometry) {
  geometry_.validate();
  set_mask_ = geometry_.sets() - 1;
  ways_.resize(static_cast<std::size_t>(geometry_.sets()) * geometry_.assoc);
}

CacheModel::Way* CacheModel::find(std::uint64_t line) {
  const std::size_t set = static_cast<std::size_t>(line & set_mask_);
  Way* first = &ways_[set * geometry_.assoc];
  for (std::uint32_t i = 0; i < geometry_.assoc; ++i) {
    if (first[i].valid && first[i].line == line) return &first[i];
  }
  return nullptr;
}

std::optional<CacheModel::Way> CacheModel::insert(std::uint64_t line, bool dirty, std::uint32_t version) {
  const std::size_t set = static_cast<std::size_t>(line & set_mask_);
  Way* first = &ways_[set * geometry_.assoc];
  Way* victim = first;
  for (std::uint32_t i = 0; i < geometry_.assoc; ++i) {
    if (!first[i].valid) {
      victim = &first[i];
      break;
    }
    if (first[i].stamp < victim->stamp) victim = &first[i];
  }
  std::optional<Way> evicted;
  if (victim->valid) {
    evicted = *victim;
    ++stats.evictions;
    if (victim->dirty) ++stats.writebacks;
  }
  *victim = Way{line, ++clock_, version, true, dirty};
  return evicted;
}

bool CacheModel::invalidate(std::uint64_t line) {
  if (Way* w = find(line)) {
    w->valid = false;
    w->dirty = false;
    ++stats.invalidations;
    return true;
  }
  return false;
}

void CacheModel::clear() {
  for (auto& w : ways_) w = Way{};
}

// ------------------------------------------------------------- CoherentL1s

CoherentL1s::CoherentL1s(int num_workers, CacheGeometry geometry) {
  caches_.reserve(static_cast<std::size_t>(num_workers));
  for (int i = 0; i < num_workers; ++i) caches_.emplace_back(geometry);
}

void CoherentL1s::ensure(std::uint64_t line) {
  const std::uint64_t idx = line - kFirstLine;
  if (idx >= sharers_.size()) {
    const std::size_t n = std::max<std::size_t>(static_cast<std::size_t>(idx + 1), sharers_.size() * 2);
    sharers_.resize(n, 0);
    versions_.resize(n, 0);
  }
}

void CoherentL1s::drop_sharer(std::uint64_t line, int worker) {
  sharers_[line - kFirstLine] &= ~(std::uint64_t{1} << worker);
}

CoherentL1s::Probe CoherentL1s::probe(int worker, std::uint64_t line, bool write) {
  ensure(line);
  auto& cache = caches_[static_cast<std::size_t>(worker)];
  CacheModel::Way* way = cache.find(line);
  if (way != nullptr && (!write || way->dirty)) {
    cache.touch(*way);
    ++cache.stats.hits;
    auto& version = versions_[line - kFirstLine];
    if (write) {
      way->version = ++version;
    } else if (way->version != version) {
      ++violations_;
    }
    return Probe::Hit;
  }
  ++cache.stats.misses;
  return Probe::NeedsBus;
}

void CoherentL1s::fill(int worker, std::uint64_t line, bool write) {
  ensure(line);
  const std::uint64_t idx = line - kFirstLine;
  const std::uint64_t self = std::uint64_t{1} << worker;
  std::uint64_t others = sharers_[idx] & ~self;
  while (others != 0) {
    const int peer = std::countr_zero(others);
    others &= others - 1;
    auto& pc = caches_[static_cast<std::size_t>(peer)];
    if (write) {
      pc.invalidate(line);
      drop_sharer(line, peer);
    } else if (CacheModel::Way* w = pc.find(line); w != nullptr && w->dirty) {
      w->dirty = false;
      ++pc.stats.writebacks;
    }
  }
  auto& cache = caches_[static_cast<std::size_t>(worker)];
  auto& version = versions_[idx];
  if (write) ++version;
  if (CacheModel::Way* w = cache.find(line)) {
    cache.touch(*w);
    w->dirty = w->dirty || write;
    w->version = version;
  } else if (auto evicted = cache.insert(line, write, version)) {
    drop_sharer(evicted->line, worker);
  }
  sharers_[idx] |= self;
}

void CoherentL1s::host_write(std::uint64_t line) {
  ensure(line);
  const std::uint64_t idx = line - kFirstLine;
  std::uint64_t holders = sharers_[idx];
  while (holders != 0) {
    const int peer = std::countr_zero(holders);
    holders &= holders - 1;
    caches_[static_cast<std::size_t>(peer)].invalidate(line);
  }
  sharers_[idx] = 0;
  ++versions_[idx];
}

void CoherentL1s::invalidate_from(std::uint64_t first_line) {
  if (first_line < kFirstLine) first_line = kFirstLine;
  for (std::uint64_t idx = first_line - kFirstLine; idx < sharers_.size(); ++idx) {
    std::uint64_t holders = sharers_[idx];
    while (holders != 0) {
      const int peer = std::countr_zero(holders);
      holders &= holders - 1;
      caches_[static_cast<std::size_t>(peer)].invalidate(idx + kFirstLine);
    }
    sharers_[idx] = 0;
    ++versions_[idx];
  }
}

CoherentL1s::Probe CoherentL1s::access(int worker, std::uint64_t line, bool write) {
  const Probe p = probe(worker, line, write);
  if (p == Probe::NeedsBus) fill(worker, line, write);
  return p;
}

CacheStats CoherentL1s::total_stats() const {
  CacheStats t;
  for (const auto& c : caches_) {
    t.hits += c.stats.hits;
    t.misses += c.stats.misses;
    t.evictions += c.stats.evictions;
    t.invalidations += c.stats.invalidations;
    t.writebacks += c.stats.writebacks;
  }
  return t;
}

std::optional<double> mpki(std::uint64_t misses, std::uint64_t instructions_retired) {
  if (instructions_retired == 0) return std::nullopt;
  return 1000.0 * static_cast<double>(misses) / static_cast<double>(instructions_retired);
}

ReplayResult replay_trace(const std::vector<TraceEntry>& trace, int num_workers, CacheGeometry geometry) {
  CoherentL1s l1s(num_workers, geometry);
  for (const auto& e : trace) {
    if (e.worker == TraceEntry::kRelease) {
      l1s.invalidate_from(e.line);
    } else if (e.worker == TraceEntry::kHostWrite) {
      l1s.host_write(e.line);
    } else {
      l1s.access(e.worker, e.line, e.write);
    }
  }
  ReplayResult r;
  r.stats = l1s.total_stats();
  for (int w = 0; w < num_workers; ++w) r.per_worker.push_back(l1s.cache(w).stats);
  return r;
}

}  // namespace squire
