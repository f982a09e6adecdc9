#include "squire/kernels/radix.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <queue>

namespace squire {

namespace {

constexpr std::uint64_t kKey = sizeof(std::uint64_t);

struct RadixArgs {
  std::uint64_t keys = 0;
  std::uint64_t scratch = 0;
  std::uint64_t count = 0;
};

void insertion_sort(std::span<std::uint64_t> d, std::uint64_t addr, const KernelCosts& c, ActionTrace* trace) {
  std::uint64_t steps = 0;
  for (std::size_t i = 1; i < d.size(); ++i) {
    const std::uint64_t v = d[i];
    std::size_t j = i;
    while (j > 0 && d[j - 1] > v) {
      d[j] = d[j - 1];
      --j;
      ++steps;
    }
    d[j] = v;
    ++steps;
  }
  if (trace != nullptr) {
    trace->read(addr, d.size() * kKey);
    trace->compute(d.size() * c.insertion_element_ops + steps * c.insertion_compare_ops);
    trace->write(addr, d.size() * kKey);
  }
}

void msd(std::span<std::uint64_t> d, std::span<std::uint64_t> t, std::uint64_t daddr, std::uint64_t taddr, int shift,
         const KernelCosts& c, ActionTrace* trace) {
  const std::size_t n = d.size();
  if (n < 2) return;
  if (n < kInsertionCutoff) {
    insertion_sort(d, daddr, c, trace);
    return;
  }
  std::array<std::size_t, 257> offset{};
  for (std::uint64_t v : d) ++offset[((v >> shift) & 0xFF) + 1];
  if (trace != nullptr) {
    trace->read(daddr, n * kKey);
    trace->compute(n * c.radix_count_ops + 256 * c.radix_prefix_ops);
  }
  const bool single = std::any_of(offset.begin() + 1, offset.end(), [n](std::size_t k) { return k == n; });
  if (!single) {
    for (std::size_t b = 1; b < offset.size(); ++b) offset[b] += offset[b - 1];
    std::array<std::size_t, 256> next{};
    std::copy(offset.begin(), offset.begin() + 256, next.begin());
    for (std::uint64_t v : d) t[next[(v >> shift) & 0xFF]++] = v;
    std::copy(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(n), d.begin());
    if (trace != nullptr) {
      trace->read(daddr, n * kKey);
      trace->write(taddr, n * kKey);
      trace->compute(n * c.radix_scatter_ops);
      trace->read(taddr, n * kKey);
      trace->write(daddr, n * kKey);
      trace->compute(n * c.radix_copy_ops);
    }
  }
  if (shift == 0) return;
  if (single) {
    msd(d, t, daddr, taddr, shift - 8, c, trace);
    return;
  }
  for (std::size_t b = 0; b < 256; ++b) {
    const std::size_t lo = offset[b];
    const std::size_t len = offset[b + 1] - lo;
    if (len < 2) continue;
    msd(d.subspan(lo, len), t.subspan(lo, len), daddr + lo * kKey, taddr + lo * kKey, shift - 8, c, trace);
  }
}

// Min-heap merge of `runs` consecutive sorted runs of `src` into `dst`.
void heap_merge(std::span<const std::uint64_t> src, std::span<std::uint64_t> dst, std::size_t runs) {
  const std::size_t n = src.size();
  std::vector<std::size_t> pos(runs), end(runs);
  using Item = std::pair<std::uint64_t, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t r = 0; r < runs; ++r) {
    pos[r] = r * n / runs;
    end[r] = (r + 1) * n / runs;
    if (pos[r] < end[r]) heap.emplace(src[pos[r]], r);
  }
  std::size_t out = 0;
  while (!heap.empty()) {
    const auto [v, r] = heap.top();
    heap.pop();
    dst[out++] = v;
    if (++pos[r] < end[r]) heap.emplace(src[pos[r]], r);
  }
}

Program radix_worker(const SimMemory* memory, KernelCosts costs, std::uint64_t args) {
  co_await act::read(args, sizeof(RadixArgs));
  const RadixArgs a = memory->view<RadixArgs>(args, 1)[0];
  const std::uint64_t id = co_await act::id_worker();
  const std::uint64_t w = co_await act::num_workers();
  const std::uint64_t lo = id * a.count / w;
  const std::uint64_t hi = (id + 1) * a.count / w;
  if (hi > lo) {
    auto keys = memory->view<std::uint64_t>(a.keys + lo * kKey, hi - lo);
    auto scratch = memory->view<std::uint64_t>(a.scratch + lo * kKey, hi - lo);
    ActionTrace trace;
    radix_sort_traced(keys.data, scratch.data, keys.base, scratch.base, costs, trace);
    co_await replay(trace.take());
  }
  co_await act::inc_gcounter();
  co_await act::stop_worker();
}

}  // namespace

void radix_sort_traced(std::span<std::uint64_t> data, std::span<std::uint64_t> scratch, std::uint64_t data_addr,
                       std::uint64_t scratch_addr, const KernelCosts& costs, ActionTrace& trace) {
  msd(data, scratch, data_addr, scratch_addr, 56, costs, &trace);
}

std::vector<std::uint64_t> radix_reference(std::vector<std::uint64_t> keys) {
  std::vector<std::uint64_t> scratch(keys.size());
  msd(keys, scratch, 0, 0, 56, KernelCosts{}, nullptr);
  return keys;
}

RadixBuffers RadixBuffers::allocate(SimMemory& memory, std::span<const std::uint64_t> input) {
  RadixBuffers b;
  b.keys = memory.allocate<std::uint64_t>("radix.keys", input.size());
  b.scratch = memory.allocate<std::uint64_t>("radix.scratch", input.size());
  std::copy(input.begin(), input.end(), b.keys.data.begin());
  return b;
}

Program radix_host_program(RadixBuffers* buffers, KernelCosts costs) {
  ActionTrace trace;
  radix_sort_traced(buffers->keys.data, buffers->scratch.data, buffers->keys.base, buffers->scratch.base, costs, trace);
  buffers->in_scratch = false;
  buffers->offloaded = false;
  co_await replay(trace.take());
}

Program radix_squire_program(SquireMachine& machine, RadixBuffers* buffers, RadixOptions options) {
  const std::uint64_t n = buffers->keys.size();
  if (n <= options.offload_threshold) {
    co_await radix_host_program(buffers, options.costs);
    co_return;
  }
  const SimMemory* memory = &machine.memory();
  const std::uint32_t entry = kernel_entry(machine, "radix", options.costs, [memory](const KernelCosts& c) {
    return WorkerEntry([memory, c](std::uint64_t args) { return radix_worker(memory, c, args); });
  });
  auto args = machine.memory().allocate<RadixArgs>("radix.args", 1);
  args[0] = RadixArgs{buffers->keys.base, buffers->scratch.base, n};
  co_await act::write(args.base, sizeof(RadixArgs));
  const auto w = static_cast<std::uint64_t>(machine.num_workers());
  co_await act::start_squire(entry, args.base);
  co_await act::wait_gcounter(w);
  heap_merge(buffers->keys.data, buffers->scratch.data, w);
  co_await act::read(buffers->keys.base, n * kKey);
  co_await act::compute(n * (options.costs.merge_base_ops + options.costs.merge_level_ops * ceil_log2(w)));
  co_await act::write(buffers->scratch.base, n * kKey);
  buffers->in_scratch = true;
  buffers->offloaded = true;
}

namespace {
template <class MakeProgram>
RadixRun run_radix(SquireMachine& machine, std::span<const std::uint64_t> keys, MakeProgram make) {
  const auto mark = machine.memory().mark();
  RadixBuffers buffers = RadixBuffers::allocate(machine.memory(), keys);
  RadixRun out;
  out.report = machine.run(make(&buffers));
  require_clean(out.report, "radix");
  const auto sorted = buffers.sorted();
  out.sorted.assign(sorted.begin(), sorted.end());
  out.offloaded = buffers.offloaded;
  machine.release(mark);
  return out;
}
}  // namespace

RadixRun radix_squire(SquireMachine& machine, std::span<const std::uint64_t> keys, const RadixOptions& options) {
  return run_radix(machine, keys, [&](RadixBuffers* b) { return radix_squire_program(machine, b, options); });
}

RadixRun radix_baseline(SquireMachine& machine, std::span<const std::uint64_t> keys, const KernelCosts& costs) {
  return run_radix(machine, keys, [&](RadixBuffers* b) { return radix_host_program(b, costs); });
}

}  // namespace squire
