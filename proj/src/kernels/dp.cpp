#include "squire/kernels/dp.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace squire {

namespace {

enum class DpKind : std::uint32_t { Dtw, Sw };

struct DpArgs {
  std::uint64_t a = 0;     // row input (S or A)
  std::uint64_t b = 0;     // column input (R or B)
  std::uint64_t mat = 0;   // n x m cells
  std::uint64_t best = 0;  // SW: one BestCell per worker
  std::uint64_t tiles = 0;  // Squire layout: one tile of n padded rows per worker
  std::uint64_t tile_stride = 0;  // bytes per tile row, a multiple of the line size
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  DpKind kind = DpKind::Dtw;
  SwScoring scoring;
};

struct BestCell {
  std::int32_t value = -1;
  std::uint32_t row = 0;
  std::uint32_t col = 0;
  bool better_than(const BestCell& o) const {
    if (value != o.value) return value > o.value;
    return row != o.row ? row < o.row : col < o.col;
  }
};

void dtw_row(const float* s, const float* r, float* mat, std::size_t m, std::size_t i, std::size_t c0,
             std::size_t c1) {
  float* row = mat + i * m;
  const float* up = i > 0 ? mat + (i - 1) * m : nullptr;
  for (std::size_t j = c0; j < c1; ++j) {
    const float cost = std::fabs(s[i] - r[j]);
    float prev = 0;
    if (i == 0 && j == 0) {
      prev = 0;
    } else if (i == 0) {
      prev = row[j - 1];
    } else if (j == 0) {
      prev = up[0];
    } else {
      prev = std::min(std::min(up[j], row[j - 1]), up[j - 1]);
    }
    row[j] = prev + cost;
  }
}

void sw_row(const char* a, const char* b, std::int32_t* mat, std::size_t m, std::size_t i, std::size_t c0,
            std::size_t c1, const SwScoring& sc, BestCell& best) {
  std::int32_t* row = mat + i * m;
  const std::int32_t* up = i > 0 ? mat + (i - 1) * m : nullptr;
  for (std::size_t j = c0; j < c1; ++j) {
    const std::int32_t diag = (i > 0 && j > 0) ? up[j - 1] : 0;
    const std::int32_t top = i > 0 ? up[j] : 0;
    const std::int32_t left = j > 0 ? row[j - 1] : 0;
    const std::int32_t sub = a[i] == b[j] ? sc.match : sc.mismatch;
    const std::int32_t v = std::max({0, diag + sub, top + sc.gap, left + sc.gap});
    row[j] = v;
    const BestCell cell{v, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
    if (cell.better_than(best)) best = cell;
  }
}

std::size_t elem_bytes(DpKind kind) { return kind == DpKind::Dtw ? sizeof(float) : sizeof(std::int32_t); }
std::size_t input_bytes(DpKind kind) { return kind == DpKind::Dtw ? sizeof(float) : sizeof(char); }

// One row segment [c0, c1) of a tile. `up` is the same segment of row i-1
// (null on row 0); `left` and `diag` are cells (i, c0-1) and (i-1, c0-1).
void dtw_segment(const float* s, const float* r, std::size_t i, std::size_t c0, std::size_t c1, const float* up,
                 float left, float diag, float* out) {
  for (std::size_t j = c0; j < c1; ++j) {
    const float cost = std::fabs(s[i] - r[j]);
    const float top = up != nullptr ? up[j - c0] : 0.0f;
    float prev = 0;
    if (i == 0) {
      prev = j == 0 ? 0.0f : left;
    } else if (j == 0) {
      prev = top;
    } else {
      prev = std::min(std::min(top, left), diag);
    }
    out[j - c0] = prev + cost;
    left = out[j - c0];
    diag = top;
  }
}

void sw_segment(const char* a, const char* b, std::size_t i, std::size_t c0, std::size_t c1, const std::int32_t* up,
                std::int32_t left, std::int32_t diag, const SwScoring& sc, std::int32_t* out, BestCell& best) {
  for (std::size_t j = c0; j < c1; ++j) {
    const std::int32_t top = up != nullptr ? up[j - c0] : 0;
    const std::int32_t sub = a[i] == b[j] ? sc.match : sc.mismatch;
    const std::int32_t v = std::max({0, diag + sub, top + sc.gap, left + sc.gap});
    out[j - c0] = v;
    const BestCell cell{v, static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
    if (cell.better_than(best)) best = cell;
    left = v;
    diag = top;
  }
}

std::uint64_t tile_row(const DpArgs& a, int worker, std::size_t i) {
  return a.tiles + (static_cast<std::uint64_t>(worker) * a.n + i) * a.tile_stride;
}

Program dp_worker(const SimMemory* memory, KernelCosts costs, std::uint64_t args) {
  co_await act::read(args, sizeof(DpArgs));
  const DpArgs a = memory->view<DpArgs>(args, 1)[0];
  const auto id = static_cast<int>(co_await act::id_worker());
  const auto w = static_cast<int>(co_await act::num_workers());
  const auto part = column_partition(a.m, w);
  const std::size_t c0 = part[static_cast<std::size_t>(id)];
  const std::size_t c1 = part[static_cast<std::size_t>(id) + 1];
  if (c0 == c1) co_return;
  int prev = id - 1;
  while (prev >= 0 && part[static_cast<std::size_t>(prev)] == part[static_cast<std::size_t>(prev) + 1]) --prev;
  const std::size_t eb = elem_bytes(a.kind);
  const std::size_t ib = input_bytes(a.kind);
  const std::uint64_t cell_ops = a.kind == DpKind::Dtw ? costs.dtw_cell_ops : costs.sw_cell_ops;
  const std::byte* in_a = memory->view<std::byte>(a.a, a.n * ib).data.data();
  const std::byte* in_b = memory->view<std::byte>(a.b, a.m * ib).data.data();
  const std::size_t width = c1 - c0;
  // Cell (i, c0-1) lives at the end of the neighbour's tile row.
  const std::uint64_t edge = prev >= 0 ? (c0 - 1 - part[static_cast<std::size_t>(prev)]) * eb : 0;
  auto cell = [&](std::uint64_t addr) { return memory->view<std::byte>(addr, eb).data.data(); };
  BestCell best;
  for (std::size_t i = 0; i < a.n; ++i) {
    if (prev >= 0) co_await act::wait_lcounter(prev, i + 1);
    co_await act::read(a.a + i * ib, ib);
    co_await act::read(a.b + c0 * ib, width * ib);
    const std::uint64_t row = tile_row(a, id, i);
    const std::byte* up = nullptr;
    if (i > 0) {
      co_await act::read(row - a.tile_stride, width * eb);
      up = cell(row - a.tile_stride);
    }
    const std::byte* left = nullptr;
    const std::byte* diag = nullptr;
    if (prev >= 0) {
      co_await act::read(tile_row(a, prev, i) + edge, eb);
      left = cell(tile_row(a, prev, i) + edge);
      if (i > 0) {
        co_await act::read(tile_row(a, prev, i - 1) + edge, eb);
        diag = cell(tile_row(a, prev, i - 1) + edge);
      }
    }
    std::byte* out = memory->view<std::byte>(row, width * eb).data.data();
    if (a.kind == DpKind::Dtw) {
      auto val = [](const std::byte* p) { return p != nullptr ? *reinterpret_cast<const float*>(p) : 0.0f; };
      dtw_segment(reinterpret_cast<const float*>(in_a), reinterpret_cast<const float*>(in_b), i, c0, c1,
                  reinterpret_cast<const float*>(up), val(left), val(diag), reinterpret_cast<float*>(out));
    } else {
      auto val = [](const std::byte* p) { return p != nullptr ? *reinterpret_cast<const std::int32_t*>(p) : 0; };
      sw_segment(reinterpret_cast<const char*>(in_a), reinterpret_cast<const char*>(in_b), i, c0, c1,
                 reinterpret_cast<const std::int32_t*>(up), val(left), val(diag), a.scoring,
                 reinterpret_cast<std::int32_t*>(out), best);
    }
    co_await act::compute(width * cell_ops + costs.dp_row_ops);
    co_await act::write(row, width * eb);
    co_await act::inc_lcounter(id);
  }
  if (a.kind == DpKind::Sw) {
    auto slot = memory->view<BestCell>(a.best + static_cast<std::uint64_t>(id) * sizeof(BestCell), 1);
    slot[0] = best;
    co_await act::write(slot.base, sizeof(BestCell));
  }
  co_await act::stop_worker();
}

struct DpBuffers {
  DpArgs args;
  SimArray<DpArgs> args_block;
  SimArray<BestCell> bests;
};

DpBuffers allocate_dp(SimMemory& memory, DpKind kind, const void* a, std::size_t n, const void* b, std::size_t m,
                      int workers, const SwScoring& scoring) {
  if (n == 0 || m == 0) throw SimulationFault("dynamic programming kernel needs non-empty inputs");
  const std::size_t ib = input_bytes(kind);
  auto in_a = memory.allocate<std::byte>("dp.a", n * ib);
  auto in_b = memory.allocate<std::byte>("dp.b", m * ib);
  std::memcpy(in_a.data.data(), a, n * ib);
  std::memcpy(in_b.data.data(), b, m * ib);
  auto mat = memory.allocate<std::byte>("dp.matrix", n * m * elem_bytes(kind));
  DpBuffers d;
  d.bests = memory.allocate<BestCell>("dp.best", static_cast<std::size_t>(workers));
  d.args_block = memory.allocate<DpArgs>("dp.args", 1);
  d.args = DpArgs{in_a.base, in_b.base, mat.base, d.bests.base, 0, 0, n, m, kind, scoring};
  d.args_block[0] = d.args;
  return d;
}

// Copies the tiles back into the row-major matrix region for reporting.
void untile(SimMemory& memory, const DpArgs& a, const std::vector<std::size_t>& part) {
  const std::size_t eb = elem_bytes(a.kind);
  std::byte* mat = memory.view<std::byte>(a.mat, a.n * a.m * eb).data.data();
  for (std::size_t w = 0; w + 1 < part.size(); ++w) {
    const std::size_t width = part[w + 1] - part[w];
    if (width == 0) continue;
    for (std::size_t i = 0; i < a.n; ++i) {
      const std::byte* src = memory.view<std::byte>(tile_row(a, static_cast<int>(w), i), width * eb).data.data();
      std::memcpy(mat + (i * a.m + part[w]) * eb, src, width * eb);
    }
  }
}

Program dp_squire_host(SquireMachine& machine, DpBuffers* d, KernelCosts costs, BestCell* best) {
  const SimMemory* memory = &machine.memory();
  const std::uint32_t entry = kernel_entry(machine, "dp", costs, [memory](const KernelCosts& c) {
    return WorkerEntry([memory, c](std::uint64_t args) { return dp_worker(memory, c, args); });
  });
  const int w = machine.num_workers();
  const auto part = column_partition(d->args.m, w);
  int last = w - 1;
  while (part[static_cast<std::size_t>(last)] == part[static_cast<std::size_t>(last) + 1]) --last;
  std::size_t widest = 0;
  for (int i = 0; i < w; ++i) widest = std::max(widest, part[static_cast<std::size_t>(i) + 1] - part[static_cast<std::size_t>(i)]);
  const std::uint64_t line = machine.config().l1d.line_bytes;
  const std::uint64_t eb = elem_bytes(d->args.kind);
  d->args.tile_stride = (widest * eb + line - 1) / line * line;
  d->args.tiles = machine.memory().allocate_bytes("dp.tiles", static_cast<std::uint64_t>(w) * d->args.n * d->args.tile_stride);
  d->args_block[0] = d->args;
  co_await act::write(d->args_block.base, sizeof(DpArgs));
  co_await act::start_squire(entry, d->args_block.base);
  co_await act::wait_lcounter(last, d->args.n);
  if (d->args.kind == DpKind::Sw) {
    co_await act::read(d->bests.base, static_cast<std::uint64_t>(w) * sizeof(BestCell));
    co_await act::compute(static_cast<std::uint64_t>(w) * 3);
    BestCell b;
    for (int i = 0; i < w; ++i) {
      if (part[static_cast<std::size_t>(i)] == part[static_cast<std::size_t>(i) + 1]) continue;
      if (d->bests[static_cast<std::size_t>(i)].better_than(b)) b = d->bests[static_cast<std::size_t>(i)];
    }
    *best = b;
  } else {
    const std::uint64_t lw = part[static_cast<std::size_t>(last) + 1] - part[static_cast<std::size_t>(last)];
    co_await act::read(tile_row(d->args, last, d->args.n - 1) + (lw - 1) * sizeof(float), sizeof(float));
  }
  untile(machine.memory(), d->args, part);
}

Program dp_host(SquireMachine& machine, DpBuffers* d, KernelCosts costs, BestCell* best) {
  const DpArgs& a = d->args;
  const std::size_t eb = elem_bytes(a.kind);
  const std::size_t ib = input_bytes(a.kind);
  const std::uint64_t cell_ops = a.kind == DpKind::Dtw ? costs.dtw_cell_ops : costs.sw_cell_ops;
  std::byte* mat = machine.memory().view<std::byte>(a.mat, a.n * a.m * eb).data.data();
  const std::byte* in_a = machine.memory().view<std::byte>(a.a, a.n * ib).data.data();
  const std::byte* in_b = machine.memory().view<std::byte>(a.b, a.m * ib).data.data();
  BestCell b;
  for (std::size_t i = 0; i < a.n; ++i) {
    co_await act::read(a.a + i * ib, ib);
    co_await act::read(a.b, a.m * ib);
    if (i > 0) co_await act::read(a.mat + (i - 1) * a.m * eb, a.m * eb);
    if (a.kind == DpKind::Dtw) {
      dtw_row(reinterpret_cast<const float*>(in_a), reinterpret_cast<const float*>(in_b),
              reinterpret_cast<float*>(mat), a.m, i, 0, a.m);
    } else {
      sw_row(reinterpret_cast<const char*>(in_a), reinterpret_cast<const char*>(in_b),
             reinterpret_cast<std::int32_t*>(mat), a.m, i, 0, a.m, a.scoring, b);
    }
    co_await act::compute(a.m * cell_ops + costs.dp_row_ops);
    co_await act::write(a.mat + i * a.m * eb, a.m * eb);
  }
  *best = b;
}

template <class Cell>
std::vector<Cell> copy_matrix(const SimMemory& memory, const DpArgs& a) {
  const auto v = memory.view<Cell>(a.mat, a.n * a.m);
  return std::vector<Cell>(v.data.begin(), v.data.end());
}

template <class Make>
DtwRun run_dtw(SquireMachine& machine, std::span<const float> s, std::span<const float> r, Make make) {
  const auto mark = machine.memory().mark();
  DpBuffers d =
      allocate_dp(machine.memory(), DpKind::Dtw, s.data(), s.size(), r.data(), r.size(), machine.num_workers(), {});
  BestCell unused;
  DtwRun out;
  out.report = machine.run(make(&d, &unused));
  require_clean(out.report, "dtw");
  out.result.n = s.size();
  out.result.m = r.size();
  out.result.matrix = copy_matrix<float>(machine.memory(), d.args);
  out.result.distance = out.result.matrix.back();
  machine.release(mark);
  return out;
}

void fill_sw(SwResult* out, const SimMemory& memory, const DpArgs& a, const BestCell& best) {
  out->n = a.n;
  out->m = a.m;
  out->matrix = copy_matrix<std::int32_t>(memory, a);
  out->best = std::max(0, best.value);
  out->best_row = best.row;
  out->best_col = best.col;
}

}  // namespace

std::vector<std::size_t> column_partition(std::size_t m, int workers) {
  std::vector<std::size_t> starts(static_cast<std::size_t>(workers) + 1);
  for (int w = 0; w <= workers; ++w) {
    starts[static_cast<std::size_t>(w)] = static_cast<std::size_t>(w) * m / static_cast<std::size_t>(workers);
  }
  return starts;
}

DtwResult dtw_reference(std::span<const float> s, std::span<const float> r) {
  if (s.empty() || r.empty()) throw SimulationFault("dtw: empty input");
  DtwResult out;
  out.n = s.size();
  out.m = r.size();
  out.matrix.assign(out.n * out.m, 0.0f);
  for (std::size_t i = 0; i < out.n; ++i) dtw_row(s.data(), r.data(), out.matrix.data(), out.m, i, 0, out.m);
  out.distance = out.matrix.back();
  return out;
}

SwResult sw_reference(std::string_view a, std::string_view b, const SwScoring& scoring) {
  if (a.empty() || b.empty()) throw SimulationFault("sw: empty input");
  SwResult out;
  out.n = a.size();
  out.m = b.size();
  out.matrix.assign(out.n * out.m, 0);
  BestCell best;
  for (std::size_t i = 0; i < out.n; ++i) {
    sw_row(a.data(), b.data(), out.matrix.data(), out.m, i, 0, out.m, scoring, best);
  }
  out.best = std::max(0, best.value);
  out.best_row = best.row;
  out.best_col = best.col;
  return out;
}

DtwRun dtw_squire(SquireMachine& machine, std::span<const float> s, std::span<const float> r,
                  const KernelCosts& costs) {
  return run_dtw(machine, s, r, [&](DpBuffers* d, BestCell* b) { return dp_squire_host(machine, d, costs, b); });
}

DtwRun dtw_baseline(SquireMachine& machine, std::span<const float> s, std::span<const float> r,
                    const KernelCosts& costs) {
  return run_dtw(machine, s, r, [&](DpBuffers* d, BestCell* b) { return dp_host(machine, d, costs, b); });
}

Program sw_squire_program(SquireMachine& machine, std::string_view a, std::string_view b, SwScoring scoring,
                          KernelCosts costs, SwResult* out) {
  DpBuffers d =
      allocate_dp(machine.memory(), DpKind::Sw, a.data(), a.size(), b.data(), b.size(), machine.num_workers(), scoring);
  BestCell best;
  co_await dp_squire_host(machine, &d, costs, &best);
  fill_sw(out, machine.memory(), d.args, best);
}

Program sw_host_program(SquireMachine& machine, std::string_view a, std::string_view b, SwScoring scoring,
                        KernelCosts costs, SwResult* out) {
  DpBuffers d =
      allocate_dp(machine.memory(), DpKind::Sw, a.data(), a.size(), b.data(), b.size(), machine.num_workers(), scoring);
  BestCell best;
  co_await dp_host(machine, &d, costs, &best);
  fill_sw(out, machine.memory(), d.args, best);
}

namespace {
template <class Make>
SwRun run_sw(SquireMachine& machine, Make make) {
  const auto mark = machine.memory().mark();
  SwRun out;
  out.report = machine.run(make(&out.result));
  require_clean(out.report, "sw");
  machine.release(mark);
  return out;
}
}  // namespace

SwRun sw_squire(SquireMachine& machine, std::string_view a, std::string_view b, const SwScoring& scoring,
                const KernelCosts& costs) {
  return run_sw(machine, [&](SwResult* r) { return sw_squire_program(machine, a, b, scoring, costs, r); });
}

SwRun sw_baseline(SquireMachine& machine, std::string_view a, std::string_view b, const SwScoring& scoring,
                  const KernelCosts& costs) {
  return run_sw(machine, [&](SwResult* r) { return sw_host_program(machine, a, b, scoring, costs, r); });
}

}  // namespace squire
