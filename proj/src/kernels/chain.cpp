#include "squire/kernels/chain.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

namespace squire {

namespace {

struct ChainArgs {
  std::uint64_t anchors = 0;
  std::uint64_t f = 0;
  std::uint64_t pred = 0;
  std::uint64_t aux = 0;  // num_workers * T doubles, one private slice per worker
  std::uint64_t count = 0;
  ChainParams params;
};

std::int64_t delta(std::uint32_t a, std::uint32_t b) { return static_cast<std::int64_t>(a) - b; }

std::uint64_t gap_of(const Anchor& ai, const Anchor& aj) {
  const std::int64_t g = delta(ai.rpos, aj.rpos) - delta(ai.qpos, aj.qpos);
  return static_cast<std::uint64_t>(g < 0 ? -g : g);
}

std::size_t window_start(std::size_t i, std::uint32_t T) { return i >= T ? i - T : 0; }

// Backtracking cost: sort by score plus one walk over the predecessors.
std::uint64_t backtrack_ops(std::size_t n) { return n * (2 * ceil_log2(n) + 4); }

Program chain_worker(const SimMemory* memory, KernelCosts costs, std::uint64_t args) {
  co_await act::read(args, sizeof(ChainArgs));
  const ChainArgs a = memory->view<ChainArgs>(args, 1)[0];
  const std::uint64_t id = co_await act::id_worker();
  const std::uint64_t w = co_await act::num_workers();
  const ChainParams& p = a.params;
  const auto anchors = memory->view<std::uint64_t>(a.anchors, a.count);
  const auto f = memory->view<double>(a.f, a.count);
  const auto pred = memory->view<std::int32_t>(a.pred, a.count);
  const auto aux = memory->view<double>(a.aux + id * p.T * sizeof(double), p.T);
  for (std::uint64_t i = id; i < a.count; i += w) {
    const std::size_t lo = window_start(i, p.T);
    const std::size_t cnt = i - lo;
    const Anchor ai = Anchor::from_key(anchors[i]);
    // Pass 1: dependency-free match-ups.
    co_await act::read(anchors.addr(lo), (cnt + 1) * sizeof(std::uint64_t));
    for (std::size_t j = lo; j < i; ++j) aux[j - lo] = chain_matchup(ai, Anchor::from_key(anchors[j]), p);
    if (cnt > 0) {
      co_await act::compute(cnt * costs.chain_matchup_ops);
      co_await act::write(aux.base, cnt * sizeof(double));
      co_await act::read(aux.base, cnt * sizeof(double));
    }
    // Pass 2: consume F[j] once it is committed.
    double best = p.k;
    std::int32_t best_j = -1;
    for (std::size_t j = lo; j < i; ++j) {
      const double s = aux[j - lo];
      if (s == kChainSentinel) continue;
      co_await act::wait_gcounter(j + 1);
      co_await act::read(f.addr(j), sizeof(double));
      const double v = f[j] + s;
      if (v > best) {
        best = v;
        best_j = static_cast<std::int32_t>(j);
      }
      co_await act::compute(costs.chain_combine_ops);
    }
    co_await act::compute(costs.chain_anchor_ops);
    f[i] = best;
    pred[i] = best_j;
    co_await act::write(f.addr(i), sizeof(double));
    co_await act::write(pred.addr(i), sizeof(std::int32_t));
    co_await act::inc_gcounter();
  }
  co_await act::stop_worker();
}

Program backtrack_program(ChainBuffers* b, ChainParams params) {
  const std::size_t n = b->f.size();
  b->result.f.assign(b->f.data.begin(), b->f.data.end());
  b->result.pred.assign(b->pred.data.begin(), b->pred.data.end());
  b->result.chains = chain_backtrack(b->result.f, b->result.pred, params.min_chain_score);
  b->result.params = params;
  if (n == 0) co_return;
  co_await act::read(b->f.base, n * sizeof(double));
  co_await act::read(b->pred.base, n * sizeof(std::int32_t));
  co_await act::compute(backtrack_ops(n));
}

}  // namespace

double chain_alpha(const Anchor& ai, const Anchor& aj, const ChainParams& p) {
  const std::int64_t dr = delta(ai.rpos, aj.rpos);
  const std::int64_t dq = delta(ai.qpos, aj.qpos);
  if (dr <= 0 || dq <= 0) return kChainSentinel;
  return std::min({static_cast<double>(dr), static_cast<double>(dq), p.k});
}

double chain_beta(const Anchor& ai, const Anchor& aj, const ChainParams& p) {
  const std::uint64_t gap = gap_of(ai, aj);
  const auto log_term = static_cast<double>(std::bit_width(gap + 1) - 1);
  return p.c1 * static_cast<double>(gap) + p.c2 * log_term;
}

double chain_matchup(const Anchor& ai, const Anchor& aj, const ChainParams& p) {
  const double alpha = chain_alpha(ai, aj, p);
  if (alpha == kChainSentinel) return kChainSentinel;
  const double beta = chain_beta(ai, aj, p);
  if (beta > p.cutoff) return kChainSentinel;
  return alpha - beta;
}

std::vector<Chain> chain_backtrack(const std::vector<double>& f, const std::vector<std::int32_t>& pred,
                                   double min_score) {
  std::vector<std::uint32_t> order(f.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return f[a] > f[b]; });
  std::vector<bool> used(f.size(), false);
  std::vector<Chain> chains;
  for (std::uint32_t end : order) {
    if (f[end] < min_score) break;
    if (used[end]) continue;
    Chain c;
    std::int64_t j = end;
    while (j >= 0 && !used[static_cast<std::size_t>(j)]) {
      used[static_cast<std::size_t>(j)] = true;
      c.anchors.push_back(static_cast<std::uint32_t>(j));
      j = pred[static_cast<std::size_t>(j)];
    }
    c.score = f[end] - (j >= 0 ? f[static_cast<std::size_t>(j)] : 0.0);
    if (c.score >= min_score) chains.push_back(std::move(c));
  }
  return chains;
}

ChainResult chain_reference(std::span<const Anchor> anchors, const ChainParams& params) {
  if (params.T < 1) throw SimulationFault("chain: T must be at least 1");
  ChainResult r;
  r.params = params;
  const std::size_t n = anchors.size();
  r.f.resize(n);
  r.pred.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = params.k;
    std::int32_t best_j = -1;
    for (std::size_t j = window_start(i, params.T); j < i; ++j) {
      const double s = chain_matchup(anchors[i], anchors[j], params);
      if (s == kChainSentinel) continue;
      const double v = r.f[j] + s;
      if (v > best) {
        best = v;
        best_j = static_cast<std::int32_t>(j);
      }
    }
    r.f[i] = best;
    r.pred[i] = best_j;
  }
  r.chains = chain_backtrack(r.f, r.pred, params.min_chain_score);
  return r;
}

ChainBuffers allocate_chain_buffers(SimMemory& memory, std::span<const Anchor> anchors) {
  ChainBuffers b;
  const std::size_t n = std::max<std::size_t>(anchors.size(), 1);
  b.anchors = memory.allocate<std::uint64_t>("chain.anchors", n);
  b.f = memory.allocate<double>("chain.f", n);
  b.pred = memory.allocate<std::int32_t>("chain.pred", n);
  for (std::size_t i = 0; i < anchors.size(); ++i) b.anchors[i] = anchors[i].key();
  b.anchors.data = b.anchors.data.first(anchors.size());
  b.f.data = b.f.data.first(anchors.size());
  b.pred.data = b.pred.data.first(anchors.size());
  return b;
}

Program chain_squire_program(SquireMachine& machine, ChainBuffers* b, ChainParams params, KernelCosts costs) {
  if (params.T < 1) throw SimulationFault("chain: T must be at least 1");
  const std::uint64_t n = b->anchors.size();
  if (n > 0) {
    const SimMemory* memory = &machine.memory();
    const std::uint32_t entry = kernel_entry(machine, "chain", costs, [memory](const KernelCosts& c) {
      return WorkerEntry([memory, c](std::uint64_t args) { return chain_worker(memory, c, args); });
    });
    const auto w = static_cast<std::uint64_t>(machine.num_workers());
    auto aux = machine.memory().allocate<double>("chain.aux", w * params.T);
    auto args = machine.memory().allocate<ChainArgs>("chain.args", 1);
    args[0] = ChainArgs{b->anchors.base, b->f.base, b->pred.base, aux.base, n, params};
    co_await act::write(args.base, sizeof(ChainArgs));
    co_await act::start_squire(entry, args.base);
    co_await act::wait_gcounter(n);
  }
  co_await backtrack_program(b, params);
}

Program chain_host_program(ChainBuffers* b, ChainParams params, KernelCosts costs) {
  if (params.T < 1) throw SimulationFault("chain: T must be at least 1");
  const std::size_t n = b->anchors.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = window_start(i, params.T);
    const std::size_t cnt = i - lo;
    const Anchor ai = Anchor::from_key(b->anchors[i]);
    double best = params.k;
    std::int32_t best_j = -1;
    std::uint64_t valid = 0;
    for (std::size_t j = lo; j < i; ++j) {
      const double s = chain_matchup(ai, Anchor::from_key(b->anchors[j]), params);
      if (s == kChainSentinel) continue;
      const double v = b->f[j] + s;
      if (v > best) {
        best = v;
        best_j = static_cast<std::int32_t>(j);
      }
      ++valid;
    }
    b->f[i] = best;
    b->pred[i] = best_j;
    co_await act::read(b->anchors.addr(lo), (cnt + 1) * sizeof(std::uint64_t));
    if (cnt > 0) co_await act::read(b->f.addr(lo), cnt * sizeof(double));
    co_await act::compute(cnt * costs.chain_matchup_ops + valid * costs.chain_combine_ops + costs.chain_anchor_ops);
    co_await act::write(b->f.addr(i), sizeof(double));
    co_await act::write(b->pred.addr(i), sizeof(std::int32_t));
  }
  co_await backtrack_program(b, params);
}

namespace {
template <class Make>
ChainRun run_chain(SquireMachine& machine, std::span<const Anchor> anchors, Make make) {
  const auto mark = machine.memory().mark();
  ChainBuffers b = allocate_chain_buffers(machine.memory(), anchors);
  ChainRun out;
  out.report = machine.run(make(&b));
  require_clean(out.report, "chain");
  out.result = std::move(b.result);
  machine.release(mark);
  return out;
}
}  // namespace

ChainRun chain_squire(SquireMachine& machine, std::span<const Anchor> anchors, const ChainParams& params,
                      const KernelCosts& costs) {
  return run_chain(machine, anchors, [&](ChainBuffers* b) { return chain_squire_program(machine, b, params, costs); });
}

ChainRun chain_baseline(SquireMachine& machine, std::span<const Anchor> anchors, const ChainParams& params,
                        const KernelCosts& costs) {
  return run_chain(machine, anchors, [&](ChainBuffers* b) { return chain_host_program(b, params, costs); });
}

ChainDivergence chain_divergence(std::span<const Anchor> anchors, ChainParams params, std::uint32_t wide,
                                 std::uint32_t narrow) {
  params.T = wide;
  const ChainResult a = chain_reference(anchors, params);
  params.T = narrow;
  const ChainResult b = chain_reference(anchors, params);
  ChainDivergence d;
  d.anchors = anchors.size();
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    d.score_differs += a.f[i] != b.f[i] ? 1 : 0;
    d.pred_differs += a.pred[i] != b.pred[i] ? 1 : 0;
  }
  auto endpoints = [](const ChainResult& r) {
    if (r.chains.empty()) return std::pair<std::int64_t, std::int64_t>{-1, -1};
    const auto& c = r.chains.front().anchors;
    return std::pair<std::int64_t, std::int64_t>{c.front(), c.back()};
  };
  d.best_chain_endpoints_differ = endpoints(a) != endpoints(b);
  return d;
}

}  // namespace squire
