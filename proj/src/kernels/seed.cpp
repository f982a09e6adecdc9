#include "squire/kernels/seed.hpp"

#include <deque>

namespace squire {

int base_code(char c) {
  switch (c) {
    case 'A': case 'a': return 0;
    case 'C': case 'c': return 1;
    case 'G': case 'g': return 2;
    case 'T': case 't': return 3;
    default: return -1;
  }
}

std::string decode_kmer(std::uint64_t kmer, int k) {
  static constexpr char kBases[] = "ACGT";
  std::string s(static_cast<std::size_t>(k), 'A');
  for (int i = k - 1; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = kBases[kmer & 3];
    kmer >>= 2;
  }
  return s;
}

std::vector<Minimizer> minimizers(std::string_view seq, int k, int w) {
  if (k < 1 || k > 32 || w < 1) throw SimulationFault("minimizers: need 1 <= k <= 32 and w >= 1");
  std::vector<Minimizer> out;
  if (seq.size() < static_cast<std::size_t>(k)) return out;
  const std::uint64_t mask = k == 32 ? ~std::uint64_t{0} : (std::uint64_t{1} << (2 * k)) - 1;
  const std::size_t kmers = seq.size() - static_cast<std::size_t>(k) + 1;
  std::deque<Minimizer> window;  // increasing kmer, ties keep the earlier position in front
  std::uint64_t kmer = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const int code = base_code(seq[i]);
    if (code < 0) throw SimulationFault("minimizers: non-ACGT base at offset " + std::to_string(i));
    kmer = ((kmer << 2) | static_cast<std::uint64_t>(code)) & mask;
    if (i + 1 < static_cast<std::size_t>(k)) continue;
    const auto pos = static_cast<std::uint32_t>(i + 1 - static_cast<std::size_t>(k));
    while (!window.empty() && window.back().kmer > kmer) window.pop_back();
    window.push_back(Minimizer{kmer, pos});
    // Window ending at k-mer `pos` covers [pos - w + 1, pos]; a short sequence
    // contributes a single window over all of its k-mers.
    const std::size_t span = std::min<std::size_t>(static_cast<std::size_t>(w), kmers);
    if (pos + 1 < span) continue;
    const std::uint64_t first = pos + 1 - span;
    while (window.front().pos < first) window.pop_front();
    if (out.empty() || out.back().kmer != window.front().kmer) out.push_back(window.front());
  }
  return out;
}

MinimizerIndex build_index(std::string_view reference, int k, int w) {
  MinimizerIndex index;
  index.k = k;
  index.w = w;
  for (const Minimizer& m : minimizers(reference, k, w)) {
    index.positions[m.kmer].push_back(m.pos);
    ++index.minimizer_count;
  }
  return index;
}

std::vector<std::uint64_t> collect_anchor_keys(std::string_view query, const MinimizerIndex& index,
                                               std::size_t* query_minimizers) {
  std::vector<std::uint64_t> keys;
  const auto mins = minimizers(query, index.k, index.w);
  if (query_minimizers != nullptr) *query_minimizers = mins.size();
  for (const Minimizer& m : mins) {
    const auto it = index.positions.find(m.kmer);
    if (it == index.positions.end()) continue;
    for (std::uint32_t rpos : it->second) keys.push_back(Anchor{m.pos, rpos}.key());
  }
  return keys;
}

std::vector<Anchor> seed_reference(std::string_view query, const MinimizerIndex& index) {
  const auto sorted = radix_reference(collect_anchor_keys(query, index));
  std::vector<Anchor> anchors;
  anchors.reserve(sorted.size());
  for (std::uint64_t key : sorted) anchors.push_back(Anchor::from_key(key));
  return anchors;
}

Program seed_program(SquireMachine& machine, std::string_view query, const MinimizerIndex& index, bool use_squire,
                     RadixOptions options, SeedOutput* out) {
  const KernelCosts& c = options.costs;
  auto q = machine.memory().allocate<char>("seed.query", std::max<std::size_t>(query.size(), 1));
  std::copy(query.begin(), query.end(), q.data.begin());
  std::size_t nmins = 0;
  const std::vector<std::uint64_t> keys = collect_anchor_keys(query, index, &nmins);
  co_await act::read(q.base, std::max<std::size_t>(query.size(), 1));
  co_await act::compute(std::max<std::uint64_t>(1, query.size() * c.minimizer_ops_per_base));
  co_await act::compute(std::max<std::uint64_t>(1, nmins * c.index_lookup_ops + keys.size() * c.anchor_emit_ops));
  out->buffers = RadixBuffers::allocate(machine.memory(), keys);
  if (!keys.empty()) {
    co_await act::write(out->buffers.keys.base, keys.size() * sizeof(std::uint64_t));
    if (use_squire) {
      co_await radix_squire_program(machine, &out->buffers, options);
    } else {
      co_await radix_host_program(&out->buffers, c);
    }
  }
  out->offloaded = out->buffers.offloaded;
  out->anchors.clear();
  out->anchors.reserve(keys.size());
  for (std::uint64_t key : out->buffers.sorted()) out->anchors.push_back(Anchor::from_key(key));
}

namespace {
SeedRun run_seed(SquireMachine& machine, std::string_view query, const MinimizerIndex& index, bool use_squire,
                 const RadixOptions& options) {
  const auto mark = machine.memory().mark();
  SeedOutput out;
  SeedRun run;
  run.report = machine.run(seed_program(machine, query, index, use_squire, options, &out));
  require_clean(run.report, "seed");
  run.anchors = std::move(out.anchors);
  run.offloaded = out.offloaded;
  machine.release(mark);
  return run;
}
}  // namespace

SeedRun seed_squire(SquireMachine& machine, std::string_view query, const MinimizerIndex& index,
                    const RadixOptions& options) {
  return run_seed(machine, query, index, true, options);
}

SeedRun seed_baseline(SquireMachine& machine, std::string_view query, const MinimizerIndex& index,
                      const KernelCosts& costs) {
  RadixOptions options;
  options.costs = costs;
  return run_seed(machine, query, index, false, options);
}

}  // namespace squire
