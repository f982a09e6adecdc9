#include "squire/pipeline/mapper.hpp"

#include <algorithm>
#include <stdexcept>

namespace squire {

const std::vector<ReadProfile>& read_profiles() {
  static const std::vector<ReadProfile> profiles{
      {"ont", 0.85, 17710},
      {"pbclr", 0.88, 6739},
      {"pbhf", 0.9999, 12858},
  };
  return profiles;
}

const ReadProfile& read_profile(std::string_view name) {
  for (const auto& p : read_profiles()) {
    if (p.name == name) return p;
  }
  throw std::invalid_argument("unknown read profile '" + std::string(name) + "' (expected ont, pbclr or pbhf)");
}

ReferenceGenome ReferenceGenome::build(std::string name, std::string bases, int k, int w) {
  ReferenceGenome g;
  g.name = std::move(name);
  g.bases = std::move(bases);
  g.index = build_index(g.bases, k, w);
  return g;
}

std::vector<Read> generate_reads(std::string_view reference, std::size_t n, std::size_t avg_len, double accuracy,
                                 std::uint64_t seed) {
  if (avg_len == 0 || n == 0) throw std::invalid_argument("generate_reads: n and avg_len must be positive");
  if (avg_len > reference.size()) throw std::invalid_argument("generate_reads: avg_len exceeds reference length");
  if (!(accuracy > 0.5 && accuracy <= 1.0)) throw std::invalid_argument("generate_reads: accuracy must be in (0.5, 1]");
  Rng rng(seed);
  std::vector<Read> reads;
  reads.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = draw_size(rng, avg_len, std::max<std::size_t>(avg_len / 4, 32), reference.size());
    std::uniform_int_distribution<std::size_t> start(0, reference.size() - len);
    Read r;
    r.id = "read" + std::to_string(i);
    r.origin_start = start(rng);
    r.origin_end = r.origin_start + len;
    r.accuracy = accuracy;
    r.seq = mutate(rng, reference.substr(r.origin_start, len), accuracy, &r.errors);
    reads.push_back(std::move(r));
  }
  return reads;
}

std::vector<Read> longest_reads(std::vector<Read> reads, std::size_t count) {
  std::stable_sort(reads.begin(), reads.end(), [](const Read& a, const Read& b) { return a.seq.size() > b.seq.size(); });
  if (reads.size() > count) reads.resize(count);
  return reads;
}

const char* to_string(Backend b) { return b == Backend::Host ? "host" : "squire"; }

StageCycles& StageCycles::operator+=(const StageCycles& o) {
  seed += o.seed;
  chain += o.chain;
  align += o.align;
  total += o.total;
  return *this;
}

bool ReadMapping::same_mapping(const ReadMapping& o) const {
  return id == o.id && mapped == o.mapped && anchors == o.anchors && chain_anchors == o.chain_anchors &&
         chain_score == o.chain_score && second_pass == o.second_pass && align_score == o.align_score &&
         ref_start == o.ref_start && ref_end == o.ref_end;
}

namespace {

Program chain_stage(SquireMachine& machine, const std::vector<Anchor>& anchors, Backend backend,
                    const ChainParams& params, const KernelCosts& costs, ChainResult* out) {
  ChainBuffers b = allocate_chain_buffers(machine.memory(), anchors);
  if (backend == Backend::Squire) {
    co_await chain_squire_program(machine, &b, params, costs);
  } else {
    co_await chain_host_program(&b, params, costs);
  }
  *out = std::move(b.result);
}

}  // namespace

Program map_read_program(SquireMachine& machine, const ReferenceGenome& reference, const Read& read, Backend backend,
                         PipelineParams params, ReadMapping* out) {
  const std::uint32_t seed_id = machine.define_stage("seed");
  const std::uint32_t chain_id = machine.define_stage("chain");
  const std::uint32_t align_id = machine.define_stage("align");
  params.radix.costs = params.costs;
  out->id = read.id;

  co_await act::stage(seed_id);
  SeedOutput seeds;
  co_await seed_program(machine, read.seq, reference.index, backend == Backend::Squire, params.radix, &seeds);
  out->anchors = seeds.anchors.size();

  co_await act::stage(chain_id);
  ChainResult chains;
  if (!seeds.anchors.empty()) {
    co_await chain_stage(machine, seeds.anchors, backend, params.chain, params.costs, &chains);
    if (chains.chains.empty() && !(params.second_chain == params.chain)) {
      out->second_pass = true;
      co_await chain_stage(machine, seeds.anchors, backend, params.second_chain, params.costs, &chains);
    }
  }

  co_await act::stage(align_id);
  if (chains.chains.empty()) co_return;
  const Chain& best = chains.chains.front();
  std::uint64_t qlo = UINT64_MAX, qhi = 0, rlo = UINT64_MAX, rhi = 0;
  for (std::uint32_t idx : best.anchors) {
    const Anchor& a = seeds.anchors[idx];
    qlo = std::min<std::uint64_t>(qlo, a.qpos);
    qhi = std::max<std::uint64_t>(qhi, a.qpos);
    rlo = std::min<std::uint64_t>(rlo, a.rpos);
    rhi = std::max<std::uint64_t>(rhi, a.rpos);
  }
  const auto k = static_cast<std::uint64_t>(reference.index.k);
  const std::uint64_t qlen = read.seq.size();
  const std::uint64_t rlen = reference.bases.size();
  const std::uint64_t qs = qlo > params.margin ? qlo - params.margin : 0;
  const std::uint64_t qe = std::min(qlen, qhi + k + params.margin);
  const std::uint64_t rs = rlo > params.margin ? rlo - params.margin : 0;
  const std::uint64_t re = std::min(rlen, rhi + k + params.margin);
  const std::string_view qwin = std::string_view(read.seq).substr(qs, qe - qs);
  const std::string_view rwin = std::string_view(reference.bases).substr(rs, re - rs);
  SwResult sw;
  if (backend == Backend::Squire) {
    co_await sw_squire_program(machine, qwin, rwin, params.scoring, params.costs, &sw);
  } else {
    co_await sw_host_program(machine, qwin, rwin, params.scoring, params.costs, &sw);
  }
  out->mapped = true;
  out->chain_anchors = best.anchors.size();
  out->chain_score = best.score;
  out->align_score = sw.best;
  // Project the chain over the whole read.
  out->ref_start = rlo > qlo ? rlo - qlo : 0;
  out->ref_end = std::min(rlen, rhi + (qlen - qhi));
}

MappingResult map_reads(SquireMachine& machine, const ReferenceGenome& reference, const std::vector<Read>& reads,
                        Backend backend, const PipelineParams& params) {
  MappingResult result;
  result.backend = backend;
  result.workers = machine.num_workers();
  for (const Read& read : reads) {
    const auto mark = machine.memory().mark();
    ReadMapping m;
    const RunReport report = machine.run(map_read_program(machine, reference, read, backend, params, &m));
    require_clean(report, "pipeline read " + read.id);
    machine.release(mark);
    m.cycles.seed = report.stage_cycles("seed");
    m.cycles.chain = report.stage_cycles("chain");
    m.cycles.align = report.stage_cycles("align");
    m.cycles.total = report.cycles_total;
    m.worker_instructions = report.worker_instructions();
    m.worker_l1_misses = report.worker_l1_misses();
    result.totals += m.cycles;
    result.reads.push_back(std::move(m));
  }
  return result;
}

double truth_overlap(const Read& read, const ReadMapping& mapping) {
  if (!mapping.mapped || read.origin_end <= read.origin_start) return 0.0;
  const std::uint64_t lo = std::max(read.origin_start, mapping.ref_start);
  const std::uint64_t hi = std::min(read.origin_end, mapping.ref_end);
  if (hi <= lo) return 0.0;
  return static_cast<double>(hi - lo) / static_cast<double>(read.origin_end - read.origin_start);
}

StageShares stage_shares(const StageCycles& c) {
  if (c.total == 0) return {};
  const auto t = static_cast<double>(c.total);
  return {static_cast<double>(c.seed) / t, static_cast<double>(c.chain) / t, static_cast<double>(c.align) / t};
}

PipelineSpeedup pipeline_speedup(const MappingResult& baseline, const MappingResult& squire) {
  auto ratio = [](std::uint64_t h, std::uint64_t s) {
    if (s == 0) return h == 0 ? 1.0 : 0.0;
    return static_cast<double>(h) / static_cast<double>(s);
  };
  const StageCycles& h = baseline.totals;
  const StageCycles& s = squire.totals;
  return {ratio(h.seed, s.seed), ratio(h.chain, s.chain), ratio(h.align, s.align), ratio(h.total, s.total)};
}

}  // namespace squire
