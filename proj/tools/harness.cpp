#include "harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "squire/kernels/chain.hpp"
#include "squire/kernels/dp.hpp"
#include "squire/kernels/inputs.hpp"
#include "squire/kernels/radix.hpp"
#include "squire/kernels/seed.hpp"
#include "squire/pipeline/fasta.hpp"
#include "squire/pipeline/mapper.hpp"

namespace squire::harness {

namespace {

using Entries = std::vector<std::pair<std::string, std::string>>;

const Entries kMachineKeys{
    {"scheduler_seed", "0"},  {"jitter", "0"},           {"issue_width", "2"},
    {"host_ipc_factor", "3"}, {"l1d_kib", "8"},          {"l1d_assoc", "4"},
    {"sync_backend", "hardware-counters"}, {"lock_cycles", "30"},
};

Entries with_machine(Entries e) {
  e.insert(e.end(), kMachineKeys.begin(), kMachineKeys.end());
  return e;
}

Entries subcommand_defaults(const std::string& sub) {
  if (sub == "kernel") {
    return with_machine({{"seed", "1"},
                         {"format", "json"},
                         {"kernel", "dtw"},
                         {"workers", "4,8,16,32"},
                         {"reps", "1"},
                         {"size", "0"},
                         {"size_jitter", "0"},
                         {"offload_threshold", "10000"},
                         {"chain_t", "64"},
                         {"divergence", "1"},
                         {"seed_ref_size", "1000000"},
                         {"seed_accuracy", "0.9999"},
                         {"sw_accuracy", "0.88"}});
  }
  if (sub == "syncbench") {
    return with_machine({{"seed", "1"},
                         {"format", "json"},
                         {"workers", "1,4,8,16"},
                         {"reps", "1"},
                         {"size", "0"},
                         {"lock_sweep", "10,20,30,40,50,60,70,80,90,100"},
                         {"sweep_workers", "16"},
                         {"target_ratio", "1.69"}});
  }
  if (sub == "cache-sweep") {
    return with_machine({{"seed", "1"},
                         {"format", "csv"},
                         {"sizes_kib", "1,2,4,8,16"},
                         {"workers", "16"},
                         {"profile", "pbhf"},
                         {"reads", "60"},
                         {"select", "18"},
                         {"ref_size", "1000000"},
                         {"read_scale", "0.1"},
                         {"knee_tolerance", "0.10"},
                         {"offload_threshold", "10000"}});
  }
  if (sub == "pipeline") {
    return with_machine({{"seed", "1"},
                         {"format", "json"},
                         {"profiles", "ont,pbclr,pbhf"},
                         {"workers", "4,16"},
                         {"backend", "both"},
                         {"reads", "60"},
                         {"select", "18"},
                         {"ref_size", "1000000"},
                         {"read_scale", "0.1"},
                         {"reference_fasta", ""},
                         {"reads_fasta", ""},
                         {"k", "15"},
                         {"w", "10"},
                         {"margin", "64"},
                         {"offload_threshold", "10000"},
                         {"chain_t", "64"},
                         {"chain2_t", "64"},
                         {"chain2_cutoff", "5000"},
                         {"chain2_min_score", "40"}});
  }
  throw std::invalid_argument("unknown subcommand '" + sub + "' (expected kernel, syncbench, cache-sweep or pipeline)");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent deterministic stream per (experiment seed, purpose, index).
std::uint64_t derive(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  return splitmix(splitmix(splitmix(seed) ^ tag) ^ index);
}

enum Tag : std::uint64_t { kTagInput = 1, kTagReference = 2, kTagReads = 3 };

SquireConfig machine_config(const Spec& s, int workers) {
  SquireConfig c;
  c.num_workers = workers;
  c.scheduler_seed = s.get_u64("scheduler_seed");
  c.schedule_jitter = static_cast<std::uint32_t>(s.get_u64("jitter"));
  c.worker_issue_width = static_cast<int>(s.get_int("issue_width"));
  c.host_ipc_factor = s.get_double("host_ipc_factor");
  c.l1d.size_bytes = static_cast<std::uint32_t>(s.get_u64("l1d_kib") * 1024);
  c.l1d.assoc = static_cast<std::uint32_t>(s.get_u64("l1d_assoc"));
  c.sync_backend = sync_backend_from_string(s.get("sync_backend"));
  c.lock_acquire_cycles = static_cast<std::uint32_t>(s.get_u64("lock_cycles"));
  c.validate();
  return c;
}

Json opt_number(std::optional<double> v) { return v ? Json(*v) : Json(nullptr); }

double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::uint64_t worker_wait(const RunReport& r) {
  std::uint64_t t = 0;
  for (const auto& w : r.per_worker) t += w.wait;
  return t;
}

Json run_stats(const RunReport& r) {
  Json j;
  j["worker_active_cycles"] = r.worker_active_cycles();
  j["worker_wait_cycles"] = worker_wait(r);
  j["worker_instructions"] = r.worker_instructions();
  j["worker_l1_misses"] = r.worker_l1_misses();
  j["worker_mpki"] = opt_number(r.worker_mpki());
  j["arbiter_grants"] = r.arbiter_grants;
  j["gcounter_max_pending"] = r.gcounter.max_pending;
  j["coherence_violations"] = r.coherence_violations;
  return j;
}

// ---------------------------------------------------------------- kernel

struct KernelInstance {
  std::size_t size = 0;
  std::vector<std::uint64_t> keys;
  std::string query;
  std::vector<Anchor> anchors;
  std::string a, b;
  std::vector<float> s, r;
};

std::size_t kernel_mean(const std::string& kernel) {
  if (kernel == "radix") return KernelScale::radix_keys;
  if (kernel == "seed") return KernelScale::seed_query_bp;
  if (kernel == "chain") return KernelScale::chain_anchors;
  if (kernel == "sw") return KernelScale::sw_bp;
  return KernelScale::dtw_samples;
}

std::size_t kernel_minimum(const std::string& kernel) {
  if (kernel == "seed") return 100;
  if (kernel == "sw" || kernel == "dtw") return 16;
  return 1;
}

std::size_t draw_instance_size(Rng& rng, std::size_t mean, double jitter, std::size_t minimum) {
  if (jitter <= 0) return mean;
  std::normal_distribution<double> d(static_cast<double>(mean), jitter * static_cast<double>(mean));
  const double v = std::round(d(rng));
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(0.0, v)), std::max(minimum, mean / 2), mean * 2);
}

struct KernelRunner {
  const Spec& spec;
  std::string kernel;
  std::optional<ReferenceGenome> seed_ref;

  explicit KernelRunner(const Spec& s) : spec(s), kernel(s.get("kernel")) {
    if (kernel == "seed") {
      seed_ref = ReferenceGenome::build(
          "synthetic", synthetic_reference(derive(s.get_u64("seed"), kTagReference, 0), s.get_u64("seed_ref_size")));
    }
  }

  std::size_t mean() const {
    const std::size_t v = spec.get_u64("size");
    return v == 0 ? kernel_mean(kernel) : v;
  }

  KernelInstance make(std::size_t rep) const {
    Rng rng(derive(spec.get_u64("seed"), kTagInput, rep));
    KernelInstance in;
    in.size = draw_instance_size(rng, mean(), spec.get_double("size_jitter"), kernel_minimum(kernel));
    if (kernel == "radix") {
      in.keys = random_keys(rng, in.size);
    } else if (kernel == "seed") {
      const auto& ref = seed_ref->bases;
      const std::size_t len = std::min(in.size, ref.size());
      std::uniform_int_distribution<std::size_t> start(0, ref.size() - len);
      in.query = mutate(rng, std::string_view(ref).substr(start(rng), len), spec.get_double("seed_accuracy"));
    } else if (kernel == "chain") {
      in.anchors = random_anchors(rng, in.size);
    } else if (kernel == "sw") {
      in.a = random_dna(rng, in.size);
      in.b = mutate(rng, in.a, spec.get_double("sw_accuracy"));
    } else {
      std::tie(in.s, in.r) = random_signal_pair(rng, in.size, in.size);
    }
    return in;
  }

  ChainParams chain_params() const {
    ChainParams p;
    p.T = static_cast<std::uint32_t>(spec.get_u64("chain_t"));
    return p;
  }

  RadixOptions radix_options() const {
    RadixOptions o;
    o.offload_threshold = spec.get_u64("offload_threshold");
    return o;
  }

  // Runs baseline and Squire for one instance and worker count; fills row.
  void run(const KernelInstance& in, int workers, Json& row) const {
    SquireMachine base_m(machine_config(spec, workers));
    SquireMachine sq_m(machine_config(spec, workers));
    RunReport base, sq;
    bool match = false;
    bool offloaded = true;
    if (kernel == "radix") {
      const auto b = radix_baseline(base_m, in.keys);
      const auto s = radix_squire(sq_m, in.keys, radix_options());
      match = b.sorted == s.sorted && s.sorted == radix_reference(in.keys);
      offloaded = s.offloaded;
      base = b.report;
      sq = s.report;
    } else if (kernel == "seed") {
      const auto b = seed_baseline(base_m, in.query, seed_ref->index);
      const auto s = seed_squire(sq_m, in.query, seed_ref->index, radix_options());
      match = b.anchors == s.anchors && s.anchors == seed_reference(in.query, seed_ref->index);
      offloaded = s.offloaded;
      row["anchors"] = s.anchors.size();
      base = b.report;
      sq = s.report;
    } else if (kernel == "chain") {
      const auto p = chain_params();
      const auto b = chain_baseline(base_m, in.anchors, p);
      const auto s = chain_squire(sq_m, in.anchors, p);
      match = b.result == s.result && s.result == chain_reference(in.anchors, p);
      row["chains"] = s.result.chains.size();
      base = b.report;
      sq = s.report;
    } else if (kernel == "sw") {
      const auto b = sw_baseline(base_m, in.a, in.b);
      const auto s = sw_squire(sq_m, in.a, in.b);
      match = b.result == s.result && s.result == sw_reference(in.a, in.b);
      row["best_score"] = s.result.best;
      base = b.report;
      sq = s.report;
    } else {
      const auto b = dtw_baseline(base_m, in.s, in.r);
      const auto s = dtw_squire(sq_m, in.s, in.r);
      match = b.result == s.result && s.result == dtw_reference(in.s, in.r);
      row["distance"] = s.result.distance;
      base = b.report;
      sq = s.report;
    }
    row["baseline_cycles"] = base.cycles_total;
    row["squire_cycles"] = sq.cycles_total;
    row["speedup"] = ratio(base.cycles_total, sq.cycles_total);
    row["matches_reference"] = match;
    row["offloaded"] = offloaded;
    row.update(run_stats(sq));
  }
};

void run_kernel(const Spec& spec, Outcome& out) {
  KernelRunner runner(spec);
  const auto workers = spec.get_ints("workers");
  const std::size_t reps = spec.get_u64("reps");
  Json rows = Json::array();
  Json faults = Json::array();
  Json divergence = Json::array();
  std::vector<double> sum(workers.size(), 0.0);
  std::vector<std::size_t> count(workers.size(), 0);
  for (std::size_t rep = 0; rep < reps; ++rep) {
    const KernelInstance in = runner.make(rep);
    if (runner.kernel == "chain" && spec.get_int("divergence") != 0) {
      const auto d = chain_divergence(in.anchors, runner.chain_params(), kBaselineChainWindow,
                                      static_cast<std::uint32_t>(spec.get_u64("chain_t")));
      divergence.push_back(Json{{"rep", rep},
                                {"anchors", d.anchors},
                                {"score_differs", d.score_differs},
                                {"pred_differs", d.pred_differs},
                                {"best_chain_endpoints_differ", d.best_chain_endpoints_differ}});
    }
    for (std::size_t wi = 0; wi < workers.size(); ++wi) {
      const int w = static_cast<int>(workers[wi]);
      Json row;
      row["kernel"] = runner.kernel;
      row["rep"] = rep;
      row["workers"] = w;
      row["input_size"] = in.size;
      try {
        runner.run(in, w, row);
        if (!row["matches_reference"].get<bool>()) {
          faults.push_back(Json{{"rep", rep}, {"workers", w}, {"error", "output differs from reference"}});
        }
        sum[wi] += row["speedup"].get<double>();
        ++count[wi];
        rows.push_back(std::move(row));
      } catch (const std::exception& e) {
        faults.push_back(Json{{"rep", rep}, {"workers", w}, {"error", e.what()}});
      }
    }
  }
  Json per_w = Json::array();
  for (std::size_t wi = 0; wi < workers.size(); ++wi) {
    per_w.push_back(Json{{"workers", workers[wi]},
                         {"mean_speedup", count[wi] == 0 ? Json(nullptr) : Json(sum[wi] / static_cast<double>(count[wi]))}});
  }
  out.report["rows"] = std::move(rows);
  out.report["summary"] = Json{{"mean_speedup_by_workers", std::move(per_w)}};
  if (runner.kernel == "chain" && spec.get_int("divergence") != 0) out.report["summary"]["divergence"] = divergence;
  out.report["faults"] = std::move(faults);
}

// ---------------------------------------------------------------- syncbench

void run_syncbench(const Spec& spec, Outcome& out) {
  const std::size_t reps = spec.get_u64("reps");
  const std::size_t size = spec.get_u64("size") == 0 ? KernelScale::dtw_samples : spec.get_u64("size");
  std::vector<std::pair<std::vector<float>, std::vector<float>>> inputs;
  for (std::size_t rep = 0; rep < reps; ++rep) {
    Rng rng(derive(spec.get_u64("seed"), kTagInput, rep));
    inputs.push_back(random_signal_pair(rng, size, size));
  }
  Json rows = Json::array();
  Json faults = Json::array();
  auto measure = [&](int workers, std::uint64_t lock, Json& row) {
    std::uint64_t hw = 0, sw = 0;
    for (const auto& [s, r] : inputs) {
      SquireConfig hc = machine_config(spec, workers);
      hc.sync_backend = SyncBackend::HardwareCounters;
      SquireConfig sc = hc;
      sc.sync_backend = SyncBackend::SoftwareLock;
      sc.lock_acquire_cycles = static_cast<std::uint32_t>(lock);
      SquireMachine hm(hc), sm(sc);
      const auto a = dtw_squire(hm, s, r);
      const auto b = dtw_squire(sm, s, r);
      if (!(a.result == b.result) || !(a.result == dtw_reference(s, r))) {
        throw SimulationFault("dtw output differs between sync backends");
      }
      hw += a.report.cycles_total;
      sw += b.report.cycles_total;
    }
    row["hw_cycles"] = hw;
    row["lock_cycles_total"] = sw;
    row["ratio"] = ratio(sw, hw);
  };
  const auto base_lock = spec.get_u64("lock_cycles");
  std::vector<double> by_workers;
  for (std::int64_t w : spec.get_ints("workers")) {
    Json row{{"series", "workers"}, {"workers", w}, {"lock_cost", base_lock}};
    try {
      measure(static_cast<int>(w), base_lock, row);
      by_workers.push_back(row["ratio"].get<double>());
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      faults.push_back(Json{{"workers", w}, {"error", e.what()}});
    }
  }
  std::vector<double> sweep;
  const auto sweep_w = spec.get_int("sweep_workers");
  for (std::int64_t lock : spec.get_ints("lock_sweep")) {
    Json row{{"series", "lock_cost"}, {"workers", sweep_w}, {"lock_cost", lock}};
    try {
      measure(static_cast<int>(sweep_w), static_cast<std::uint64_t>(lock), row);
      sweep.push_back(row["ratio"].get<double>());
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      faults.push_back(Json{{"lock_cost", lock}, {"error", e.what()}});
    }
  }
  // Monotonicity is judged over the counts with more than one worker.
  bool monotone = true;
  double prev = -1;
  const auto ws = spec.get_ints("workers");
  for (std::size_t i = 0; i < by_workers.size() && i < ws.size(); ++i) {
    if (ws[i] < 2) continue;
    if (by_workers[i] < prev) monotone = false;
    prev = by_workers[i];
  }
  const double target = spec.get_double("target_ratio");
  Json summary;
  summary["ratio_non_decreasing"] = monotone;
  summary["hw_never_slower"] = std::all_of(by_workers.begin(), by_workers.end(), [](double r) { return r >= 1.0; });
  summary["target_ratio"] = target;
  if (!sweep.empty()) {
    const auto [lo, hi] = std::minmax_element(sweep.begin(), sweep.end());
    summary["sweep_min_ratio"] = *lo;
    summary["sweep_max_ratio"] = *hi;
    summary["target_ratio_in_sweep"] = target >= *lo && target <= *hi;
  }
  out.report["rows"] = std::move(rows);
  out.report["summary"] = std::move(summary);
  out.report["faults"] = std::move(faults);
}

// ---------------------------------------------------------------- pipeline inputs

ReferenceGenome make_reference(const Spec& spec) {
  const int k = spec.has("k") ? static_cast<int>(spec.get_int("k")) : 15;
  const int w = spec.has("w") ? static_cast<int>(spec.get_int("w")) : 10;
  if (spec.has("reference_fasta") && !spec.get("reference_fasta").empty()) {
    auto records = read_fasta_file(spec.get("reference_fasta"));
    if (records.empty()) throw std::invalid_argument("reference FASTA has no records");
    return ReferenceGenome::build(records.front().name, std::move(records.front().bases), k, w);
  }
  return ReferenceGenome::build("synthetic",
                                synthetic_reference(derive(spec.get_u64("seed"), kTagReference, 0), spec.get_u64("ref_size")),
                                k, w);
}

std::vector<Read> make_reads(const Spec& spec, const ReferenceGenome& ref, const ReadProfile& profile,
                             std::size_t profile_index) {
  if (spec.has("reads_fasta") && !spec.get("reads_fasta").empty()) {
    std::vector<Read> reads;
    for (auto& rec : read_fasta_file(spec.get("reads_fasta"))) {
      Read r;
      r.id = rec.name;
      r.seq = std::move(rec.bases);
      reads.push_back(std::move(r));
    }
    return longest_reads(std::move(reads), spec.get_u64("select"));
  }
  const auto len = static_cast<std::size_t>(std::llround(static_cast<double>(profile.avg_len) * spec.get_double("read_scale")));
  return longest_reads(generate_reads(ref.bases, spec.get_u64("reads"), std::max<std::size_t>(len, 1), profile.accuracy,
                                      derive(spec.get_u64("seed"), kTagReads, profile_index)),
                       spec.get_u64("select"));
}

std::size_t profile_index(const std::string& name) {
  const auto& all = read_profiles();
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].name == name) return i;
  }
  return 0;
}

PipelineParams pipeline_params(const Spec& spec) {
  PipelineParams p;
  p.radix.offload_threshold = spec.get_u64("offload_threshold");
  if (spec.has("chain_t")) p.chain.T = static_cast<std::uint32_t>(spec.get_u64("chain_t"));
  p.second_chain = p.chain;
  if (spec.has("chain2_t")) {
    p.second_chain.T = static_cast<std::uint32_t>(spec.get_u64("chain2_t"));
    p.second_chain.cutoff = spec.get_double("chain2_cutoff");
    p.second_chain.min_chain_score = spec.get_double("chain2_min_score");
  }
  if (spec.has("margin")) p.margin = spec.get_u64("margin");
  return p;
}

bool has_truth(const Read& r) { return r.origin_end > r.origin_start; }

// ---------------------------------------------------------------- pipeline

void run_pipeline(const Spec& spec, Outcome& out) {
  const ReferenceGenome ref = make_reference(spec);
  const PipelineParams params = pipeline_params(spec);
  const std::string backend = spec.get("backend");
  const auto workers = spec.get_ints("workers");
  const int host_workers = static_cast<int>(*std::max_element(workers.begin(), workers.end()));
  Json rows = Json::array();
  Json faults = Json::array();
  Json profiles_summary = Json::array();

  auto read_line = [&](const std::string& profile, const MappingResult& m, const Read& read, const ReadMapping& r) {
    Json j;
    j["profile"] = profile;
    j["backend"] = to_string(m.backend);
    j["workers"] = m.backend == Backend::Host ? 0 : m.workers;
    j["id"] = r.id;
    j["length"] = read.seq.size();
    j["mapped"] = r.mapped;
    j["anchors"] = r.anchors;
    j["chain_anchors"] = r.chain_anchors;
    j["chain_score"] = r.chain_score;
    j["second_pass"] = r.second_pass;
    j["align_score"] = r.align_score;
    j["ref_start"] = r.ref_start;
    j["ref_end"] = r.ref_end;
    if (has_truth(read)) {
      j["truth_start"] = read.origin_start;
      j["truth_end"] = read.origin_end;
      j["truth_overlap"] = truth_overlap(read, r);
    }
    j["seed_cycles"] = r.cycles.seed;
    j["chain_cycles"] = r.cycles.chain;
    j["align_cycles"] = r.cycles.align;
    j["total_cycles"] = r.cycles.total;
    out.jsonl.push_back(j.dump());
  };

  auto summary_row = [&](const std::string& profile, const std::vector<Read>& reads, const MappingResult& m,
                         const MappingResult* host) {
    Json row;
    row["profile"] = profile;
    row["backend"] = to_string(m.backend);
    row["workers"] = m.backend == Backend::Host ? 0 : m.workers;
    row["reads"] = m.reads.size();
    std::size_t mapped = 0, truthful = 0, good = 0;
    for (std::size_t i = 0; i < m.reads.size(); ++i) {
      mapped += m.reads[i].mapped ? 1 : 0;
      if (has_truth(reads[i])) {
        ++truthful;
        good += truth_overlap(reads[i], m.reads[i]) >= 0.9 ? 1 : 0;
      }
    }
    row["mapped"] = mapped;
    row["truth_overlap_90_fraction"] = truthful == 0 ? Json(nullptr) : Json(ratio(good, truthful));
    row["seed_cycles"] = m.totals.seed;
    row["chain_cycles"] = m.totals.chain;
    row["align_cycles"] = m.totals.align;
    row["total_cycles"] = m.totals.total;
    const StageShares sh = stage_shares(m.totals);
    row["seed_share"] = sh.seed;
    row["chain_share"] = sh.chain;
    row["align_share"] = sh.align;
    row["stage_sum_ok"] = m.totals.seed + m.totals.chain + m.totals.align == m.totals.total;
    if (host != nullptr) {
      const PipelineSpeedup sp = pipeline_speedup(*host, m);
      row["speedup_seed"] = sp.seed;
      row["speedup_chain"] = sp.chain;
      row["speedup_align"] = sp.align;
      row["speedup_total"] = sp.total;
      bool same = host->reads.size() == m.reads.size();
      for (std::size_t i = 0; same && i < m.reads.size(); ++i) same = m.reads[i].same_mapping(host->reads[i]);
      row["outputs_match_host"] = same;
      if (!same) faults.push_back(Json{{"profile", profile}, {"workers", m.workers}, {"error", "backend outputs differ"}});
    } else {
      row["speedup_seed"] = nullptr;
      row["speedup_chain"] = nullptr;
      row["speedup_align"] = nullptr;
      row["speedup_total"] = nullptr;
      row["outputs_match_host"] = nullptr;
    }
    return row;
  };

  for (const std::string& name : spec.get_strings("profiles")) {
    const ReadProfile& profile = read_profile(name);
    const auto reads = make_reads(spec, ref, profile, profile_index(name));
    std::optional<MappingResult> host;
    try {
      if (backend != "squire") {
        SquireMachine hm(machine_config(spec, host_workers));
        host = map_reads(hm, ref, reads, Backend::Host, params);
        for (std::size_t i = 0; i < reads.size(); ++i) read_line(name, *host, reads[i], host->reads[i]);
        rows.push_back(summary_row(name, reads, *host, nullptr));
      }
      Json per_w = Json::array();
      if (backend != "host") {
        for (std::int64_t w : workers) {
          SquireMachine m(machine_config(spec, static_cast<int>(w)));
          const MappingResult sq = map_reads(m, ref, reads, Backend::Squire, params);
          for (std::size_t i = 0; i < reads.size(); ++i) read_line(name, sq, reads[i], sq.reads[i]);
          Json row = summary_row(name, reads, sq, host ? &*host : nullptr);
          per_w.push_back(Json{{"workers", w}, {"speedup_total", row["speedup_total"]}, {"align_share", row["align_share"]}});
          rows.push_back(std::move(row));
        }
      }
      profiles_summary.push_back(Json{{"profile", name},
                                      {"accuracy", profile.accuracy},
                                      {"reads", reads.size()},
                                      {"host_align_share", host ? Json(stage_shares(host->totals).align) : Json(nullptr)},
                                      {"squire", std::move(per_w)}});
    } catch (const std::exception& e) {
      faults.push_back(Json{{"profile", name}, {"error", e.what()}});
    }
  }
  out.report["rows"] = std::move(rows);
  out.report["summary"] = Json{{"reference", ref.name},
                               {"reference_bases", ref.bases.size()},
                               {"profiles", std::move(profiles_summary)}};
  out.report["faults"] = std::move(faults);
}

// ---------------------------------------------------------------- cache sweep

void run_cache_sweep(const Spec& spec, Outcome& out) {
  const ReferenceGenome ref = make_reference(spec);
  const PipelineParams params = pipeline_params(spec);
  const std::string name = spec.get("profile");
  const auto reads = make_reads(spec, ref, read_profile(name), profile_index(name));
  const int workers = static_cast<int>(spec.get_ints("workers").front());
  Json rows = Json::array();
  Json faults = Json::array();
  try {
    // One recorded run at the configured geometry provides the fixed trace.
    SquireConfig tc = machine_config(spec, workers);
    tc.record_trace = true;
    SquireMachine tm(tc);
    const MappingResult traced = map_reads(tm, ref, reads, Backend::Squire, params);
    std::uint64_t instructions = 0;
    for (const auto& r : traced.reads) instructions += r.worker_instructions;

    std::vector<std::uint64_t> sizes;
    std::vector<double> mpkis;
    bool monotone = true;
    for (std::int64_t kib : spec.get_ints("sizes_kib")) {
      const auto bytes = static_cast<std::uint32_t>(kib * 1024);
      const CacheGeometry g = sweep_geometry(bytes);
      const ReplayResult rep = replay_trace(tm.trace(), workers, g);
      const double m = mpki(rep.stats.misses, instructions).value_or(0.0);
      SquireConfig cc = machine_config(spec, workers);
      cc.l1d = g;
      SquireMachine cm(cc);
      const MappingResult timed = map_reads(cm, ref, reads, Backend::Squire, params);
      if (!mpkis.empty() && m > mpkis.back()) monotone = false;
      sizes.push_back(bytes);
      mpkis.push_back(m);
      rows.push_back(Json{{"size_bytes", bytes},
                          {"assoc", g.assoc},
                          {"mpki", m},
                          {"cycles", timed.totals.total},
                          {"misses", rep.stats.misses},
                          {"instructions", instructions}});
    }
    out.report["summary"] = Json{{"profile", name},
                                 {"reads", reads.size()},
                                 {"trace_entries", tm.trace().size()},
                                 {"mpki_non_increasing", monotone},
                                 {"knee_size_bytes", knee_size(sizes, mpkis, spec.get_double("knee_tolerance"))}};
  } catch (const std::exception& e) {
    faults.push_back(Json{{"error", e.what()}});
    out.report["summary"] = Json::object();
  }
  out.report["rows"] = std::move(rows);
  out.report["faults"] = std::move(faults);
}

std::string csv_cell(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

// ---------------------------------------------------------------- Spec

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"kernel", "syncbench", "cache-sweep", "pipeline"};
  return s;
}

Spec Spec::defaults(const std::string& subcommand) {
  Spec s;
  s.subcommand_ = subcommand;
  s.entries_ = subcommand_defaults(subcommand);
  return s;
}

bool Spec::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

void Spec::set(const std::string& key, const std::string& value) {
  for (auto& e : entries_) {
    if (e.first == key) {
      e.second = value;
      return;
    }
  }
  throw std::invalid_argument("unknown key '" + key + "' for subcommand " + subcommand_);
}

const std::string& Spec::get(const std::string& key) const {
  for (const auto& e : entries_) {
    if (e.first == key) return e.second;
  }
  throw std::invalid_argument("missing key '" + key + "'");
}

std::int64_t Spec::get_int(const std::string& key) const {
  const std::string& v = get(key);
  std::size_t pos = 0;
  std::int64_t out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw std::invalid_argument(key + ": expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t Spec::get_u64(const std::string& key) const {
  const std::int64_t v = get_int(key);
  if (v < 0) throw std::invalid_argument(key + ": must be non-negative");
  return static_cast<std::uint64_t>(v);
}

double Spec::get_double(const std::string& key) const {
  const std::string& v = get(key);
  std::size_t pos = 0;
  double out = 0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw std::invalid_argument(key + ": expected a number, got '" + v + "'");
  return out;
}

std::vector<std::string> Spec::get_strings(const std::string& key) const {
  std::vector<std::string> out;
  for (auto& s : split(get(key), ',')) {
    if (!s.empty()) out.push_back(s);
  }
  if (out.empty()) throw std::invalid_argument(key + ": expected a non-empty list");
  return out;
}

std::vector<std::int64_t> Spec::get_ints(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& s : get_strings(key)) {
    std::size_t pos = 0;
    std::int64_t v = 0;
    try {
      v = std::stoll(s, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != s.size()) throw std::invalid_argument(key + ": bad list element '" + s + "'");
    out.push_back(v);
  }
  return out;
}

void Spec::validate() const {
  auto in_range = [&](const std::string& key, std::int64_t lo, std::int64_t hi) {
    const auto v = get_int(key);
    if (v < lo || v > hi) {
      throw std::invalid_argument(key + ": " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                                  std::to_string(hi) + "]");
    }
  };
  const std::string& fmt = get("format");
  if (fmt != "json" && fmt != "csv") throw std::invalid_argument("format: expected json or csv");
  get_u64("seed");
  machine_config(*this, 1);
  for (auto w : get_ints("workers")) {
    if (w < 1 || w > 64) throw std::invalid_argument("workers: each count must be in [1, 64]");
  }
  if (subcommand_ == "kernel") {
    const std::string& k = get("kernel");
    if (k != "radix" && k != "seed" && k != "chain" && k != "sw" && k != "dtw") {
      throw std::invalid_argument("kernel: expected radix, seed, chain, sw or dtw");
    }
    in_range("reps", 1, 100000);
    const auto size = get_u64("size");
    if (size != 0 && size < kernel_minimum(k)) {
      throw std::invalid_argument("size: " + std::to_string(size) + " is below the generator minimum " +
                                  std::to_string(kernel_minimum(k)) + " for " + k);
    }
    if (get_double("size_jitter") < 0) throw std::invalid_argument("size_jitter: must be >= 0");
    in_range("chain_t", 1, 1000000);
    get_u64("offload_threshold");
    get_int("divergence");
    in_range("seed_ref_size", 1000, 1LL << 32);
    for (const char* key : {"seed_accuracy", "sw_accuracy"}) {
      const double a = get_double(key);
      if (!(a > 0.5 && a <= 1.0)) throw std::invalid_argument(std::string(key) + ": must be in (0.5, 1]");
    }
  } else if (subcommand_ == "syncbench") {
    in_range("reps", 1, 100000);
    const auto size = get_u64("size");
    if (size != 0 && size < 16) throw std::invalid_argument("size: below the generator minimum 16");
    for (auto l : get_ints("lock_sweep")) {
      if (l < 1) throw std::invalid_argument("lock_sweep: costs must be >= 1");
    }
    in_range("sweep_workers", 1, 64);
    get_double("target_ratio");
  } else {
    if (subcommand_ == "cache-sweep") {
      for (auto kib : get_ints("sizes_kib")) {
        if (kib < 1 || !std::has_single_bit(static_cast<std::uint64_t>(kib))) {
          throw std::invalid_argument("sizes_kib: sizes must be powers of two");
        }
        sweep_geometry(static_cast<std::uint32_t>(kib * 1024));
      }
      const auto sizes = get_ints("sizes_kib");
      if (!std::is_sorted(sizes.begin(), sizes.end())) throw std::invalid_argument("sizes_kib: must ascend");
      read_profile(get("profile"));
      get_double("knee_tolerance");
    } else {
      for (const auto& p : get_strings("profiles")) read_profile(p);
      const std::string& b = get("backend");
      if (b != "host" && b != "squire" && b != "both") throw std::invalid_argument("backend: expected host, squire or both");
      in_range("k", 1, 32);
      in_range("w", 1, 1000);
      get_u64("margin");
      in_range("chain_t", 1, 1000000);
      in_range("chain2_t", 1, 1000000);
      get_double("chain2_cutoff");
      get_double("chain2_min_score");
    }
    in_range("reads", 1, 1000000);
    in_range("select", 1, 1000000);
    in_range("ref_size", 1000, 1LL << 32);
    const double scale = get_double("read_scale");
    if (!(scale > 0 && scale <= 1)) throw std::invalid_argument("read_scale: must be in (0, 1]");
    get_u64("offload_threshold");
  }
}

Json Spec::to_json() const {
  Json j = Json::object();
  j["subcommand"] = subcommand_;
  for (const auto& [k, v] : entries_) j[k] = v;
  return j;
}

void apply_config_text(Spec& spec, const std::string& text) {
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    const Json j = Json::parse(body);
    const Json& s = j.contains("spec") ? j.at("spec") : j;
    for (const auto& [k, v] : s.items()) {
      if (k == "subcommand") {
        if (v.get<std::string>() != spec.subcommand()) {
          throw std::invalid_argument("config is for subcommand " + v.get<std::string>());
        }
        continue;
      }
      spec.set(k, v.is_string() ? v.get<std::string>() : v.dump());
    }
    return;
  }
  const bool csv_report = body.find("# spec.") != std::string::npos;
  std::istringstream in(body);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (csv_report) {
      if (line.rfind("# spec.", 0) != 0) continue;
      line = line.substr(7);
    } else if (line.empty() || line[0] == '#') {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "subcommand") {
      if (value != spec.subcommand()) throw std::invalid_argument("config is for subcommand " + value);
      continue;
    }
    spec.set(key, value);
  }
}

void apply_config_file(Spec& spec, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(spec, ss.str());
}

bool Outcome::clean() const { return report.contains("faults") && report["faults"].empty(); }

Outcome run(const Spec& spec) {
  spec.validate();
  Outcome out;
  out.report["schema_version"] = kSchemaVersion;
  out.report["subcommand"] = spec.subcommand();
  out.report["spec"] = spec.to_json();
  const std::string& sub = spec.subcommand();
  if (sub == "kernel") {
    run_kernel(spec, out);
  } else if (sub == "syncbench") {
    run_syncbench(spec, out);
  } else if (sub == "cache-sweep") {
    run_cache_sweep(spec, out);
  } else {
    run_pipeline(spec, out);
  }
  return out;
}

std::string render_json(const Outcome& outcome) { return outcome.report.dump(2) + "\n"; }

std::string render_csv(const Outcome& outcome) {
  std::ostringstream os;
  os << "# schema_version=" << outcome.report["schema_version"].get<int>() << "\n";
  for (const auto& [k, v] : outcome.report["spec"].items()) os << "# spec." << k << "=" << v.get<std::string>() << "\n";
  if (outcome.report.contains("summary")) {
    for (const auto& [k, v] : outcome.report["summary"].items()) os << "# summary." << k << "=" << csv_cell(v) << "\n";
  }
  for (const auto& f : outcome.report["faults"]) os << "# fault=" << f.dump() << "\n";
  const Json& rows = outcome.report["rows"];
  if (!rows.empty()) {
    std::vector<std::string> cols;
    for (const auto& [k, v] : rows.front().items()) cols.push_back(k);
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < cols.size(); ++i) {
        os << (i ? "," : "") << (row.contains(cols[i]) ? csv_cell(row[cols[i]]) : "");
      }
      os << "\n";
    }
  }
  return os.str();
}

std::uint64_t knee_size(const std::vector<std::uint64_t>& sizes, const std::vector<double>& mpki, double tolerance) {
  if (sizes.empty()) return 0;
  const double target = mpki.back() * (1.0 + tolerance);
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (mpki[i] <= target) return sizes[i];
  }
  return sizes.back();
}

}  // namespace squire::harness
