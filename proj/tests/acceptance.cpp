// Acceptance checks: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "harness.hpp"
#include "squire/kernels/inputs.hpp"
#include "squire/kernels/radix.hpp"
#include "squire/machine.hpp"
#include "squire/sync.hpp"

using namespace squire;
using harness::Json;
using harness::Spec;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Spec make_spec(const std::string& sub, const std::map<std::string, std::string>& overrides) {
  Spec s = Spec::defaults(sub);
  for (const auto& [k, v] : overrides) s.set(k, v);
  return s;
}

const std::vector<std::string> kKernels{"radix", "seed", "chain", "sw", "dtw"};
constexpr int kSchedulerSeeds = 5;
constexpr int kInputs = 4;

// Mean speedup per worker count per kernel, over the nominal-timing runs of criterion 1.
std::map<std::string, std::map<int, std::pair<double, int>>> g_speedups;

// 1. Oracle equivalence over W {1,4,8,16,32} x 5 scheduler seeds x 4 inputs per kernel.
// Seeds 0-2 use nominal timing; seeds 3-4 add grant jitter to perturb interleavings further.
Verdict criterion1() {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& kernel : kKernels) {
    std::size_t instances = 0, equal = 0;
    for (int sched = 0; sched < kSchedulerSeeds; ++sched) {
      const Spec spec = make_spec("kernel", {{"kernel", kernel},
                                             {"workers", "1,4,8,16,32"},
                                             {"reps", std::to_string(kInputs)},
                                             {"scheduler_seed", std::to_string(sched)},
                                             {"jitter", sched >= 3 ? "2" : "0"},
                                             {"divergence", "0"}});
      const harness::Outcome out = harness::run(spec);
      v.require(out.clean(), kernel + " seed " + std::to_string(sched) + " faults: " + out.report["faults"].dump());
      for (const auto& row : out.report["rows"]) {
        ++instances;
        equal += row["matches_reference"].get<bool>() ? 1 : 0;
        if (sched < 3) {
          auto& acc = g_speedups[kernel][row["workers"].get<int>()];
          acc.first += row["speedup"].get<double>();
          acc.second += 1;
        }
      }
    }
    v.require(instances >= 100, kernel + " ran only " + std::to_string(instances) + " instances");
    v.require(equal == instances, kernel + " mismatches");
    v.detail << " " << kernel << "=" << equal << "/" << instances;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  v.require(secs < 600, "runtime over 10 min");
  v.detail << " runtime=" << fmt(secs, 1) << "s";
  return v;
}

// 2. Exhaustive arrival orders at the global counter.
Verdict criterion2() {
  Verdict v;
  std::size_t orders = 0;
  for (int workers = 1; workers <= 4; ++workers) {
    for (int per = 1; per <= 3; ++per) {
      std::vector<int> order;
      for (int w = 0; w < workers; ++w) order.insert(order.end(), static_cast<std::size_t>(per), w);
      std::sort(order.begin(), order.end());
      bool have_first = false;
      std::uint64_t value0 = 0;
      int token0 = 0;
      std::vector<int> log0;
      do {
        GlobalCounter g(workers);
        g.set_logging(true);
        for (int w : order) g.increment(w);
        const auto& log = g.committed_log();
        bool rr = log.size() == order.size();
        for (std::size_t i = 0; rr && i < log.size(); ++i) rr = log[i] == static_cast<int>(i % static_cast<std::size_t>(workers));
        if (!rr) {
          v.require(false, "log not round-robin at W=" + std::to_string(workers));
          return v;
        }
        if (!have_first) {
          have_first = true;
          value0 = g.value();
          token0 = g.token();
          log0 = log;
        } else if (g.value() != value0 || g.token() != token0 || log != log0) {
          v.require(false, "order-dependent outcome at W=" + std::to_string(workers));
          return v;
        }
        ++orders;
      } while (std::next_permutation(order.begin(), order.end()));
      v.require(value0 == static_cast<std::uint64_t>(workers * per), "final value");
    }
  }
  v.detail << " orders=" << orders;
  return v;
}

double mean_speedup(const std::string& kernel, int w) {
  const auto& acc = g_speedups[kernel][w];
  return acc.second == 0 ? 0.0 : acc.first / acc.second;
}

// 3. Scaling trends from the nominal-timing runs of criterion 1.
Verdict criterion3() {
  Verdict v;
  for (const auto& k : kKernels) {
    v.detail << " " << k << "(4/8/16/32)=" << fmt(mean_speedup(k, 4)) << "/" << fmt(mean_speedup(k, 8)) << "/"
             << fmt(mean_speedup(k, 16)) << "/" << fmt(mean_speedup(k, 32));
  }
  for (const char* k : {"dtw", "sw"}) {
    v.require(mean_speedup(k, 4) < mean_speedup(k, 8) && mean_speedup(k, 8) < mean_speedup(k, 16),
              std::string("(a) ") + k + " not strictly increasing 4->8->16");
  }
  const double dtw16 = mean_speedup("dtw", 16);
  v.require(dtw16 >= 4.0 && dtw16 <= 11.0, "(b) dtw@16 outside [4, 11]");
  for (const char* k : {"radix", "seed"}) {
    v.require(mean_speedup(k, 32) / mean_speedup(k, 16) < 1.15, std::string("(c) ") + k + " 32/16 >= 1.15");
  }
  for (const char* k : {"chain", "sw"}) {
    v.require(mean_speedup(k, 32) > mean_speedup(k, 16), std::string("(d) ") + k + " 32 <= 16");
  }
  return v;
}

// 4. Radix below the offload threshold never starts the workers.
Verdict criterion4() {
  Verdict v;
  Rng rng(4);
  for (std::size_t n : {0, 1, 100, 5000, 9999}) {
    const auto keys = random_keys(rng, n);
    SquireMachine m(SquireConfig{});
    const RadixRun r = radix_squire(m, keys);
    std::uint64_t worker_cycles = 0;
    for (const auto& w : r.report.per_worker) worker_cycles += w.active + w.wait + w.compute + w.mem_stall + w.counter;
    v.require(worker_cycles == 0 && !r.offloaded && r.report.offloads == 0, "n=" + std::to_string(n) + " used workers");
    v.require(r.sorted == radix_reference(keys), "n=" + std::to_string(n) + " unsorted");
  }
  v.detail << " sizes 0,1,100,5000,9999: zero worker cycles";
  return v;
}

harness::Outcome g_sync, g_cache, g_pipe;

// 5. Sync-module benefit.
Verdict criterion5() {
  Verdict v;
  g_sync = harness::run(Spec::defaults("syncbench"));
  v.require(g_sync.clean(), "faults");
  std::map<int, double> ratio;
  for (const auto& row : g_sync.report["rows"]) {
    if (row["series"] == "workers") ratio[row["workers"].get<int>()] = row["ratio"].get<double>();
  }
  const Json& s = g_sync.report["summary"];
  v.require(ratio[16] > 1.0, "hardware not faster at 16 workers");
  v.require(ratio[4] <= ratio[8] && ratio[8] <= ratio[16], "ratio not non-decreasing over 4,8,16");
  v.require(s["target_ratio_in_sweep"].get<bool>(), "1.69 outside lock-cost sweep");
  v.detail << " ratio(4/8/16)=" << fmt(ratio[4]) << "/" << fmt(ratio[8]) << "/" << fmt(ratio[16])
           << " sweep[10,100]=[" << fmt(s["sweep_min_ratio"].get<double>()) << ", "
           << fmt(s["sweep_max_ratio"].get<double>()) << "]";
  return v;
}

// 6. Cache sweep over the recorded pipeline trace.
Verdict criterion6() {
  Verdict v;
  g_cache = harness::run(Spec::defaults("cache-sweep"));
  v.require(g_cache.clean(), "faults");
  double prev = 1e300;
  bool monotone = true;
  for (const auto& row : g_cache.report["rows"]) {
    const double m = row["mpki"].get<double>();
    monotone = monotone && m <= prev;
    prev = m;
    v.detail << " " << row["size_bytes"].get<std::uint64_t>() / 1024 << "KiB=" << fmt(m, 3);
  }
  v.require(g_cache.report["rows"].size() == 5, "expected 5 sizes");
  v.require(monotone, "MPKI increases with size");
  const auto knee = g_cache.report["summary"]["knee_size_bytes"].get<std::uint64_t>();
  v.require(knee <= 8192, "knee above 8 KiB");
  v.detail << " knee=" << knee / 1024 << "KiB";
  return v;
}

// 7. End-to-end pipeline.
Verdict criterion7() {
  Verdict v;
  g_pipe = harness::run(Spec::defaults("pipeline"));
  v.require(g_pipe.clean(), "faults: " + g_pipe.report["faults"].dump());
  std::map<std::string, std::map<int, double>> speedup;
  std::map<std::string, double> host_align;
  bool equivalent = true;
  std::size_t squire_rows = 0;
  for (const auto& row : g_pipe.report["rows"]) {
    const std::string p = row["profile"];
    if (row["backend"] == "host") {
      host_align[p] = row["align_share"].get<double>();
    } else {
      ++squire_rows;
      speedup[p][row["workers"].get<int>()] = row["speedup_total"].get<double>();
      equivalent = equivalent && row["outputs_match_host"].get<bool>();
    }
  }
  for (const char* p : {"ont", "pbclr", "pbhf"}) {
    v.require(speedup[p][16] > speedup[p][4], std::string("(a) ") + p + " speedup@16 <= @4");
    v.detail << " " << p << "(4/16)=" << fmt(speedup[p][4]) << "/" << fmt(speedup[p][16]);
  }
  v.require(host_align["pbhf"] < host_align["ont"], "(b) pbhf align share >= ont");
  v.require(equivalent && squire_rows == 6, "(c) backend outputs differ");
  v.detail << " align_share(pbhf/ont)=" << fmt(host_align["pbhf"], 4) << "/" << fmt(host_align["ont"], 4)
           << " reads_equivalent=" << (equivalent ? "yes" : "no");
  return v;
}

std::string render(const harness::Outcome& o) {
  return o.report["spec"]["format"] == "csv" ? harness::render_csv(o) : harness::render_json(o);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// 8. Reruns from the embedded spec are byte-identical, in-process and through the CLI.
Verdict criterion8(const std::string& cli) {
  Verdict v;
  for (const harness::Outcome* o : {&g_sync, &g_cache, &g_pipe}) {
    const std::string first = render(*o);
    Spec spec = Spec::defaults(o->report["subcommand"]);
    harness::apply_config_text(spec, first);
    const harness::Outcome again = harness::run(spec);
    v.require(render(again) == first && again.jsonl == o->jsonl,
              o->report["subcommand"].get<std::string>() + " rerun differs");
  }
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "squire_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  struct Case {
    std::string name, args, ext;
  };
  const std::vector<Case> cases{
      {"kernel", "kernel --kernel sw --workers 1,4,16 --reps 2 --seed 7", "json"},
      {"kernel", "kernel --kernel chain --workers 4 --size 4000 --format csv --scheduler-seed 3 --jitter 2", "csv"},
      {"pipeline", "pipeline --profiles pbclr --workers 4 --ref-size 200000 --reads 12 --select 4", "json"},
  };
  int idx = 0;
  for (const auto& c : cases) {
    const fs::path a = dir / ("run" + std::to_string(idx) + "a." + c.ext);
    const fs::path b = dir / ("run" + std::to_string(idx) + "b." + c.ext);
    ++idx;
    const std::string first = cli + " " + c.args + " --out " + a.string() + " 2>/dev/null";
    const std::string second = cli + " " + c.name + " --config " + a.string() + " --out " + b.string() + " 2>/dev/null";
    const int rc1 = std::system(first.c_str());
    const int rc2 = std::system(second.c_str());
    v.require(rc1 == 0 && rc2 == 0, "cli exit code for: " + c.args);
    v.require(fs::exists(a) && slurp(a) == slurp(b), "cli rerun differs for: " + c.args);
    if (c.name == "pipeline") {
      fs::path ra = a, rb = b;
      ra.replace_extension(".reads.jsonl");
      rb.replace_extension(".reads.jsonl");
      v.require(fs::exists(ra) && slurp(ra) == slurp(rb), "per-read output differs");
    }
  }
  // The output directory variable is honoured when --out is absent.
  const std::string env_run = "cd " + dir.string() + " && " + std::string(harness::kOutDirEnv) + "=" +
                              (dir / "envdir").string() + " " + cli + " syncbench --workers 1,4 --lock-sweep 30 2>/dev/null";
  v.require(std::system(env_run.c_str()) == 0 && fs::exists(dir / "envdir" / "syncbench.json"), "output dir variable ignored");
  v.detail << " in-process reruns: syncbench, cache-sweep, pipeline; cli reruns: " << cases.size() << " (json+csv)";
  fs::remove_all(dir);
  return v;
}

Program circular_wait(std::uint64_t) {
  const auto id = static_cast<int>(co_await act::id_worker());
  const auto n = static_cast<int>(co_await act::num_workers());
  co_await act::wait_lcounter((id + 1) % n, 1);
  co_await act::inc_lcounter(id);
}

// 9. Circular local-counter wait is reported as a deadlock.
Verdict criterion9() {
  Verdict v;
  SquireConfig c;
  c.num_workers = 2;
  SquireMachine m(c);
  constexpr std::uint64_t kLimit = 100'000;
  m.start_squire(m.register_entry("circular", circular_wait), 0);
  const RunReport r = m.run_until_idle(kLimit);
  v.require(r.deadlock.has_value(), "no deadlock reported");
  if (r.deadlock) {
    const auto& b = r.deadlock->blocked;
    auto names = [&](const std::string& s) {
      return std::any_of(b.begin(), b.end(), [&](const std::string& x) { return x.find(s) != std::string::npos; });
    };
    v.require(b.size() == 2, "expected two blocked workers");
    v.require(names("worker 0 blocked on wait_lcounter(1, 1)"), "worker 0 condition missing");
    v.require(names("worker 1 blocked on wait_lcounter(0, 1)"), "worker 1 condition missing");
    v.require(r.deadlock->cycle < kLimit, "not detected within the cycle limit");
    v.detail << " detected at cycle " << r.deadlock->cycle;
    for (const auto& s : b) v.detail << "; " << s;
  }
  return v;
}

}  // namespace

int main() {
  const std::string cli = SQUIRE_CLI_PATH;
  const std::vector<std::pair<int, std::function<Verdict()>>> checks{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, [&] { return criterion8(cli); }}, {9, criterion9},
  };
  int failures = 0;
  for (const auto& [n, check] : checks) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    failures += v.pass ? 0 : 1;
    std::cout << "CRITERION " << n << ": " << (v.pass ? "PASS" : "FAIL") << " -" << v.detail.str() << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
