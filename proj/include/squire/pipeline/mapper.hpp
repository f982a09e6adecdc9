#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "squire/kernels/chain.hpp"
#include "squire/kernels/dp.hpp"
#include "squire/kernels/inputs.hpp"
#include "squire/kernels/seed.hpp"

namespace squire {

struct ReadProfile {
  std::string name;
  double accuracy = 1.0;
  std::size_t avg_len = 0;  // before read_scale
};

// ont, pbclr, pbhf.
const std::vector<ReadProfile>& read_profiles();
const ReadProfile& read_profile(std::string_view name);

struct ReferenceGenome {
  std::string name;
  std::string bases;
  MinimizerIndex index;

  static ReferenceGenome build(std::string name, std::string bases, int k = 15, int w = 10);
};

struct Read {
  std::string id;
  std::string seq;
  std::uint64_t origin_start = 0;  // true interval [start, end) on the reference
  std::uint64_t origin_end = 0;
  double accuracy = 1.0;
  MutationCounts errors;
};

// Uniform origins, clipped-normal lengths around avg_len, errors at rate
// 1 - accuracy split evenly between substitutions, insertions and deletions.
std::vector<Read> generate_reads(std::string_view reference, std::size_t n, std::size_t avg_len, double accuracy,
                                 std::uint64_t seed);
// The `count` longest reads, longest first (ties keep generation order).
std::vector<Read> longest_reads(std::vector<Read> reads, std::size_t count = 18);

enum class Backend { Host, Squire };
const char* to_string(Backend b);

struct PipelineParams {
  ChainParams chain{};
  // Used only when the first pass yields no chain and differs from `chain`.
  ChainParams second_chain{};
  std::uint64_t margin = 64;  // SW window = chain bounding box plus this on each side
  SwScoring scoring{};
  RadixOptions radix{};
  KernelCosts costs{};
};

struct StageCycles {
  std::uint64_t seed = 0;
  std::uint64_t chain = 0;
  std::uint64_t align = 0;
  std::uint64_t total = 0;
  StageCycles& operator+=(const StageCycles& o);
};

struct ReadMapping {
  std::string id;
  bool mapped = false;
  std::size_t anchors = 0;
  std::size_t chain_anchors = 0;
  double chain_score = 0;
  bool second_pass = false;
  std::int32_t align_score = 0;
  std::uint64_t ref_start = 0;  // mapped interval [start, end)
  std::uint64_t ref_end = 0;
  StageCycles cycles;
  std::uint64_t worker_instructions = 0;
  std::uint64_t worker_l1_misses = 0;

  // Mapping outputs only, timing excluded.
  bool same_mapping(const ReadMapping& o) const;
};

struct MappingResult {
  Backend backend = Backend::Host;
  int workers = 0;
  std::vector<ReadMapping> reads;
  StageCycles totals;
};

MappingResult map_reads(SquireMachine& machine, const ReferenceGenome& reference, const std::vector<Read>& reads,
                        Backend backend, const PipelineParams& params = {});

// Host-side program mapping one read; stage marks delimit seed, chain and align.
Program map_read_program(SquireMachine& machine, const ReferenceGenome& reference, const Read& read, Backend backend,
                         PipelineParams params, ReadMapping* out);

// Fraction of the true interval covered by the mapped interval.
double truth_overlap(const Read& read, const ReadMapping& mapping);

struct StageShares {
  double seed = 0;
  double chain = 0;
  double align = 0;
};
StageShares stage_shares(const StageCycles& c);

struct PipelineSpeedup {
  double seed = 0;
  double chain = 0;
  double align = 0;
  double total = 0;
};
// host cycles / squire cycles per stage; a stage with zero cycles on both
// sides reports 1.
PipelineSpeedup pipeline_speedup(const MappingResult& baseline, const MappingResult& squire);

}  // namespace squire
