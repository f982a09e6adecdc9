#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "squire/kernels/radix.hpp"

namespace squire {

// 2-bit base code A=0 C=1 G=2 T=3 (case-insensitive); -1 for anything else.
int base_code(char c);
// Decodes a 2-bit packed k-mer.
std::string decode_kmer(std::uint64_t kmer, int k);

struct Minimizer {
  std::uint64_t kmer = 0;  // 2-bit packed, first base most significant
  std::uint32_t pos = 0;
  bool operator==(const Minimizer&) const = default;
};

// Lexicographically smallest k-mer of every window of w consecutive k-mers,
// leftmost on ties; consecutive repeats of the same k-mer are emitted once.
// Requires 1 <= k <= 32, w >= 1 and an ACGT sequence.
std::vector<Minimizer> minimizers(std::string_view seq, int k, int w);

struct Anchor {
  std::uint32_t qpos = 0;
  std::uint32_t rpos = 0;
  std::uint64_t key() const { return (std::uint64_t{rpos} << 32) | qpos; }
  static Anchor from_key(std::uint64_t key) {
    return Anchor{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
  }
  bool operator==(const Anchor&) const = default;
};

struct MinimizerIndex {
  int k = 15;
  int w = 10;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> positions;  // ascending
  std::size_t minimizer_count = 0;
};

MinimizerIndex build_index(std::string_view reference, int k = 15, int w = 10);

// Unsorted anchor keys in emission order (query minimizers in order, then
// reference occurrences ascending).
std::vector<std::uint64_t> collect_anchor_keys(std::string_view query, const MinimizerIndex& index,
                                               std::size_t* query_minimizers = nullptr);
std::vector<Anchor> seed_reference(std::string_view query, const MinimizerIndex& index);

struct SeedOutput {
  RadixBuffers buffers;
  std::vector<Anchor> anchors;
  bool offloaded = false;
};

// Host program of the seeding stage: minimizer extraction and index lookup on
// the host, anchor sort through radix_squire_program (or on the host when
// `use_squire` is false). Fills `out` when it finishes.
Program seed_program(SquireMachine& machine, std::string_view query, const MinimizerIndex& index, bool use_squire,
                     RadixOptions options, SeedOutput* out);

struct SeedRun {
  std::vector<Anchor> anchors;
  RunReport report;
  bool offloaded = false;
};

SeedRun seed_squire(SquireMachine& machine, std::string_view query, const MinimizerIndex& index,
                    const RadixOptions& options = {});
SeedRun seed_baseline(SquireMachine& machine, std::string_view query, const MinimizerIndex& index,
                      const KernelCosts& costs = {});

}  // namespace squire
