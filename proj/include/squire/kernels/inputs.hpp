#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "squire/kernels/seed.hpp"

namespace squire {

// Average input sizes of the evaluated kernels.
struct KernelScale {
  static constexpr std::size_t radix_keys = 53536;
  static constexpr std::size_t seed_query_bp = 23014;
  static constexpr std::size_t chain_anchors = 53536;
  static constexpr std::size_t sw_bp = 1373;
  static constexpr std::size_t dtw_samples = 221;
};

using Rng = std::mt19937_64;

// Normal around `mean` (sd = mean / 4) clipped to [lo, hi].
std::size_t draw_size(Rng& rng, std::size_t mean, std::size_t lo, std::size_t hi);

std::vector<std::uint64_t> random_keys(Rng& rng, std::size_t n);

// S is a random walk; R is a time-warped, noisy copy of S of length m.
std::pair<std::vector<float>, std::vector<float>> random_signal_pair(Rng& rng, std::size_t n, std::size_t m);

std::string random_dna(Rng& rng, std::size_t n);

struct MutationCounts {
  std::size_t substitutions = 0;
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t total() const { return substitutions + insertions + deletions; }
};

// Each source base is in error with probability 1 - accuracy; errors are
// split evenly between substitution, insertion and deletion.
std::string mutate(Rng& rng, std::string_view seq, double accuracy, MutationCounts* counts = nullptr);

struct RepeatModel {
  double fraction = 0.5;     // share of the genome made of repeat copies
  std::size_t unit_bp = 2000;
  std::size_t copies = 16;
  double divergence = 0.02;  // per-copy substitution rate
};

// Random genome with interspersed repeat families.
std::string synthetic_reference(std::uint64_t seed, std::size_t size, const RepeatModel& model = {});

// Colinear anchor runs (repeat copies of one query) plus uniform noise,
// sorted by (rpos, qpos) and deduplicated.
std::vector<Anchor> random_anchors(Rng& rng, std::size_t n);

}  // namespace squire
