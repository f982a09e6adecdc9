#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "squire/kernels/common.hpp"
#include "squire/kernels/seed.hpp"

namespace squire {

inline constexpr double kChainSentinel = -std::numeric_limits<double>::infinity();
inline constexpr std::uint32_t kBaselineChainWindow = 5000;
inline constexpr std::uint32_t kSquireChainWindow = 64;

struct ChainParams {
  std::uint32_t T = kSquireChainWindow;  // predecessors examined per anchor
  double k = 15;                         // alpha cap and self-score floor
  double c1 = 0.12 * 15;                 // linear gap weight
  double c2 = 0.5;                       // log gap weight
  double cutoff = 5000;                  // beta above this is the sentinel
  double min_chain_score = 40;           // backtracked chains below this are dropped
  bool operator==(const ChainParams&) const = default;
};

// alpha(i, j) - beta(i, j) for predecessor j of i, or kChainSentinel when
// the pair is not colinear or the gap penalty exceeds the cutoff.
double chain_alpha(const Anchor& ai, const Anchor& aj, const ChainParams& p);
double chain_beta(const Anchor& ai, const Anchor& aj, const ChainParams& p);
double chain_matchup(const Anchor& ai, const Anchor& aj, const ChainParams& p);

struct Chain {
  std::vector<std::uint32_t> anchors;  // strictly decreasing indices
  double score = 0;
  bool operator==(const Chain&) const = default;
};

struct ChainResult {
  std::vector<double> f;
  std::vector<std::int32_t> pred;  // -1 starts a chain
  std::vector<Chain> chains;       // best first
  ChainParams params;
  bool operator==(const ChainResult&) const = default;
};

// Chaining recurrence over the window [max(0, i - T), i), floored at k, lowest j on ties,
// followed by host backtracking.
ChainResult chain_reference(std::span<const Anchor> anchors, const ChainParams& params);
// Extracts chains from f/pred: repeatedly start from the best unused anchor.
std::vector<Chain> chain_backtrack(const std::vector<double>& f, const std::vector<std::int32_t>& pred,
                                   double min_score);

struct ChainBuffers {
  SimArray<std::uint64_t> anchors;
  SimArray<double> f;
  SimArray<std::int32_t> pred;
  ChainResult result;
};

ChainBuffers allocate_chain_buffers(SimMemory& memory, std::span<const Anchor> anchors);

// Host program offloading the two-pass worker loop, then backtracking on the host.
Program chain_squire_program(SquireMachine& machine, ChainBuffers* buffers, ChainParams params, KernelCosts costs);
// Sequential chaining (match-up and combine loops) on the host.
Program chain_host_program(ChainBuffers* buffers, ChainParams params, KernelCosts costs);

struct ChainRun {
  ChainResult result;
  RunReport report;
};

ChainRun chain_squire(SquireMachine& machine, std::span<const Anchor> anchors, const ChainParams& params = {},
                      const KernelCosts& costs = {});
ChainRun chain_baseline(SquireMachine& machine, std::span<const Anchor> anchors, const ChainParams& params = {},
                        const KernelCosts& costs = {});

struct ChainDivergence {
  std::size_t anchors = 0;
  std::size_t score_differs = 0;   // anchors whose f differs between the two windows
  std::size_t pred_differs = 0;
  bool best_chain_endpoints_differ = false;
};

ChainDivergence chain_divergence(std::span<const Anchor> anchors, ChainParams params,
                                 std::uint32_t wide = kBaselineChainWindow, std::uint32_t narrow = kSquireChainWindow);

}  // namespace squire
