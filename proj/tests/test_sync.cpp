#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include "squire/config.hpp"
#include "squire/sync.hpp"

using squire::GlobalCounter;
using squire::LocalCounters;

TEST(GlobalCounter, SingleWorkerIsIdentityRoundRobin) {
  GlobalCounter g(1);
  g.increment(0);
  EXPECT_EQ(g.value(), 1u);
  EXPECT_EQ(g.token(), 0);
}

TEST(GlobalCounter, OutOfTurnIncrementsAreParkedThenDrained) {
  GlobalCounter g(3);
  g.set_logging(true);
  g.increment(1);
  EXPECT_EQ(g.value(), 0u);
  EXPECT_EQ(g.pending(1), 1u);
  g.increment(2);
  EXPECT_EQ(g.value(), 0u);
  EXPECT_EQ(g.pending(2), 1u);
  EXPECT_EQ(g.increment(0), 3u);
  EXPECT_EQ(g.value(), 3u);
  EXPECT_EQ(g.token(), 0);
  EXPECT_EQ(g.total_pending(), 0u);
  EXPECT_EQ(g.committed_log(), (std::vector<int>{0, 1, 2}));
}

TEST(GlobalCounter, TokenStartsAtZeroAndResetClearsState) {
  GlobalCounter g(4);
  EXPECT_EQ(g.token(), 0);
  g.increment(2);
  g.increment(0);
  g.reset();
  EXPECT_EQ(g.value(), 0u);
  EXPECT_EQ(g.token(), 0);
  EXPECT_EQ(g.total_pending(), 0u);
  EXPECT_EQ(g.max_pending(), 0u);
}

TEST(GlobalCounter, InvalidWorkerFaults) {
  GlobalCounter g(2);
  EXPECT_THROW(g.increment(2), squire::SimulationFault);
  EXPECT_THROW(g.increment(-1), squire::SimulationFault);
}

namespace {

// Round-robin commit count computed from per-worker totals only.
std::uint64_t committable(const std::vector<int>& counts, int& token_out) {
  std::vector<int> left = counts;
  const int w = static_cast<int>(counts.size());
  int token = 0;
  std::uint64_t value = 0;
  while (left[static_cast<std::size_t>(token)] > 0) {
    --left[static_cast<std::size_t>(token)];
    ++value;
    token = (token + 1) % w;
  }
  token_out = token;
  return value;
}

struct Outcome {
  std::uint64_t value;
  int token;
  std::vector<int> log;
  std::uint64_t pending;
  bool operator==(const Outcome&) const = default;
};

Outcome replay(const std::vector<int>& order, int workers) {
  GlobalCounter g(workers);
  g.set_logging(true);
  std::uint64_t last = 0;
  for (int w : order) {
    g.increment(w);
    EXPECT_GE(g.value(), last);  // monotone
    last = g.value();
    // prefix-closed round robin at every step
    const auto& log = g.committed_log();
    for (std::size_t i = 0; i < log.size(); ++i) EXPECT_EQ(log[i], static_cast<int>(i % workers));
    EXPECT_EQ(g.total_pending() + g.value(), g.requests());
  }
  return Outcome{g.value(), g.token(), g.committed_log(), g.total_pending()};
}

}  // namespace

// Every arrival order of a fixed multiset of increments (W <= 4, <= 3 each)
// ends in the same value, token and commit log.
TEST(GlobalCounter, PermutationIndependenceExhaustive) {
  for (int workers = 1; workers <= 4; ++workers) {
    for (int per = 1; per <= 3; ++per) {
      std::vector<int> order;
      for (int w = 0; w < workers; ++w) order.insert(order.end(), static_cast<std::size_t>(per), w);
      std::sort(order.begin(), order.end());
      const Outcome first = replay(order, workers);
      EXPECT_EQ(first.value, static_cast<std::uint64_t>(workers * per));
      EXPECT_EQ(first.token, 0);
      EXPECT_EQ(first.pending, 0u);
      std::size_t n = 0;
      do {
        ASSERT_EQ(replay(order, workers), first);
        ++n;
      } while (std::next_permutation(order.begin(), order.end()));
      EXPECT_GT(n, 0u);
    }
  }
}

// Unequal per-worker counts: the committed prefix is what round robin
// allows and the rest stays pending, regardless of arrival order.
TEST(GlobalCounter, UnequalCountsStallAtTokenOwner) {
  const std::vector<std::vector<int>> cases = {{2, 1, 1}, {1, 2}, {0, 3}, {3, 3, 2, 3}, {1, 0, 1, 1}};
  for (const auto& counts : cases) {
    std::vector<int> order;
    for (std::size_t w = 0; w < counts.size(); ++w) order.insert(order.end(), static_cast<std::size_t>(counts[w]), static_cast<int>(w));
    int token = 0;
    const std::uint64_t expected = committable(counts, token);
    const auto total = static_cast<std::uint64_t>(std::accumulate(counts.begin(), counts.end(), 0));
    do {
      const Outcome o = replay(order, static_cast<int>(counts.size()));
      EXPECT_EQ(o.value, expected);
      EXPECT_EQ(o.token, token);
      EXPECT_EQ(o.pending, total - expected);
    } while (std::next_permutation(order.begin(), order.end()));
  }
}

TEST(LocalCounters, IncrementAndRange) {
  LocalCounters l(4);
  EXPECT_EQ(l.size(), 4);
  l.increment(2);
  EXPECT_EQ(l.value(2), 1u);
  l.increment(2);
  EXPECT_EQ(l.value(2), 2u);
  EXPECT_EQ(l.value(0), 0u);
  EXPECT_THROW(l.increment(4), squire::SimulationFault);
  EXPECT_THROW(l.value(-1), squire::SimulationFault);
  l.reset();
  EXPECT_EQ(l.value(2), 0u);
}
