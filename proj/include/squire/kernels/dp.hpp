#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "squire/kernels/common.hpp"

namespace squire {

struct DtwResult {
  std::size_t n = 0;  // rows (S)
  std::size_t m = 0;  // columns (R)
  std::vector<float> matrix;  // row-major n x m
  float distance = 0;
  float at(std::size_t i, std::size_t j) const { return matrix[i * m + j]; }
  bool operator==(const DtwResult&) const = default;
};

struct SwScoring {
  std::int32_t match = 2;
  std::int32_t mismatch = -4;
  std::int32_t gap = -4;
  bool operator==(const SwScoring&) const = default;
};

struct SwResult {
  std::size_t n = 0;  // rows (A)
  std::size_t m = 0;  // columns (B)
  std::vector<std::int32_t> matrix;  // row-major n x m
  std::int32_t best = 0;
  std::uint32_t best_row = 0;  // first maximal cell in row-major order
  std::uint32_t best_col = 0;
  std::int32_t at(std::size_t i, std::size_t j) const { return matrix[i * m + j]; }
  bool operator==(const SwResult&) const = default;
};

// DTW recurrence with cost |S[i] - R[j]|; M[0,0] = cost(0,0), first row and column
// are cumulative sums.
DtwResult dtw_reference(std::span<const float> s, std::span<const float> r);
// Linear-gap local alignment with a zero floor; row/column -1 are zero.
SwResult sw_reference(std::string_view a, std::string_view b, const SwScoring& scoring = {});

// Worker w owns columns [w*m/W, (w+1)*m/W); returns the first column of each
// worker plus m.
std::vector<std::size_t> column_partition(std::size_t m, int workers);

struct DtwRun {
  DtwResult result;
  RunReport report;
};
struct SwRun {
  SwResult result;
  RunReport report;
};

DtwRun dtw_squire(SquireMachine& machine, std::span<const float> s, std::span<const float> r,
                  const KernelCosts& costs = {});
DtwRun dtw_baseline(SquireMachine& machine, std::span<const float> s, std::span<const float> r,
                    const KernelCosts& costs = {});
SwRun sw_squire(SquireMachine& machine, std::string_view a, std::string_view b, const SwScoring& scoring = {},
                const KernelCosts& costs = {});
SwRun sw_baseline(SquireMachine& machine, std::string_view a, std::string_view b, const SwScoring& scoring = {},
                  const KernelCosts& costs = {});

// Host programs for embedding SW in a larger host program (pipeline align
// stage). The result is written to `out` when the program finishes.
Program sw_squire_program(SquireMachine& machine, std::string_view a, std::string_view b, SwScoring scoring,
                          KernelCosts costs, SwResult* out);
Program sw_host_program(SquireMachine& machine, std::string_view a, std::string_view b, SwScoring scoring,
                        KernelCosts costs, SwResult* out);

}  // namespace squire
