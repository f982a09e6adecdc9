#pragma once

#include <cstdint>

namespace squire {

// Modelled instruction counts per unit of kernel work. The values count the
// arithmetic, compare, address and branch operations of the native loops;
// docs/cost_table.md lists the derivation of each entry.
struct KernelCosts {
  // radix
  std::uint64_t radix_count_ops = 4;        // per key: load, shift, mask, increment
  std::uint64_t radix_scatter_ops = 5;      // per key: load, digit, fetch offset, store, bump
  std::uint64_t radix_prefix_ops = 2;       // per bucket: add, store
  std::uint64_t radix_copy_ops = 2;         // per key: load, store
  std::uint64_t insertion_compare_ops = 3;  // per inner step: load, compare, move
  std::uint64_t insertion_element_ops = 4;  // per key: load, store, loop
  std::uint64_t merge_base_ops = 4;         // per output key: pop, store, refill
  std::uint64_t merge_level_ops = 4;        // per heap level per output key
  // seeding
  std::uint64_t minimizer_ops_per_base = 10;
  std::uint64_t index_lookup_ops = 20;  // hash, probe, compare
  std::uint64_t anchor_emit_ops = 4;
  // chaining
  std::uint64_t chain_matchup_ops = 16;  // alpha, beta, log2, compare against sentinel, store AUX
  std::uint64_t chain_combine_ops = 4;   // per valid predecessor: load F, add, compare, select
  std::uint64_t chain_anchor_ops = 8;    // per anchor: bounds, floor, stores
  // 2D dynamic programming
  std::uint64_t dtw_cell_ops = 12;  // two loads, sub, abs, two mins, add, store, diag move, loop, address math
  std::uint64_t sw_cell_ops = 20;   // base load, compare, select, load, adds, maxes, store, best, loop, address math
  std::uint64_t dp_row_ops = 6;     // per row block: bounds and pointer setup
};

}  // namespace squire
