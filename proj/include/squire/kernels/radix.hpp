#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "squire/kernels/common.hpp"

namespace squire {

inline constexpr std::size_t kInsertionCutoff = 32;
inline constexpr std::size_t kRadixOffloadThreshold = 10000;

// MSD radix sort on 8-bit digits, insertion sort below kInsertionCutoff.
std::vector<std::uint64_t> radix_reference(std::vector<std::uint64_t> keys);

// Sorts `data` in place using `scratch` (same size) and records the modelled
// actions against the simulated addresses of both buffers.
void radix_sort_traced(std::span<std::uint64_t> data, std::span<std::uint64_t> scratch, std::uint64_t data_addr,
                       std::uint64_t scratch_addr, const KernelCosts& costs, ActionTrace& trace);

struct RadixOptions {
  std::size_t offload_threshold = kRadixOffloadThreshold;  // offload when size > threshold
  KernelCosts costs{};
};

// Simulated buffers of one sort. After the program finishes the sorted keys
// are in `scratch` when `in_scratch` is set, otherwise in `keys`.
struct RadixBuffers {
  SimArray<std::uint64_t> keys;
  SimArray<std::uint64_t> scratch;
  bool in_scratch = false;
  bool offloaded = false;

  static RadixBuffers allocate(SimMemory& memory, std::span<const std::uint64_t> input);
  std::span<const std::uint64_t> sorted() const { return in_scratch ? scratch.data : keys.data; }
};

// Host program of the offloaded sort: start_squire, wait_gcounter(W), heap
// merge. Sorts on the host when the input is at or below the threshold.
Program radix_squire_program(SquireMachine& machine, RadixBuffers* buffers, RadixOptions options);
// Host-only sort.
Program radix_host_program(RadixBuffers* buffers, KernelCosts costs);

struct RadixRun {
  std::vector<std::uint64_t> sorted;
  RunReport report;
  bool offloaded = false;
};

RadixRun radix_squire(SquireMachine& machine, std::span<const std::uint64_t> keys, const RadixOptions& options = {});
RadixRun radix_baseline(SquireMachine& machine, std::span<const std::uint64_t> keys, const KernelCosts& costs = {});

}  // namespace squire
