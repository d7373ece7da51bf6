#pragma once

#include <cstdint>

namespace spineless {

/// Per-frame instrumentation. Ticks are steady_clock ticks (nanoseconds on
/// the supported platforms).
struct FrameCounters {
  std::uint64_t recomputed_bits = 0;
  std::uint64_t dirty_calls = 0;
  std::uint64_t heap_pushes = 0;
  std::uint64_t heap_pops = 0;
  std::uint64_t heap_max_len = 0;
  std::uint64_t nodes_accessed = 0;  // distinct nodes touched while cleaning
  std::uint64_t aux_accesses = 0;    // traversal visits that recomputed nothing
  std::uint64_t om_creates = 0;
  std::uint64_t om_rebalances = 0;
  std::uint64_t overhead_ticks = 0;
  std::uint64_t evaluate_ticks = 0;

  // Correctness probes; all stay zero on a healthy run.
  std::uint64_t duplicate_recomputes = 0;
  std::uint64_t timestamp_violations = 0;
  std::uint64_t deleted_recomputes = 0;

  std::uint64_t deleted_skips = 0;
};

}  // namespace spineless
