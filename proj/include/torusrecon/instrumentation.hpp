#pragma once

#include <atomic>
#include <cstdint>

namespace torusrecon {

/// Process-wide counters backing the output-sensitivity checks.
struct Instrumentation {
  std::uint64_t field_evaluations = 0;  // points at which a posterior field was evaluated
  std::uint64_t grid_allocations = 0;   // ScalarFieldGrid objects created

  static Instrumentation snapshot();
  static void reset();
  static void count_evaluations(std::uint64_t points);
  static void count_grid_allocation();
};

}  // namespace torusrecon
