#include "torusrecon/instrumentation.hpp"

namespace torusrecon {

namespace {
std::atomic<std::uint64_t> g_evaluations{0};
std::atomic<std::uint64_t> g_grids{0};
}  // namespace

Instrumentation Instrumentation::snapshot() {
  return {g_evaluations.load(), g_grids.load()};
}

void Instrumentation::reset() {
  g_evaluations = 0;
  g_grids = 0;
}

void Instrumentation::count_evaluations(std::uint64_t points) { g_evaluations += points; }

void Instrumentation::count_grid_allocation() { ++g_grids; }

}  // namespace torusrecon
