#pragma once

#include <cstddef>

#include "covertseq/scenario.hpp"

namespace covertseq {

// A covert probability together with how it was produced.
struct CovertResult {
  double value = 0.0;  // in [0, 1]
  TestKind kind = TestKind::shewhart;

  struct Diagnostics {
    std::size_t table_depth = 0;     // coefficient-table depth (0 when unused)
    std::size_t grid_nodes = 0;      // integration grid size / SR quadrature N
    std::size_t g_steps = 0;         // pre-change iterations actually run
    bool g_converged_early = false;  // stopped at the quasi-stationary fixed point
    double atom_mass = 0.0;          // probability mass at the zero statistic
    bool used_coeff_tables = false;
    bool selftest_pass = false;      // coefficient tables matched the integral recursion
    double clamp_excess = 0.0;       // largest out-of-[0,1] excess that was clamped
  } diag;
};

}  // namespace covertseq
