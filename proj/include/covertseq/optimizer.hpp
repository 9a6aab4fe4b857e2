#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "covertseq/covert_result.hpp"
#include "covertseq/scenario.hpp"

namespace covertseq {

// Throughput proxy in nats: L * ln(1 + q * sigma_ratio), with
// sigma_ratio = sigma_w2 / sigma_b2 and q the normalized transmit power.
double utility_nats(double q, std::uint64_t L, double sigma_ratio);

// Largest duration with a nonnegative active-constraint power under the
// per-sample test; throws InfeasibleError when theta >= 1 - 1/gamma.
std::uint64_t lmax_shewhart(double gamma, double theta);

// Power making the covert constraint active at duration L (throws when
// L exceeds lmax_shewhart).
double optimal_q_for_L_shewhart(std::uint64_t L, double gamma, double theta);

struct TracePoint {
  double q = 0.0;
  std::uint64_t L = 0;
  double covert = 0.0;
  double utility = 0.0;
};

struct Optimum {
  double q_star = 0.0;
  std::uint64_t l_star = 0;
  double i_star = 0.0;
  bool feasible = false;
  std::string method;
  std::vector<TracePoint> trace;
  // closed-form approximation diagnostics (per-sample test only)
  double u1 = std::numeric_limits<double>::quiet_NaN();
  double u2 = std::numeric_limits<double>::quiet_NaN();
  bool l_cap_hit = false;  // inner loop never saw the constraint go slack
};

struct OptimizerConfig {
  double gamma = 500.0;
  double theta = 0.95;
  double sigma_ratio = 1.0;
  std::uint64_t nu = 0;
  double q_min = 1e-3;
  double q_max = 2.0;
  double dq = 1e-3;
  std::size_t l_cap = 20000;
  // inner-loop evaluation resolutions (coarser than one-shot defaults; the
  // scan only needs consistent values across its own grid)
  std::size_t sr_grid_n = 1000;
  std::size_t cusum_grid_nodes = 3000;
  bool collect_trace = false;
};

// Scan over L with the constraint active at every duration.
Optimum exhaustive_shewhart(const OptimizerConfig& cfg);

// Closed-form approximation: power from the smaller stationary point of the
// smoothed objective, duration from it (both roundings of the fractional
// duration are evaluated), then the power re-activated at that duration.
Optimum approx_shewhart(const OptimizerConfig& cfg);

// Grid scan over q; for each q the duration grows until the covert
// constraint goes slack, reusing the per-q tables and curves.
Optimum algorithm1(TestKind kind, const OptimizerConfig& cfg);

struct FeasibilityReport {
  TestKind kind = TestKind::shewhart;
  double q = 0.0;
  double bound_on_one_minus_theta = 0.0;  // least achievable 1 - covert at L = 1
  double theta_max = 0.0;                 // largest covert floor any L >= 1 can meet
  bool feasible_by_corollary1 = false;    // per-sample test vs the given theta
  double corollary1_threshold = 0.0;      // 1 - 1/gamma
};

FeasibilityReport feasibility_check(TestKind kind, double q, std::uint64_t nu, double gamma,
                                    double theta, const OptimizerConfig& cfg = {});

}  // namespace covertseq
