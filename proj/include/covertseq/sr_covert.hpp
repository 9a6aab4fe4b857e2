#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "covertseq/covert_result.hpp"
#include "covertseq/numeric.hpp"
#include "covertseq/scenario.hpp"

namespace covertseq {

// One-step conditional CDF of the SR statistic given current value u.
// Support starts at (1+u)/(1+q); the tail is a power law in x over that.
double sr_cond_cdf(double x, double u, double q, Phase phase);

// Quadrature grid for the SR recursions: nodes spanning [1/(1+q), eta_r],
// log-spaced in (1+x), with the trapezoidal transition-kernel matrix
// assembled from post-change CDF differences. Row i holds the weights that
// advance a survival curve one step when the current statistic is node i.
struct SrQuadGrid {
  double q = 0.0;
  double eta_r = 0.0;
  std::vector<double> nodes;      // xi_0..xi_N
  std::vector<double> kernel;     // (N+1)x(N+1), row-major
  std::vector<double> from_zero;  // one-step weights for a start at statistic 0

  // cached geometry for the log-space recursions
  std::vector<double> log1p_nodes;   // ln(1 + xi_j)
  std::vector<double> log_nodes;     // ln(xi_j)
  std::vector<GridPoint> u_loc;      // location of (1+xi_i)/(1+q)
  std::vector<double> log_u;         // ln((1+xi_i)/(1+q))
  std::vector<GridPoint> b_loc;      // location of min((1+q)xi_i - 1, eta_r)
  std::vector<double> log_s;         // ln((1+q)xi_i)
  std::vector<bool> b_at_top;        // whether the support cut reaches eta_r

  std::size_t n() const { return nodes.size() - 1; }
};

SrQuadGrid build_sr_grid(std::size_t N, double q, double eta_r);

// Same node layout without the O(N^2) kernel; enough for the pre-change
// recursion, which only needs the cached geometry.
SrQuadGrid build_sr_nodes(std::size_t N, double q, double eta_r);

// Survival curve after L post-change steps at every node, via L-1
// applications of the transposed kernel to the closed-form first curve.
// Entries are clamped to [0, 1].
std::vector<double> sr_survival_curve(std::size_t L, const SrQuadGrid& grid);

// One kernel application (t_n -> t_{n+1}), reusing a scratch buffer.
void sr_survival_step(const SrQuadGrid& grid, std::vector<double>& t,
                      std::vector<double>& scratch);

struct SrPrechangeCdf {
  std::vector<double> values;      // CDF at the grid nodes
  std::size_t steps_used = 0;      // iterations actually run
  bool converged_early = false;    // hit the quasi-stationary fixed point
};

// Conditional CDF of the statistic after nu pre-change steps given no alarm,
// iterated in log space with renormalization each step and a quasi-stationary
// early stop.
SrPrechangeCdf sr_prechange_cdf(std::size_t nu, const SrQuadGrid& grid,
                                double converge_tol = 1e-8);

struct SrCovertOptions {
  std::size_t grid_n = 2000;
  // The pre-change chain runs on a grid this many times finer than grid_n;
  // its shape error otherwise dominates the paired integral.
  std::size_t g_grid_factor = 8;
  double g_converge_tol = 1e-8;
};

class SrCovert {
 public:
  SrCovert(double q, double eta_r, SrCovertOptions opts = {});

  const SrQuadGrid& grid() const { return grid_; }
  const std::vector<double>& survival_curve(std::size_t L);  // cached chain

  // Pre-change CDF on the fine grid (cached, one nu at a time).
  const SrQuadGrid& fine_grid() const { return g_grid_; }
  const SrPrechangeCdf& prechange_cdf(std::size_t nu);
  double prechange_cdf_at(std::size_t nu, double x);

  CovertResult covert_prob(std::uint64_t L, std::uint64_t nu);
  double prechange_expectation(std::size_t nu, const std::function<double(double)>& f);

 private:
  SrCovertOptions opts_;
  SrQuadGrid grid_;
  SrQuadGrid g_grid_;
  std::vector<std::vector<double>> t_rows_;
  SrPrechangeCdf g_cache_;
  std::size_t g_cache_nu_ = 0;
};

CovertResult covert_prob_sr(double q, std::uint64_t L, std::uint64_t nu, double eta_r,
                            std::size_t N = 2000);

}  // namespace covertseq
