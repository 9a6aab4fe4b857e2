#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "covertseq/detectors.hpp"
#include "covertseq/scenario.hpp"

namespace covertseq {

// Estimate with binomial / sample standard error. Bit-for-bit reproducible
// for fixed (seed, trials): trial i draws from stream (seed, i) and the
// reductions are exact integer sums, so thread count cannot change them.
struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n_trials = 0;
  std::uint64_t n_kept = 0;
  std::uint64_t seed = 0;
};

// Fraction of runs with no alarm during the L transmission samples, among
// runs that survive the nu pre-change samples (rejection conditioning).
// Throws ConditioningStarvationError when fewer than 1% of trials survive.
McEstimate estimate_covert_prob(TestKind kind, const ScenarioParams& params, double threshold,
                                std::uint64_t trials, std::uint64_t seed);

// Mean alarm time under pure noise. Runs hitting the cap are counted at the
// cap; more than 0.1% of them invalidates the estimate.
McEstimate estimate_arl2fa(TestKind kind, double q, double threshold, std::uint64_t trials,
                           std::uint64_t seed, std::uint64_t step_cap = 100000000);

// Statistic values at time nu among runs with no alarm by nu, sorted.
struct EmpiricalCdf {
  std::vector<double> sorted_values;
  std::uint64_t n_trials = 0;
  std::uint64_t n_kept = 0;
};

EmpiricalCdf empirical_statistic_cdf(TestKind kind, const ScenarioParams& params,
                                     double threshold, std::uint64_t trials, std::uint64_t seed);

// One-sample Kolmogorov-Smirnov distance against a reference CDF.
double ks_distance(const std::vector<double>& sorted_samples,
                   const std::function<double(double)>& cdf);

}  // namespace covertseq
