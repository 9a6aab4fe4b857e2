#pragma once

#include <cstdint>

#include "covertseq/covert_result.hpp"
#include "covertseq/cusum_covert.hpp"
#include "covertseq/sr_covert.hpp"

namespace covertseq {

// Closed form: (1 - gamma^{-1/(1+q)})^L, independent of the change-point.
CovertResult covert_prob_shewhart(double q, std::uint64_t L, double gamma);

struct CovertOptions {
  std::size_t sr_grid_n = 2000;
  CusumCovertOptions cusum;
};

// One covert probability for any of the three tests, given the calibrated
// threshold (eta_s_prime / eta_hat_c / eta_r). For Shewhart the threshold is
// ignored beyond consistency: the closed form already assumes calibration.
CovertResult covert_probability(TestKind kind, double q, std::uint64_t L, std::uint64_t nu,
                                double gamma, double threshold, const CovertOptions& opts = {});

}  // namespace covertseq
