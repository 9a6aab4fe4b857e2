#pragma once

#include <cstdint>
#include <limits>

#include "covertseq/rng.hpp"

namespace covertseq {

enum class TestKind { shewhart, cusum, sr };

const char* test_name(TestKind kind);

// Change-point value meaning "the transmission never starts" (pure noise).
inline constexpr std::uint64_t kNoChange = std::numeric_limits<std::uint64_t>::max();

// Observation phase relative to the change-point.
enum class Phase { pre, post };

// |y_t|^2 in units of the (normalized) noise power at the adversary.
// Pre-change draws are Exponential(mean 1), post-change Exponential(mean 1+q).
struct ObservationPower {
  double value = 0.0;
};

// Channel normalization: all internal computation assumes unit noise power at
// the adversary, so the raw transmit power is divided by sigma_w2 once here
// and sigma_w2 never appears again.
struct NormalizedChannel {
  double q;            // transmit power as SNR at the adversary
  double sigma_ratio;  // sigma_w2 / sigma_b2
};

NormalizedChannel normalize(double q_raw, double sigma_w2, double sigma_b2);

// Scenario under the normalized model (noise power at the adversary == 1).
struct ScenarioParams {
  double q = 0.0;            // > 0
  double sigma_ratio = 1.0;  // > 0
  double gamma = 0.0;        // ARL2FA target, > 1
  double theta = 0.0;        // covert-probability floor, in (0,1)
  std::uint64_t nu = 0;      // change-point (kNoChange = never)
  std::uint64_t L = 1;       // transmission duration, >= 1

  void validate() const;  // throws std::invalid_argument
};

// Likelihood ratio of one observation power: e^{q x/(1+q)} / (1+q).
// Strictly increasing in x; crosses 1 at x = (1+q) ln(1+q) / q.
double likelihood_ratio(ObservationPower x, double q);

// Drift offset of the scaled CUSUM statistic: omega = (1+q)/q * ln(1+q).
// Equals the observation power at which the likelihood ratio is exactly 1.
double cusum_drift_omega(double q);

ObservationPower sample_observation(RngStream& rng, Phase phase, double q);

}  // namespace covertseq
