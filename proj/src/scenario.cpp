#include "covertseq/scenario.hpp"

#include <cmath>
#include <stdexcept>

namespace covertseq {

const char* test_name(TestKind kind) {
  switch (kind) {
    case TestKind::shewhart: return "shewhart";
    case TestKind::cusum: return "cusum";
    case TestKind::sr: return "sr";
  }
  return "?";
}

NormalizedChannel normalize(double q_raw, double sigma_w2, double sigma_b2) {
  if (!(sigma_w2 > 0.0) || !(sigma_b2 > 0.0))
    throw std::invalid_argument("normalize: noise powers must be positive");
  if (q_raw < 0.0) throw std::invalid_argument("normalize: q_raw must be >= 0");
  return {q_raw / sigma_w2, sigma_w2 / sigma_b2};
}

void ScenarioParams::validate() const {
  if (!(q > 0.0)) throw std::invalid_argument("ScenarioParams: q must be > 0");
  if (!(sigma_ratio > 0.0))
    throw std::invalid_argument("ScenarioParams: sigma_ratio must be > 0");
  if (!(gamma > 1.0)) throw std::invalid_argument("ScenarioParams: gamma must be > 1");
  if (!(theta > 0.0 && theta < 1.0))
    throw std::invalid_argument("ScenarioParams: theta must be in (0,1)");
  if (L < 1) throw std::invalid_argument("ScenarioParams: L must be >= 1");
}

double likelihood_ratio(ObservationPower x, double q) {
  if (x.value < 0.0) throw std::invalid_argument("likelihood_ratio: x must be >= 0");
  if (!(q > 0.0)) throw std::invalid_argument("likelihood_ratio: q must be > 0");
  return std::exp(q * x.value / (1.0 + q)) / (1.0 + q);
}

double cusum_drift_omega(double q) {
  // log1p keeps the q -> 0 limit (omega -> 1) accurate.
  return (1.0 + q) / q * std::log1p(q);
}

ObservationPower sample_observation(RngStream& rng, Phase phase, double q) {
  const double mean = phase == Phase::pre ? 1.0 : 1.0 + q;
  return {rng.next_exponential(mean)};
}

}  // namespace covertseq
