#include "covertseq/covert.hpp"

#include <cmath>
#include <stdexcept>

namespace covertseq {

CovertResult covert_prob_shewhart(double q, std::uint64_t L, double gamma) {
  if (!(q > 0.0)) throw std::invalid_argument("covert_prob_shewhart: q must be > 0");
  if (L < 1) throw std::invalid_argument("covert_prob_shewhart: L must be >= 1");
  if (!(gamma > 1.0)) throw std::invalid_argument("covert_prob_shewhart: gamma must be > 1");
  CovertResult r;
  r.kind = TestKind::shewhart;
  const double miss = -std::exp(-std::log(gamma) / (1.0 + q));  // -gamma^{-1/(1+q)}
  r.value = std::exp(static_cast<double>(L) * std::log1p(miss));
  return r;
}

CovertResult covert_probability(TestKind kind, double q, std::uint64_t L, std::uint64_t nu,
                                double gamma, double threshold, const CovertOptions& opts) {
  switch (kind) {
    case TestKind::shewhart:
      return covert_prob_shewhart(q, L, gamma);
    case TestKind::cusum:
      return covert_prob_cusum(q, L, nu, threshold, opts.cusum);
    case TestKind::sr:
      return covert_prob_sr(q, L, nu, threshold, opts.sr_grid_n);
  }
  throw std::invalid_argument("covert_probability: unknown test kind");
}

}  // namespace covertseq
