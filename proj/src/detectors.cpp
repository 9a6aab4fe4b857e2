#include "covertseq/detectors.hpp"

#include <cmath>
#include <stdexcept>

#include "covertseq/errors.hpp"

namespace covertseq {

ShewhartConfig make_shewhart_config(double eta_s_prime) {
  if (!(eta_s_prime > 0.0))
    throw std::invalid_argument("make_shewhart_config: eta_s_prime must be > 0");
  return {eta_s_prime};
}

bool shewhart_step(ObservationPower x, const ShewhartConfig& cfg) {
  return x.value >= cfg.eta_s_prime;
}

CusumState make_cusum_state(double q, double eta_hat_c) {
  if (!(q > 0.0)) throw std::invalid_argument("make_cusum_state: q must be > 0");
  if (!(eta_hat_c > 0.0))
    throw std::invalid_argument("make_cusum_state: eta_hat_c must be > 0");
  CusumState s;
  s.c_hat = 0.0;
  s.omega = cusum_drift_omega(q);
  s.eta_hat_c = eta_hat_c;
  s.m_pieces = static_cast<int>(std::ceil(eta_hat_c / s.omega));
  if (s.m_pieces < 1) s.m_pieces = 1;
  return s;
}

CusumState cusum_step(CusumState s, ObservationPower x) {
  s.c_hat = std::max(0.0, s.c_hat + x.value - s.omega);
  return s;
}

SrState make_sr_state(double q, double eta_r) {
  if (!(q > 0.0)) throw std::invalid_argument("make_sr_state: q must be > 0");
  if (!(eta_r >= 1.0 / q))
    throw SrThresholdError("make_sr_state: eta_r below 1/q is not supported (q=" +
                           std::to_string(q) + ", eta_r=" + std::to_string(eta_r) + ")");
  SrState s;
  s.r = 0.0;
  s.eta_r = eta_r;
  return s;
}

SrState sr_step(SrState s, ObservationPower x, double q) {
  s.r = (1.0 + s.r) / (1.0 + q) * std::exp(q * x.value / (1.0 + q));
  return s;
}

namespace {

template <typename Alarm>
StoppingRecord run_loop(const RunSpec& spec, RngStream& rng, Alarm&& alarmed_after) {
  const double post_mean = 1.0 + spec.q;
  StoppingRecord rec;
  for (std::uint64_t t = 1; t <= spec.step_cap; ++t) {
    const bool post = spec.nu != kNoChange && t > spec.nu && t - spec.nu <= spec.L;
    const double x = rng.next_exponential(post ? post_mean : 1.0);
    if (alarmed_after(x)) {
      rec.t_stop = t;
      rec.alarmed_pre_change = spec.nu != kNoChange && t <= spec.nu;
      rec.delay = (spec.nu != kNoChange && t > spec.nu) ? t - spec.nu : 0;
      return rec;
    }
  }
  rec.t_stop = spec.step_cap;
  rec.censored = true;
  rec.alarmed_pre_change = false;
  rec.delay = 0;
  return rec;
}

}  // namespace

StoppingRecord run_to_alarm(const RunSpec& spec, RngStream& rng) {
  if (!(spec.threshold > 0.0))
    throw std::invalid_argument("run_to_alarm: threshold must be > 0");
  switch (spec.kind) {
    case TestKind::shewhart: {
      const ShewhartConfig cfg = make_shewhart_config(spec.threshold);
      return run_loop(spec, rng, [&](double x) { return x >= cfg.eta_s_prime; });
    }
    case TestKind::cusum: {
      CusumState s = make_cusum_state(spec.q, spec.threshold);
      return run_loop(spec, rng, [&](double x) {
        s.c_hat = std::max(0.0, s.c_hat + x - s.omega);
        return s.alarmed();
      });
    }
    case TestKind::sr: {
      SrState s = make_sr_state(spec.q, spec.threshold);
      const double inv_1q = 1.0 / (1.0 + spec.q);
      const double expo = spec.q * inv_1q;
      return run_loop(spec, rng, [&](double x) {
        s.r = (1.0 + s.r) * inv_1q * std::exp(expo * x);
        return s.alarmed();
      });
    }
  }
  throw std::invalid_argument("run_to_alarm: unknown test kind");
}

}  // namespace covertseq
