#include "covertseq/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "covertseq/errors.hpp"
#include "covertseq/parallel.hpp"
#include "covertseq/rng.hpp"

namespace covertseq {

namespace {

struct ChunkPlan {
  std::size_t chunks;
  std::uint64_t per_chunk;
};

ChunkPlan plan_chunks(std::uint64_t trials) {
  const std::size_t workers = worker_count();
  const std::size_t chunks = std::max<std::size_t>(1, std::min<std::uint64_t>(trials, workers * 8));
  return {chunks, (trials + chunks - 1) / chunks};
}

}  // namespace

McEstimate estimate_covert_prob(TestKind kind, const ScenarioParams& params, double threshold,
                                std::uint64_t trials, std::uint64_t seed) {
  params.validate();
  if (trials < 1000)
    throw std::invalid_argument("estimate_covert_prob: trials must be >= 1000");
  if (params.nu == kNoChange)
    throw std::invalid_argument("estimate_covert_prob: nu must be finite");

  RunSpec spec;
  spec.kind = kind;
  spec.q = params.q;
  spec.threshold = threshold;
  spec.nu = params.nu;
  spec.L = params.L;
  spec.step_cap = params.nu + params.L;  // censoring here means full survival

  const ChunkPlan plan = plan_chunks(trials);
  std::vector<std::uint64_t> kept(plan.chunks, 0), success(plan.chunks, 0);
  parallel_for(plan.chunks, [&](std::size_t c) {
    const std::uint64_t lo = c * plan.per_chunk;
    const std::uint64_t hi = std::min<std::uint64_t>(trials, lo + plan.per_chunk);
    std::uint64_t k = 0, s = 0;
    for (std::uint64_t i = lo; i < hi; ++i) {
      RngStream rng(seed, i);
      const StoppingRecord rec = run_to_alarm(spec, rng);
      if (!rec.censored && rec.t_stop <= params.nu) continue;  // false alarm: discarded
      ++k;
      if (rec.censored) ++s;  // survived all nu + L samples
    }
    kept[c] = k;
    success[c] = s;
  });

  std::uint64_t n_kept = 0, n_success = 0;
  for (std::size_t c = 0; c < plan.chunks; ++c) {
    n_kept += kept[c];
    n_success += success[c];
  }
  if (n_kept * 100 < trials)
    throw ConditioningStarvationError(
        "estimate_covert_prob: kept " + std::to_string(n_kept) + " of " +
        std::to_string(trials) + " trials (conditioning starvation)");

  McEstimate est;
  est.n_trials = trials;
  est.n_kept = n_kept;
  est.seed = seed;
  est.mean = static_cast<double>(n_success) / static_cast<double>(n_kept);
  est.std_error = std::sqrt(est.mean * (1.0 - est.mean) / static_cast<double>(n_kept));
  return est;
}

McEstimate estimate_arl2fa(TestKind kind, double q, double threshold, std::uint64_t trials,
                           std::uint64_t seed, std::uint64_t step_cap) {
  if (trials < 1000) throw std::invalid_argument("estimate_arl2fa: trials must be >= 1000");

  RunSpec spec;
  spec.kind = kind;
  spec.q = q;
  spec.threshold = threshold;
  spec.nu = kNoChange;
  spec.step_cap = step_cap;

  const ChunkPlan plan = plan_chunks(trials);
  std::vector<unsigned __int128> sums(plan.chunks, 0), sq_sums(plan.chunks, 0);
  std::vector<std::uint64_t> censored(plan.chunks, 0);
  parallel_for(plan.chunks, [&](std::size_t c) {
    const std::uint64_t lo = c * plan.per_chunk;
    const std::uint64_t hi = std::min<std::uint64_t>(trials, lo + plan.per_chunk);
    unsigned __int128 s = 0, s2 = 0;
    std::uint64_t cen = 0;
    for (std::uint64_t i = lo; i < hi; ++i) {
      RngStream rng(seed, i);
      const StoppingRecord rec = run_to_alarm(spec, rng);
      s += rec.t_stop;
      s2 += static_cast<unsigned __int128>(rec.t_stop) * rec.t_stop;
      if (rec.censored) ++cen;
    }
    sums[c] = s;
    sq_sums[c] = s2;
    censored[c] = cen;
  });

  unsigned __int128 total = 0, total_sq = 0;
  std::uint64_t n_censored = 0;
  for (std::size_t c = 0; c < plan.chunks; ++c) {
    total += sums[c];
    total_sq += sq_sums[c];
    n_censored += censored[c];
  }
  if (n_censored * 1000 > trials)
    throw ConditioningStarvationError("estimate_arl2fa: " + std::to_string(n_censored) +
                                      " censored runs out of " + std::to_string(trials));

  const double n = static_cast<double>(trials);
  const double mean = static_cast<double>(total) / n;
  const double mean_sq = static_cast<double>(total_sq) / n;
  const double var = std::max(0.0, mean_sq - mean * mean) * n / std::max(1.0, n - 1.0);

  McEstimate est;
  est.n_trials = trials;
  est.n_kept = trials - n_censored;
  est.seed = seed;
  est.mean = mean;
  est.std_error = std::sqrt(var / n);
  return est;
}

EmpiricalCdf empirical_statistic_cdf(TestKind kind, const ScenarioParams& params,
                                     double threshold, std::uint64_t trials,
                                     std::uint64_t seed) {
  params.validate();
  if (params.nu < 1 || params.nu == kNoChange)
    throw std::invalid_argument("empirical_statistic_cdf: nu must be >= 1 and finite");
  if (kind == TestKind::shewhart)
    throw std::invalid_argument("empirical_statistic_cdf: only cusum and sr carry state");

  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> slot(trials, nan);
  const ChunkPlan plan = plan_chunks(trials);
  parallel_for(plan.chunks, [&](std::size_t c) {
    const std::uint64_t lo = c * plan.per_chunk;
    const std::uint64_t hi = std::min<std::uint64_t>(trials, lo + plan.per_chunk);
    for (std::uint64_t i = lo; i < hi; ++i) {
      RngStream rng(seed, i);
      if (kind == TestKind::cusum) {
        CusumState s = make_cusum_state(params.q, threshold);
        bool alarmed = false;
        for (std::uint64_t t = 0; t < params.nu; ++t) {
          s = cusum_step(s, {rng.next_exponential(1.0)});
          if (s.alarmed()) {
            alarmed = true;
            break;
          }
        }
        if (!alarmed) slot[i] = s.c_hat;
      } else {
        SrState s = make_sr_state(params.q, threshold);
        bool alarmed = false;
        for (std::uint64_t t = 0; t < params.nu; ++t) {
          s = sr_step(s, {rng.next_exponential(1.0)}, params.q);
          if (s.alarmed()) {
            alarmed = true;
            break;
          }
        }
        if (!alarmed) slot[i] = s.r;
      }
    }
  });

  EmpiricalCdf out;
  out.n_trials = trials;
  out.sorted_values.reserve(trials);
  for (double v : slot)
    if (!std::isnan(v)) out.sorted_values.push_back(v);
  out.n_kept = out.sorted_values.size();
  if (out.n_kept * 100 < trials)
    throw ConditioningStarvationError("empirical_statistic_cdf: kept " +
                                      std::to_string(out.n_kept) + " of " +
                                      std::to_string(trials));
  std::sort(out.sorted_values.begin(), out.sorted_values.end());
  return out;
}

double ks_distance(const std::vector<double>& sorted_samples,
                   const std::function<double(double)>& cdf) {
  const std::size_t n = sorted_samples.size();
  if (n == 0) throw std::invalid_argument("ks_distance: empty sample");
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = cdf(sorted_samples[i]);
    const double lo = static_cast<double>(i) / static_cast<double>(n);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    d = std::max({d, f - lo, hi - f});
  }
  return d;
}

}  // namespace covertseq
