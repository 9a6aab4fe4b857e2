#include "covertseq/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "covertseq/calibration.hpp"
#include "covertseq/covert.hpp"
#include "covertseq/errors.hpp"
#include "covertseq/parallel.hpp"

namespace covertseq {

double utility_nats(double q, std::uint64_t L, double sigma_ratio) {
  if (q < 0.0) throw std::invalid_argument("utility_nats: q must be >= 0");
  if (L < 1) throw std::invalid_argument("utility_nats: L must be >= 1");
  return static_cast<double>(L) * std::log1p(q * sigma_ratio);
}

std::uint64_t lmax_shewhart(double gamma, double theta) {
  if (!(gamma > 1.0) || !(theta > 0.0 && theta < 1.0))
    throw std::invalid_argument("lmax_shewhart: need gamma > 1 and theta in (0,1)");
  const double miss_one = 1.0 - 1.0 / gamma;
  if (!(miss_one > theta))
    throw InfeasibleError("lmax_shewhart: theta >= 1 - 1/gamma (= " + std::to_string(miss_one) +
                          "), no covert pair exists");
  return static_cast<std::uint64_t>(std::floor(std::log(theta) / std::log(miss_one)));
}

double optimal_q_for_L_shewhart(std::uint64_t L, double gamma, double theta) {
  if (L < 1) throw std::invalid_argument("optimal_q_for_L_shewhart: L must be >= 1");
  const double theta_root = std::pow(theta, 1.0 / static_cast<double>(L));
  const double q = -1.0 - std::log(gamma) / std::log1p(-theta_root);
  if (q < 0.0)
    throw InfeasibleError("optimal_q_for_L_shewhart: L exceeds the feasible duration range");
  return q;
}

namespace {

// smallest q, then smallest L, breaks utility ties
bool improves(const Optimum& best, double i, double q, std::uint64_t l) {
  if (!best.feasible) return true;
  if (i != best.i_star) return i > best.i_star;
  if (q != best.q_star) return q < best.q_star;
  return l < best.l_star;
}

}  // namespace

Optimum exhaustive_shewhart(const OptimizerConfig& cfg) {
  Optimum best;
  best.method = "exhaustive";
  const std::uint64_t l_max = lmax_shewhart(cfg.gamma, cfg.theta);  // throws when infeasible
  for (std::uint64_t L = 1; L <= l_max; ++L) {
    double q;
    try {
      q = optimal_q_for_L_shewhart(L, cfg.gamma, cfg.theta);
    } catch (const InfeasibleError&) {
      break;
    }
    const double i = utility_nats(q, L, cfg.sigma_ratio);
    if (cfg.collect_trace) best.trace.push_back({q, L, cfg.theta, i});
    if (improves(best, i, q, L)) {
      best.feasible = true;
      best.q_star = q;
      best.l_star = L;
      best.i_star = i;
    }
  }
  if (!best.feasible) throw InfeasibleError("exhaustive_shewhart: empty feasible set");
  return best;
}

Optimum approx_shewhart(const OptimizerConfig& cfg) {
  const double ln_gamma = std::log(cfg.gamma);
  const double disc = (2.0 - ln_gamma) * (2.0 - ln_gamma) - 4.0;
  if (disc < 0.0 || ln_gamma <= 2.0) {
    Optimum fb = exhaustive_shewhart(cfg);
    fb.method = "approx-fallback-exhaustive";
    return fb;
  }
  const double root = std::sqrt(disc);
  const double u1 = (ln_gamma - 2.0 - root) / 2.0;
  const double u2 = (ln_gamma - 2.0 + root) / 2.0;

  const std::uint64_t l_max = lmax_shewhart(cfg.gamma, cfg.theta);
  // fractional duration at the rough power u1
  const double l_frac = std::log(cfg.theta) / std::log1p(-std::exp(-ln_gamma / (1.0 + u1)));

  Optimum best;
  best.method = "approx";
  best.u1 = u1;
  best.u2 = u2;
  std::uint64_t candidates[2] = {static_cast<std::uint64_t>(std::floor(l_frac)),
                                 static_cast<std::uint64_t>(std::ceil(l_frac))};
  for (std::uint64_t L : candidates) {
    if (L < 1 || L > l_max) continue;
    double q;
    try {
      q = optimal_q_for_L_shewhart(L, cfg.gamma, cfg.theta);
    } catch (const InfeasibleError&) {
      continue;
    }
    const double i = utility_nats(q, L, cfg.sigma_ratio);
    if (cfg.collect_trace) best.trace.push_back({q, L, cfg.theta, i});
    if (improves(best, i, q, L)) {
      best.feasible = true;
      best.q_star = q;
      best.l_star = L;
      best.i_star = i;
    }
  }
  if (!best.feasible) {
    Optimum fb = exhaustive_shewhart(cfg);
    fb.method = "approx-fallback-exhaustive";
    return fb;
  }
  return best;
}

namespace {

struct GridPointResult {
  Optimum local;
  bool skipped = false;
};

GridPointResult scan_one_q(TestKind kind, const OptimizerConfig& cfg, double q) {
  GridPointResult out;
  out.local.method = "algorithm1";

  double threshold = 0.0;
  std::unique_ptr<CusumCovert> cusum;
  std::unique_ptr<SrCovert> sr;
  try {
    if (kind == TestKind::cusum) {
      threshold = calibrate_cusum(cfg.gamma, q).eta_hat_c;
      CusumCovertOptions co;
      co.grid_nodes = cfg.cusum_grid_nodes;
      cusum = std::make_unique<CusumCovert>(q, threshold, co);
    } else {
      threshold = calibrate_sr(cfg.gamma, q).eta_r;
      SrCovertOptions so;
      so.grid_n = cfg.sr_grid_n;
      sr = std::make_unique<SrCovert>(q, threshold, so);
    }
  } catch (const SrThresholdError&) {
    out.skipped = true;  // q below the supported threshold regime
    return out;
  }

  for (std::uint64_t l = 1;; ++l) {
    const double cov = kind == TestKind::cusum ? cusum->covert_prob(l, cfg.nu).value
                                               : sr->covert_prob(l, cfg.nu).value;
    const double i = utility_nats(q, l, cfg.sigma_ratio);
    if (cfg.collect_trace) out.local.trace.push_back({q, l, cov, i});
    if (cov >= cfg.theta && improves(out.local, i, q, l)) {
      out.local.feasible = true;
      out.local.q_star = q;
      out.local.l_star = l;
      out.local.i_star = i;
    }
    if (cov < cfg.theta) break;
    if (l >= cfg.l_cap) {
      out.local.l_cap_hit = true;
      break;
    }
  }
  return out;
}

}  // namespace

Optimum algorithm1(TestKind kind, const OptimizerConfig& cfg) {
  if (kind == TestKind::shewhart)
    throw std::invalid_argument("algorithm1: use the closed forms for the per-sample test");
  if (!(cfg.q_min > 0.0) || !(cfg.dq > 0.0) || !(cfg.q_max > cfg.q_min))
    throw std::invalid_argument("algorithm1: need 0 < q_min < q_max and dq > 0");

  const auto n_points = static_cast<std::size_t>(
      std::floor((cfg.q_max - cfg.q_min) / cfg.dq + 1e-9)) + 1;
  std::vector<GridPointResult> results(n_points);
  parallel_for(n_points, [&](std::size_t i) {
    const double q = cfg.q_min + cfg.dq * static_cast<double>(i);
    results[i] = scan_one_q(kind, cfg, q);
  });

  Optimum best;
  best.method = "algorithm1";
  for (const GridPointResult& r : results) {
    best.l_cap_hit = best.l_cap_hit || r.local.l_cap_hit;
    if (cfg.collect_trace)
      best.trace.insert(best.trace.end(), r.local.trace.begin(), r.local.trace.end());
    if (r.skipped || !r.local.feasible) continue;
    if (improves(best, r.local.i_star, r.local.q_star, r.local.l_star)) {
      best.feasible = true;
      best.q_star = r.local.q_star;
      best.l_star = r.local.l_star;
      best.i_star = r.local.i_star;
    }
  }
  return best;  // empty feasible set reported via the flag, not an exception
}

FeasibilityReport feasibility_check(TestKind kind, double q, std::uint64_t nu, double gamma,
                                    double theta, const OptimizerConfig& cfg) {
  FeasibilityReport rep;
  rep.kind = kind;
  rep.q = q;
  rep.corollary1_threshold = 1.0 - 1.0 / gamma;

  switch (kind) {
    case TestKind::shewhart: {
      rep.bound_on_one_minus_theta = std::exp(-std::log(gamma) / (1.0 + q));
      rep.feasible_by_corollary1 = theta < rep.corollary1_threshold;
      break;
    }
    case TestKind::cusum: {
      const CusumArlSolution sol = calibrate_cusum(gamma, q);
      const double omega = sol.omega;
      const double scale = std::exp(-(omega + sol.eta_hat_c) / (1.0 + q));
      if (nu == 0) {
        rep.bound_on_one_minus_theta = scale;
      } else {
        CusumCovertOptions co;
        co.grid_nodes = cfg.cusum_grid_nodes;
        CusumCovert engine(q, sol.eta_hat_c, co);
        const double expectation = engine.prechange_expectation(
            static_cast<std::size_t>(nu), [&](double x) { return std::exp(x / (1.0 + q)); });
        rep.bound_on_one_minus_theta = scale * expectation;
      }
      break;
    }
    case TestKind::sr: {
      const SrArlSolution sol = calibrate_sr(gamma, q);
      const double log_top = std::log1p(q) + std::log(sol.eta_r);
      if (nu == 0) {
        rep.bound_on_one_minus_theta = std::exp(-log_top / q);
      } else {
        SrCovertOptions so;
        so.grid_n = cfg.sr_grid_n;
        SrCovert engine(q, sol.eta_r, so);
        rep.bound_on_one_minus_theta = engine.prechange_expectation(
            static_cast<std::size_t>(nu),
            [&](double x) { return std::exp((std::log1p(x) - log_top) / q); });
      }
      break;
    }
  }
  rep.theta_max = 1.0 - rep.bound_on_one_minus_theta;
  return rep;
}

}  // namespace covertseq
