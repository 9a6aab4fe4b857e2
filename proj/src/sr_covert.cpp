#include "covertseq/sr_covert.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "covertseq/errors.hpp"

namespace covertseq {

double sr_cond_cdf(double x, double u, double q, Phase phase) {
  if (u < 0.0) throw std::invalid_argument("sr_cond_cdf: u must be >= 0");
  if (!(q > 0.0)) throw std::invalid_argument("sr_cond_cdf: q must be > 0");
  const double u_tilde = (1.0 + u) / (1.0 + q);
  if (x < u_tilde) return 0.0;
  const double expo = phase == Phase::post ? -1.0 / q : -(1.0 + q) / q;
  return 1.0 - std::exp(expo * std::log(x / u_tilde));
}

namespace {
SrQuadGrid build_sr_grid_impl(std::size_t N, double q, double eta_r, bool with_kernel);
}  // namespace

SrQuadGrid build_sr_grid(std::size_t N, double q, double eta_r) {
  return build_sr_grid_impl(N, q, eta_r, true);
}

SrQuadGrid build_sr_nodes(std::size_t N, double q, double eta_r) {
  return build_sr_grid_impl(N, q, eta_r, false);
}

namespace {
SrQuadGrid build_sr_grid_impl(std::size_t N, double q, double eta_r, bool with_kernel) {
  if (N < 2) throw std::invalid_argument("build_sr_grid: N must be >= 2");
  if (!(q > 0.0)) throw std::invalid_argument("build_sr_grid: q must be > 0");
  const double lo = 1.0 / (1.0 + q);
  if (!(eta_r > lo)) throw std::invalid_argument("build_sr_grid: eta_r must exceed 1/(1+q)");

  SrQuadGrid g;
  g.q = q;
  g.eta_r = eta_r;
  g.nodes.resize(N + 1);
  const double l0 = std::log1p(lo);
  const double l1 = std::log1p(eta_r);
  for (std::size_t i = 0; i <= N; ++i) {
    const double s = l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(N);
    g.nodes[i] = std::expm1(s);
  }
  g.nodes.front() = lo;
  g.nodes.back() = eta_r;

  g.log1p_nodes.resize(N + 1);
  g.log_nodes.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i) {
    g.log1p_nodes[i] = std::log1p(g.nodes[i]);
    g.log_nodes[i] = std::log(g.nodes[i]);
  }

  // Trapezoidal weights from post-change CDF differences, one row per
  // conditioning node; mass above eta_r is an alarm and carries no weight.
  const double inv_q = 1.0 / q;
  const double log_1q = std::log1p(q);
  auto fill_row = [&](double log_u_tilde, double* row) {
    // P0[j] = max(0, 1 - exp(-(log xi_j - log u~)/q))
    std::vector<double> p(N + 1);
    for (std::size_t j = 0; j <= N; ++j) {
      const double d = g.log_nodes[j] - log_u_tilde;
      p[j] = d <= 0.0 ? 0.0 : 1.0 - std::exp(-inv_q * d);
    }
    row[0] = 0.5 * (p[1] - p[0]);
    for (std::size_t j = 1; j < N; ++j) row[j] = 0.5 * (p[j + 1] - p[j - 1]);
    row[N] = 0.5 * (p[N] - p[N - 1]);
  };

  if (with_kernel) {
    g.kernel.assign((N + 1) * (N + 1), 0.0);
    for (std::size_t i = 0; i <= N; ++i)
      fill_row(g.log1p_nodes[i] - log_1q, g.kernel.data() + i * (N + 1));
    g.from_zero.assign(N + 1, 0.0);
    fill_row(std::log(1.0 / (1.0 + q)), g.from_zero.data());
  }

  g.u_loc.resize(N + 1);
  g.log_u.resize(N + 1);
  g.b_loc.resize(N + 1);
  g.log_s.resize(N + 1);
  g.b_at_top.resize(N + 1);
  for (std::size_t i = 0; i <= N; ++i) {
    const double u_tilde = (1.0 + g.nodes[i]) / (1.0 + q);
    g.u_loc[i] = locate(g.nodes, u_tilde);
    g.log_u[i] = g.log1p_nodes[i] - log_1q;
    const double b = (1.0 + q) * g.nodes[i] - 1.0;
    g.b_at_top[i] = b >= eta_r;
    g.b_loc[i] = locate(g.nodes, std::min(b, eta_r));
    g.log_s[i] = log_1q + g.log_nodes[i];
  }
  return g;
}

std::vector<double> sr_first_curve(const SrQuadGrid& g) {
  // 1 - ((1+x)/((1+q) eta_r))^{1/q} at every node
  std::vector<double> t(g.nodes.size());
  const double log_top = std::log1p(g.q) + std::log(g.eta_r);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double e = (g.log1p_nodes[i] - log_top) / g.q;
    t[i] = std::max(0.0, 1.0 - std::exp(e));
  }
  return t;
}

}  // namespace

void sr_survival_step(const SrQuadGrid& g, std::vector<double>& t, std::vector<double>& scratch) {
  const std::size_t n = g.nodes.size();
  scratch.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = g.kernel.data() + i * n;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += row[j] * t[j];
    scratch[i] = std::min(1.0, std::max(0.0, acc));
  }
  t.swap(scratch);
}

std::vector<double> sr_survival_curve(std::size_t L, const SrQuadGrid& grid) {
  if (L < 1) throw std::invalid_argument("sr_survival_curve: L must be >= 1");
  std::vector<double> t = sr_first_curve(grid);
  std::vector<double> scratch;
  for (std::size_t l = 1; l < L; ++l) sr_survival_step(grid, t, scratch);
  return t;
}

namespace {

// One-step base CDF (normalized) at the nodes.
std::vector<double> sr_prechange_base(const SrQuadGrid& g, double p) {
  const std::size_t n = g.nodes.size();
  std::vector<double> base(n);
  const double log_top = std::log1p(g.q) + std::log(g.eta_r);
  const double norm1 = -std::expm1(-p * log_top);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = -p * (std::log1p(g.q) + g.log_nodes[i]);
    base[i] = a >= 0.0 ? 0.0 : -std::expm1(a) / norm1;
  }
  return base;
}

// Linear-space iteration; valid while (1+eta_r)^{p-1} stays in range.
SrPrechangeCdf sr_prechange_linear(std::size_t nu, const SrQuadGrid& g, double p,
                                   double converge_tol) {
  const std::size_t n = g.nodes.size();
  std::vector<double> weight(n), scale(n), top_term(n);
  for (std::size_t i = 0; i < n; ++i) {
    weight[i] = std::exp((p - 1.0) * g.log1p_nodes[i]);
    scale[i] = p * std::exp(-p * g.log_s[i]);
    const double ratio = std::log1p(g.eta_r) - g.log_s[i];  // <= 0 when b at top
    top_term[i] = g.b_at_top[i] ? -std::expm1(p * ratio) : 0.0;
  }

  SrPrechangeCdf out;
  out.steps_used = 1;
  out.values = sr_prechange_base(g, p);
  std::vector<double> integrand(n), next(n);
  for (std::size_t step = 2; step <= nu; ++step) {
    for (std::size_t i = 0; i < n; ++i) integrand[i] = weight[i] * out.values[i];
    const CumTrapezoid cum(&g.nodes, &integrand);
    for (std::size_t i = 0; i < n; ++i)
      next[i] = top_term[i] + scale[i] * cum.at(g.b_loc[i]);
    const double norm = next.back();
    double sup = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = std::min(1.0, std::max(0.0, next[i] / norm));
      sup = std::max(sup, std::abs(next[i] - out.values[i]));
    }
    out.values.swap(next);
    out.steps_used = step;
    if (sup < converge_tol) {
      out.converged_early = true;
      break;
    }
  }
  return out;
}

// Log-space iteration for very small q, where the power-law weights overflow.
SrPrechangeCdf sr_prechange_logspace(std::size_t nu, const SrQuadGrid& g, double p,
                                     double converge_tol) {
  const std::size_t n = g.nodes.size();
  std::vector<double> logG(n);
  {
    const std::vector<double> base = sr_prechange_base(g, p);
    for (std::size_t i = 0; i < n; ++i) logG[i] = base[i] > 0.0 ? std::log(base[i]) : kNegInf;
  }

  SrPrechangeCdf out;
  out.steps_used = 1;
  std::vector<double> integrand(n), next(n);
  const double log_p = std::log(p);
  for (std::size_t step = 2; step <= nu; ++step) {
    for (std::size_t i = 0; i < n; ++i)
      integrand[i] = logG[i] == kNegInf ? kNegInf : (p - 1.0) * g.log1p_nodes[i] + logG[i];
    const LogCumTrapezoid cum(&g.nodes, &integrand);
    for (std::size_t i = 0; i < n; ++i) {
      double v = log_p + cum.at(g.b_loc[i]) - p * g.log_s[i];
      if (g.b_at_top[i]) {
        const double log_ratio = std::log1p(g.eta_r) - g.log_s[i];  // <= 0
        const double f = -std::expm1(p * log_ratio);
        if (f > 0.0) v = log_add(v, std::log(f));
      }
      next[i] = v;
    }
    const double norm = next.back();
    double sup = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] -= norm;
      if (next[i] > 0.0) next[i] = 0.0;
      const double lin_new = next[i] == kNegInf ? 0.0 : std::exp(next[i]);
      const double lin_old = logG[i] == kNegInf ? 0.0 : std::exp(logG[i]);
      sup = std::max(sup, std::abs(lin_new - lin_old));
    }
    logG.swap(next);
    out.steps_used = step;
    if (sup < converge_tol) {
      out.converged_early = true;
      break;
    }
  }

  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] = logG[i] == kNegInf ? 0.0 : std::exp(logG[i]);
  return out;
}

}  // namespace

SrPrechangeCdf sr_prechange_cdf(std::size_t nu, const SrQuadGrid& g, double converge_tol) {
  if (nu < 1) throw std::invalid_argument("sr_prechange_cdf: nu must be >= 1");
  const double p = (1.0 + g.q) / g.q;
  if (nu == 1) {
    SrPrechangeCdf out;
    out.steps_used = 1;
    out.values = sr_prechange_base(g, p);
    return out;
  }
  const bool fits_linear = p * (std::log1p(g.eta_r) + std::log1p(g.q)) < 650.0;
  return fits_linear ? sr_prechange_linear(nu, g, p, converge_tol)
                     : sr_prechange_logspace(nu, g, p, converge_tol);
}

// ---------------------------------------------------------------------------
// Facade
// ---------------------------------------------------------------------------

SrCovert::SrCovert(double q, double eta_r, SrCovertOptions opts)
    : opts_(opts),
      grid_(build_sr_grid(opts.grid_n, q, eta_r)),
      g_grid_(build_sr_nodes(std::max<std::size_t>(2, opts.grid_n * opts.g_grid_factor), q,
                             eta_r)) {
  if (eta_r < 1.0 / q)
    throw SrThresholdError("SrCovert: eta_r below 1/q is not supported (q=" + std::to_string(q) +
                           ")");
}

const std::vector<double>& SrCovert::survival_curve(std::size_t L) {
  if (L < 1) throw std::invalid_argument("SrCovert::survival_curve: L must be >= 1");
  if (t_rows_.empty()) t_rows_.push_back(sr_first_curve(grid_));
  std::vector<double> scratch;
  while (t_rows_.size() < L) {
    std::vector<double> t = t_rows_.back();
    sr_survival_step(grid_, t, scratch);
    t_rows_.push_back(std::move(t));
  }
  return t_rows_[L - 1];
}

const SrPrechangeCdf& SrCovert::prechange_cdf(std::size_t nu) {
  if (g_cache_nu_ != nu) {
    g_cache_ = sr_prechange_cdf(nu, g_grid_, opts_.g_converge_tol);
    g_cache_nu_ = nu;
  }
  return g_cache_;
}

double SrCovert::prechange_cdf_at(std::size_t nu, double x) {
  const SrPrechangeCdf& g = prechange_cdf(nu);
  if (x < g_grid_.nodes.front()) return 0.0;
  if (x >= g_grid_.nodes.back()) return 1.0;
  const GridPoint p = locate(g_grid_.nodes, x);
  return g.values[p.cell] + (g.values[p.cell + 1] - g.values[p.cell]) * p.t;
}

CovertResult SrCovert::covert_prob(std::uint64_t L, std::uint64_t nu) {
  if (L < 1) throw std::invalid_argument("SrCovert::covert_prob: L must be >= 1");
  CovertResult r;
  r.kind = TestKind::sr;
  r.diag.grid_nodes = grid_.n();
  const auto Ln = static_cast<std::size_t>(L);

  if (nu == 0) {
    r.diag.atom_mass = 1.0;
    if (Ln == 1) {
      const double e = -(std::log1p(grid_.q) + std::log(grid_.eta_r)) / grid_.q;
      r.value = 1.0 - std::exp(e);
    } else {
      const std::vector<double>& t = survival_curve(Ln - 1);
      KahanSum acc;
      for (std::size_t j = 0; j < t.size(); ++j) acc.add(grid_.from_zero[j] * t[j]);
      r.value = acc.value();
    }
  } else {
    const auto nun = static_cast<std::size_t>(std::min<std::uint64_t>(nu, 1u << 30));
    const std::vector<double>& t = survival_curve(Ln);
    const SrPrechangeCdf& g = prechange_cdf(nun);
    // pair on the kernel nodes; the fine-grid CDF interpolates onto them
    KahanSum acc;
    double g_prev = 0.0;
    for (std::size_t j = 0; j + 1 < t.size(); ++j) {
      const GridPoint p = locate(g_grid_.nodes, grid_.nodes[j + 1]);
      const double g_next =
          j + 2 == t.size()
              ? 1.0
              : g.values[p.cell] + (g.values[p.cell + 1] - g.values[p.cell]) * p.t;
      acc.add(0.5 * (t[j] + t[j + 1]) * (g_next - g_prev));
      g_prev = g_next;
    }
    r.value = acc.value();
    r.diag.g_steps = g.steps_used;
    r.diag.g_converged_early = g.converged_early;
  }

  const double excess = std::max(0.0, std::max(-r.value, r.value - 1.0));
  r.diag.clamp_excess = excess;
  r.value = std::min(1.0, std::max(0.0, r.value));
  return r;
}

double SrCovert::prechange_expectation(std::size_t nu, const std::function<double(double)>& f) {
  const SrPrechangeCdf& g = prechange_cdf(nu);
  KahanSum acc;
  for (std::size_t j = 0; j + 1 < g_grid_.nodes.size(); ++j)
    acc.add(0.5 * (f(g_grid_.nodes[j]) + f(g_grid_.nodes[j + 1])) *
            (g.values[j + 1] - g.values[j]));
  return acc.value();
}

CovertResult covert_prob_sr(double q, std::uint64_t L, std::uint64_t nu, double eta_r,
                            std::size_t N) {
  SrCovertOptions opts;
  opts.grid_n = N;
  SrCovert engine(q, eta_r, opts);
  return engine.covert_prob(L, nu);
}

}  // namespace covertseq
