#include "covertseq/cusum_covert.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

#include "covertseq/errors.hpp"

namespace covertseq {

namespace {

constexpr std::size_t kMaxTablePieces = 160;  // factorials stay finite well below this

// v^l / l! with signed base.
double signed_pow_over_fact(double v, std::size_t l, const std::vector<double>& inv_fact) {
  if (l == 0) return 1.0;
  return std::pow(v, static_cast<double>(l)) * inv_fact[l];
}

std::vector<double> make_inv_factorials(std::size_t up_to) {
  std::vector<double> inv(up_to + 1, 1.0);
  double f = 1.0;
  for (std::size_t k = 1; k <= up_to; ++k) {
    f /= static_cast<double>(k);
    inv[k] = f;
  }
  return inv;
}

std::size_t checked_piece_count(double eta, double omega) {
  const double m = std::ceil(eta / omega);
  if (!(m >= 1.0) || m > static_cast<double>(kMaxTablePieces))
    throw CalibrationError("cusum coefficient tables: piece count " + std::to_string(m) +
                           " exceeds the supported cap");
  return static_cast<std::size_t>(m);
}

std::vector<double> table_kinks(double eta, double omega) {
  std::vector<double> kinks;
  for (double k = omega; k < eta; k += omega) kinks.push_back(k);
  for (double k = eta - omega; k > 0.0; k -= omega) kinks.push_back(k);
  return kinks;
}

}  // namespace

double cusum_cond_cdf(double x, double u, double q, Phase phase) {
  if (u < 0.0) throw std::invalid_argument("cusum_cond_cdf: u must be >= 0");
  const double omega = cusum_drift_omega(q);
  if (x < std::max(u - omega, 0.0)) return 0.0;
  const double rate = phase == Phase::post ? 1.0 / (1.0 + q) : 1.0;
  return 1.0 - std::exp(-(omega - u + x) * rate);
}

// ---------------------------------------------------------------------------
// Survival coefficient tables
// ---------------------------------------------------------------------------

CusumSurvivalCoeffs::CusumSurvivalCoeffs(double q, double eta_hat_c)
    : q_(q), eta_(eta_hat_c), omega_(cusum_drift_omega(q)) {
  if (!(q > 0.0) || !(eta_hat_c > 0.0))
    throw std::invalid_argument("CusumSurvivalCoeffs: q and eta_hat_c must be > 0");
  m_pieces_ = checked_piece_count(eta_, omega_);
  alpha_ = std::exp(-omega_ / (1.0 + q_)) / (1.0 + q_);
  beta_under_ = std::exp(-eta_ / (1.0 + q_));
  Table t1(1);
  t1[0] = {1.0, -std::exp(-(eta_ + omega_) / (1.0 + q_))};
  tables_.push_back(std::move(t1));
}

double CusumSurvivalCoeffs::beta(std::size_t i) const {
  return std::exp(-static_cast<double>(i) * omega_ / (1.0 + q_));
}

double CusumSurvivalCoeffs::theta_abl(long long a, long long b, std::size_t l) const {
  static thread_local std::vector<double> inv_fact;
  if (inv_fact.size() <= kMaxTablePieces + 2)
    inv_fact = make_inv_factorials(kMaxTablePieces + 2);
  const double first = a == 0 ? 0.0 : std::pow(static_cast<double>(a) * omega_,
                                               static_cast<double>(l));
  const double second = std::pow(static_cast<double>(b) * omega_ - eta_, static_cast<double>(l));
  return (first - second) * inv_fact[l];
}

double CusumSurvivalCoeffs::psi(const Table& t, std::size_t n, std::size_t k) const {
  static thread_local std::vector<double> inv_fact;
  if (inv_fact.size() <= kMaxTablePieces + 2)
    inv_fact = make_inv_factorials(kMaxTablePieces + 2);
  const std::size_t kmax = std::min(n, m_pieces_);
  const Row& row = t[k - 1];
  KahanSum acc;
  if (k < kmax) {
    acc.add((1.0 + q_) * (beta(k - 1) - beta(k)) * row[0]);
    double wpow = 1.0;
    for (std::size_t l = 1; l <= k; ++l) {
      wpow *= omega_ / static_cast<double>(l);
      acc.add(row[l] * wpow);
    }
  } else if (n <= m_pieces_) {  // k == n
    acc.add((1.0 + q_) * (beta(n - 1) - beta_under_) * row[0]);
    for (std::size_t l = 1; l <= n; ++l)
      acc.add(row[l] * theta_abl(static_cast<long long>(l) - static_cast<long long>(n),
                                 static_cast<long long>(l) - 1, l));
  } else {  // k == M, n > M
    acc.add((1.0 + q_) * (beta(m_pieces_ - 1) - beta_under_) * row[0]);
    for (std::size_t l = 1; l <= m_pieces_; ++l)
      acc.add(row[l] * theta_abl(1, static_cast<long long>(m_pieces_), l));
  }
  return acc.value();
}

void CusumSurvivalCoeffs::extend(std::size_t depth) {
  while (tables_.size() < depth) {
    const std::size_t n = tables_.size();  // current depth, building n+1
    const Table& prev = tables_.back();
    const std::size_t rows_new = std::min(n + 1, m_pieces_);
    Table next(rows_new);

    next[0].assign(2, 0.0);
    next[0][0] = prev[0][0] + prev[0][1];
    for (std::size_t i = 2; i <= rows_new; ++i) {
      next[i - 1].assign(i + 1, 0.0);
      next[i - 1][0] = prev[i - 2][0];
      for (std::size_t j = 3; j <= i + 1; ++j) next[i - 1][j - 1] = alpha_ * prev[i - 2][j - 2];
    }

    const std::size_t kmax = std::min(n, m_pieces_);
    std::vector<double> suffix(kmax + 2, 0.0);
    for (std::size_t k = kmax; k >= 1; --k) suffix[k] = suffix[k + 1] + psi(prev, n, k);
    for (std::size_t i = 1; i <= kmax; ++i)
      next[i - 1][1] = -next[i - 1][0] * beta(i) + alpha_ * suffix[i];
    if (n + 1 <= m_pieces_) {
      KahanSum tail;
      for (std::size_t k = 1; k <= n; ++k)
        tail.add(theta_abl(0, static_cast<long long>(k) - 1, k) * prev[n - 1][k]);
      next[n][1] = -next[n][0] * beta(1) * beta_under_ + alpha_ * tail.value();
    }
    tables_.push_back(std::move(next));
  }
}

double CusumSurvivalCoeffs::eval(std::size_t n, double x) const {
  if (n < 1 || n > tables_.size())
    throw std::invalid_argument("CusumSurvivalCoeffs::eval: depth not built");
  if (x < 0.0 || x > eta_)
    throw std::invalid_argument("CusumSurvivalCoeffs::eval: x outside [0, eta_hat_c]");
  static thread_local std::vector<double> inv_fact;
  if (inv_fact.size() <= kMaxTablePieces + 2)
    inv_fact = make_inv_factorials(kMaxTablePieces + 2);
  const Table& t = tables_[n - 1];
  const double epow = std::exp(x / (1.0 + q_));
  const double branch2_lo = (static_cast<double>(n) - 1.0) * omega_;
  if (x < std::min(branch2_lo, eta_)) {
    std::size_t i = static_cast<std::size_t>(std::floor(x / omega_)) + 1;
    i = std::min(i, t.size());
    const Row& row = t[i - 1];
    const double base = static_cast<double>(i) * omega_ - x;
    KahanSum acc;
    acc.add(row[0]);
    double pw = 1.0;  // base^{j-1} / (j-1)!
    for (std::size_t j = 1; j <= i; ++j) {
      acc.add(row[j] * pw * epow);
      pw *= base / static_cast<double>(j);
    }
    return acc.value();
  }
  const Row& row = t[std::min(n, m_pieces_) - 1];
  KahanSum acc;
  acc.add(row[0]);
  for (std::size_t j = 1; j <= n && j < row.size(); ++j) {
    const double arg = (static_cast<double>(j) - 1.0) * omega_ - x;
    acc.add(row[j] * signed_pow_over_fact(arg, j - 1, inv_fact) * epow);
  }
  return acc.value();
}

double CusumSurvivalCoeffs::entry(std::size_t n, std::size_t i, std::size_t j) const {
  return tables_.at(n - 1).at(i - 1).at(j - 1);
}

// ---------------------------------------------------------------------------
// Pre-change coefficient tables
// ---------------------------------------------------------------------------

CusumPrechangeCoeffs::CusumPrechangeCoeffs(double q, double eta_hat_c)
    : q_(q), eta_(eta_hat_c), omega_(cusum_drift_omega(q)) {
  if (!(q > 0.0) || !(eta_hat_c > 0.0))
    throw std::invalid_argument("CusumPrechangeCoeffs: q and eta_hat_c must be > 0");
  m_pieces_ = checked_piece_count(eta_, omega_);
  exp_neg_omega_ = std::exp(-omega_);
  Table t1(1);
  t1[0] = {1.0, exp_neg_omega_};
  const double d1 = 1.0 - exp_neg_omega_ * std::exp(-eta_);
  Table n1(1);
  n1[0] = {1.0 / d1, exp_neg_omega_ / d1};
  raw_.push_back(std::move(t1));
  norm_.push_back(std::move(n1));
  normer_.push_back(d1);
}

double CusumPrechangeCoeffs::delta(std::size_t i) const {
  return std::exp(eta_ - static_cast<double>(i) * omega_);
}

double CusumPrechangeCoeffs::varsigma(long long a, long long b, std::size_t l) const {
  static thread_local std::vector<double> inv_fact;
  if (inv_fact.size() <= kMaxTablePieces + 2)
    inv_fact = make_inv_factorials(kMaxTablePieces + 2);
  const double arg = static_cast<double>(a) * eta_ + static_cast<double>(b) * omega_;
  return std::pow(arg, static_cast<double>(l)) * inv_fact[l];
}

double CusumPrechangeCoeffs::upsilon(const Table& t, std::size_t n, std::size_t k) const {
  const std::size_t kmax = std::min(n, m_pieces_);
  const Row& row = t[k - 1];
  KahanSum acc;
  if (k < kmax) {
    acc.add(row[0] * (delta(k - 1) - delta(k)));
    for (std::size_t l = 1; l <= k; ++l)
      acc.add(-row[l] * (varsigma(1, 1, l) - varsigma(1, 0, l)));
  } else if (n <= m_pieces_) {  // k == n
    acc.add(row[0] * (delta(n - 1) - 1.0));
    for (std::size_t l = 1; l <= n; ++l)
      acc.add(-row[l] * (varsigma(1, static_cast<long long>(l) - static_cast<long long>(n), l) -
                         varsigma(0, static_cast<long long>(l) - 1, l)));
  } else {  // k == M, n > M
    acc.add(row[0] * (delta(m_pieces_ - 1) - 1.0));
    for (std::size_t l = 1; l <= m_pieces_; ++l)
      acc.add(-row[l] * (varsigma(1, 1, l) - varsigma(0, static_cast<long long>(m_pieces_), l)));
  }
  return acc.value();
}

void CusumPrechangeCoeffs::extend(std::size_t depth) {
  while (raw_.size() < depth) {
    const std::size_t n = raw_.size();
    const Table& prev = norm_.back();
    const std::size_t rows_new = std::min(n + 1, m_pieces_);
    Table next(rows_new);

    next[0].assign(2, 0.0);
    next[0][0] = 1.0;
    for (std::size_t i = 2; i <= rows_new; ++i) {
      next[i - 1].assign(i + 1, 0.0);
      next[i - 1][0] = prev[i - 2][0];
      for (std::size_t j = 3; j <= i + 1; ++j)
        next[i - 1][j - 1] = exp_neg_omega_ * prev[i - 2][j - 2];
    }

    const std::size_t kmax = std::min(n, m_pieces_);
    std::vector<double> suffix(kmax + 2, 0.0);
    for (std::size_t k = kmax; k >= 1; --k) suffix[k] = suffix[k + 1] + upsilon(prev, n, k);
    for (std::size_t i = 1; i <= kmax; ++i) {
      KahanSum middle;
      for (std::size_t l = 1; l + 1 <= i; ++l)
        middle.add(prev[i - 2][l] * varsigma(1, 0, l));
      next[i - 1][1] =
          next[i - 1][0] * delta(i) - exp_neg_omega_ * middle.value() - exp_neg_omega_ * suffix[i];
    }
    if (n + 1 <= m_pieces_) {
      KahanSum tail;
      for (std::size_t l = 1; l <= n; ++l)
        tail.add(prev[n - 1][l] * varsigma(0, static_cast<long long>(l) - 1, l));
      next[n][1] = -exp_neg_omega_ * tail.value() + exp_neg_omega_ * next[n][0];
    }

    const double d = next[0][0] - next[0][1] * std::exp(-eta_);
    if (!(d > 0.0))
      throw CalibrationError("CusumPrechangeCoeffs: non-positive normalizer at depth " +
                             std::to_string(n + 1));
    Table scaled = next;
    for (auto& row : scaled)
      for (auto& v : row) v /= d;
    raw_.push_back(std::move(next));
    norm_.push_back(std::move(scaled));
    normer_.push_back(d);
  }
}

double CusumPrechangeCoeffs::eval_raw(std::size_t n, double x) const {
  static thread_local std::vector<double> inv_fact;
  if (inv_fact.size() <= kMaxTablePieces + 2)
    inv_fact = make_inv_factorials(kMaxTablePieces + 2);
  const Table& t = raw_[n - 1];
  const double edown = std::exp(-x);
  const double bottom = eta_ - (static_cast<double>(n) - 1.0) * omega_;
  if (x < std::max(bottom, 0.0)) {
    const Row& row = t[std::min(n, m_pieces_) - 1];
    KahanSum acc;
    acc.add(row[0]);
    for (std::size_t j = 1; j <= n && j < row.size(); ++j) {
      const double arg = x + (static_cast<double>(j) - 1.0) * omega_;
      acc.add(-row[j] * signed_pow_over_fact(arg, j - 1, inv_fact) * edown);
    }
    return acc.value();
  }
  std::size_t ihat = static_cast<std::size_t>(std::ceil((eta_ - x) / omega_));
  ihat = std::max<std::size_t>(1, std::min(ihat, t.size()));
  const Row& row = t[ihat - 1];
  const double base = x + static_cast<double>(ihat) * omega_;
  KahanSum acc;
  acc.add(row[0]);
  double pw = 1.0;  // base^{j-1} / (j-1)!
  for (std::size_t j = 1; j <= ihat; ++j) {
    acc.add(-row[j] * pw * edown);
    pw *= base / static_cast<double>(j);
  }
  return acc.value();
}

double CusumPrechangeCoeffs::cdf(std::size_t n, double x) const {
  if (n < 1 || n > raw_.size())
    throw std::invalid_argument("CusumPrechangeCoeffs::cdf: depth not built");
  if (x < 0.0 || x > eta_)
    throw std::invalid_argument("CusumPrechangeCoeffs::cdf: x outside [0, eta_hat_c]");
  return eval_raw(n, x) / normer_[n - 1];
}

double CusumPrechangeCoeffs::normalizer(std::size_t n) const { return normer_.at(n - 1); }

double CusumPrechangeCoeffs::raw_entry(std::size_t n, std::size_t i, std::size_t j) const {
  return raw_.at(n - 1).at(i - 1).at(j - 1);
}

// ---------------------------------------------------------------------------
// Dense-grid integral recursion
// ---------------------------------------------------------------------------

CusumGridRecursion::CusumGridRecursion(double q, double eta_hat_c, std::size_t base_nodes)
    : q_(q), eta_(eta_hat_c), omega_(cusum_drift_omega(q)) {
  if (!(q > 0.0) || !(eta_hat_c > 0.0))
    throw std::invalid_argument("CusumGridRecursion: q and eta_hat_c must be > 0");
  x_ = build_kink_grid(0.0, eta_, table_kinks(eta_, omega_), base_nodes);
  down_.resize(x_.size());
  up_.resize(x_.size());
  for (std::size_t i = 0; i < x_.size(); ++i) {
    down_[i] = locate(x_, std::max(x_[i] - omega_, 0.0));
    up_[i] = locate(x_, std::min(x_[i] + omega_, eta_));
  }
}

void CusumGridRecursion::extend_survival(std::size_t depth) {
  const std::size_t n_nodes = x_.size();
  if (q_rows_.empty()) {
    std::vector<double> q1(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i)
      q1[i] = 1.0 - std::exp(-(eta_ + omega_ - x_[i]) / (1.0 + q_));
    q_rows_.push_back(std::move(q1));
  }
  std::vector<double> damped(n_nodes);
  while (q_rows_.size() < depth) {
    const std::vector<double>& cur = q_rows_.back();
    for (std::size_t i = 0; i < n_nodes; ++i)
      damped[i] = cur[i] * std::exp(-x_[i] / (1.0 + q_));
    const CumTrapezoid cum(&x_, &damped);
    std::vector<double> next(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
      const double scale = std::exp((x_[i] - omega_) / (1.0 + q_));
      double v = (cum.total() - cum.at(down_[i])) * scale / (1.0 + q_);
      if (x_[i] < omega_) v += cur[0] * (1.0 - scale);
      next[i] = std::min(1.0, std::max(0.0, v));
    }
    q_rows_.push_back(std::move(next));
  }
}

double CusumGridRecursion::survival(std::size_t n, double x) const {
  if (n < 1 || n > q_rows_.size())
    throw std::invalid_argument("CusumGridRecursion::survival: depth not built");
  const GridPoint p = locate(x_, x);
  const std::vector<double>& row = q_rows_[n - 1];
  return row[p.cell] + (row[p.cell + 1] - row[p.cell]) * p.t;
}

void CusumGridRecursion::extend_prechange(std::size_t nu, double converge_tol) {
  const std::size_t n_nodes = x_.size();
  if (g_rows_.empty()) {
    std::vector<double> g1(n_nodes);
    const double d1 = 1.0 - std::exp(-(omega_ + eta_));
    for (std::size_t i = 0; i < n_nodes; ++i)
      g1[i] = (1.0 - std::exp(-(omega_ + x_[i]))) / d1;
    g_rows_.push_back(std::move(g1));
  }
  std::vector<double> grown(n_nodes);
  while (g_rows_.size() < nu && !g_frozen_) {
    const std::vector<double>& cur = g_rows_.back();
    for (std::size_t i = 0; i < n_nodes; ++i) grown[i] = cur[i] * std::exp(x_[i]);
    const CumTrapezoid cum(&x_, &grown);
    std::vector<double> next(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
      double v;
      if (x_[i] >= eta_ - omega_)
        v = (1.0 - std::exp(-(x_[i] + omega_ - eta_))) + std::exp(-(x_[i] + omega_)) * cum.total();
      else
        v = std::exp(-(x_[i] + omega_)) * cum.at(up_[i]);
      next[i] = v;
    }
    const double norm = next.back();
    double sup_diff = 0.0;
    for (std::size_t i = 0; i < n_nodes; ++i) {
      next[i] = std::min(1.0, next[i] / norm);
      sup_diff = std::max(sup_diff, std::abs(next[i] - cur[i]));
    }
    g_rows_.push_back(std::move(next));
    if (sup_diff < converge_tol) {
      g_frozen_ = true;
      g_frozen_at_ = g_rows_.size();
    }
  }
}

const std::vector<double>& CusumGridRecursion::g_row_for(std::size_t nu) const {
  if (nu < 1) throw std::invalid_argument("CusumGridRecursion: nu must be >= 1");
  if (nu <= g_rows_.size()) return g_rows_[nu - 1];
  if (g_frozen_) return g_rows_.back();
  throw std::invalid_argument("CusumGridRecursion: pre-change depth not built");
}

double CusumGridRecursion::prechange_cdf(std::size_t nu, double x) const {
  const std::vector<double>& row = g_row_for(nu);
  const GridPoint p = locate(x_, x);
  return row[p.cell] + (row[p.cell + 1] - row[p.cell]) * p.t;
}

const std::vector<double>& CusumGridRecursion::prechange_row(std::size_t nu) const {
  return g_row_for(nu);
}

std::size_t CusumGridRecursion::prechange_steps(std::size_t nu) const {
  return g_frozen_ ? std::min(nu, g_frozen_at_) : std::min(nu, g_rows_.size());
}

// ---------------------------------------------------------------------------
// Facade
// ---------------------------------------------------------------------------

struct CusumCovert::Impl {
  CusumCovertOptions opts;
  double q, eta, omega;
  std::size_t m_pieces;
  std::unique_ptr<CusumSurvivalCoeffs> vtab;
  std::unique_ptr<CusumPrechangeCoeffs> atab;
  CusumGridRecursion grid;
  int selftest_state = -1;  // -1 not run, 0 fail, 1 pass
  bool tables_bad = false;
  double clamp_excess = 0.0;
  std::size_t table_g_frozen_at = 0;  // 0 = not frozen
  std::vector<double> probes;

  Impl(double q_in, double eta_in, CusumCovertOptions o)
      : opts(o), q(q_in), eta(eta_in), omega(cusum_drift_omega(q_in)),
        grid(q_in, eta_in, o.grid_nodes) {
    m_pieces = static_cast<std::size_t>(std::ceil(eta / omega));
    const bool tables_possible = m_pieces <= kMaxTablePieces && opts.engine != 2;
    if (tables_possible) {
      vtab = std::make_unique<CusumSurvivalCoeffs>(q, eta);
      atab = std::make_unique<CusumPrechangeCoeffs>(q, eta);
    }
    for (int k = 0; k < 33; ++k) probes.push_back(eta * (k + 0.5) / 33.0);
  }

  bool use_tables() {
    if (!vtab || tables_bad) return false;
    if (opts.engine == 1) return true;
    if (selftest_state < 0) run_selftest();
    return selftest_state == 1;
  }

  void run_selftest() {
    const std::size_t d = std::max<std::size_t>(1, opts.selftest_depth);
    vtab->extend(d);
    atab->extend(d);
    // The comparison needs a recursion whose own discretization error is
    // below the tolerance, so it runs on a finer throwaway grid.
    CusumGridRecursion fine(q, eta, std::max<std::size_t>(4 * opts.grid_nodes, 24000));
    fine.extend_survival(d);
    fine.extend_prechange(d, opts.g_converge_tol);
    double worst = 0.0;
    for (std::size_t n = 1; n <= d; ++n) {
      for (double x : probes) {
        worst = std::max(worst, std::abs(vtab->eval(n, x) - fine.survival(n, x)));
        worst = std::max(worst, std::abs(atab->cdf(n, x) - fine.prechange_cdf(n, x)));
      }
    }
    selftest_state = worst <= opts.selftest_tol ? 1 : 0;
  }

  double survival_guarded(std::size_t n, double x) {
    if (use_tables()) {
      vtab->extend(n);
      const double v = vtab->eval(n, x);
      if (std::isfinite(v) && v > -1e-6 && v < 1.0 + 1e-6) {
        clamp_excess = std::max({clamp_excess, -v, v - 1.0, 0.0});
        return std::min(1.0, std::max(0.0, v));
      }
      tables_bad = true;  // fall through to the defining recursion
    }
    grid.extend_survival(n);
    return grid.survival(n, x);
  }

  // Extends the table chain for the pre-change CDF with the same
  // quasi-stationary early stop the grid uses.
  std::size_t table_g_depth(std::size_t nu) {
    if (table_g_frozen_at > 0 && nu >= table_g_frozen_at) return table_g_frozen_at;
    std::size_t have = atab->depth();
    while (have < nu && table_g_frozen_at == 0) {
      atab->extend(have + 1);
      if (have >= 1) {
        double sup = 0.0;
        for (double x : probes)
          sup = std::max(sup, std::abs(atab->cdf(have + 1, x) - atab->cdf(have, x)));
        if (sup < opts.g_converge_tol) table_g_frozen_at = have + 1;
      }
      ++have;
    }
    return std::min(nu, have);
  }

  double prechange_guarded(std::size_t nu, double x) {
    if (use_tables()) {
      const std::size_t d = table_g_depth(nu);
      const double v = atab->cdf(d, x);
      if (std::isfinite(v) && v > -1e-6 && v < 1.0 + 1e-6) {
        clamp_excess = std::max({clamp_excess, -v, v - 1.0, 0.0});
        return std::min(1.0, std::max(0.0, v));
      }
      tables_bad = true;
    }
    grid.extend_prechange(nu, opts.g_converge_tol);
    return grid.prechange_cdf(nu, x);
  }
};

CusumCovert::CusumCovert(double q, double eta_hat_c, CusumCovertOptions opts)
    : impl_(std::make_unique<Impl>(q, eta_hat_c, opts)), q_(q), eta_(eta_hat_c) {}

CusumCovert::~CusumCovert() = default;
CusumCovert::CusumCovert(CusumCovert&&) noexcept = default;

double CusumCovert::survival(std::size_t n, double x) { return impl_->survival_guarded(n, x); }

double CusumCovert::prechange_cdf(std::size_t nu, double x) {
  if (nu < 1) throw std::invalid_argument("CusumCovert::prechange_cdf: nu must be >= 1");
  return impl_->prechange_guarded(nu, x);
}

double CusumCovert::prechange_atom(std::size_t nu) { return prechange_cdf(nu, 0.0); }

bool CusumCovert::tables_in_use() { return impl_->use_tables() && !impl_->tables_bad; }

CovertResult CusumCovert::covert_prob(std::uint64_t L, std::uint64_t nu) {
  if (L < 1) throw std::invalid_argument("CusumCovert::covert_prob: L must be >= 1");
  CovertResult r;
  r.kind = TestKind::cusum;
  r.diag.grid_nodes = impl_->grid.nodes().size();

  const std::size_t Ln = static_cast<std::size_t>(L);
  if (nu == 0) {
    r.value = survival(Ln, 0.0);
    r.diag.atom_mass = 1.0;
  } else {
    const std::size_t nun = static_cast<std::size_t>(std::min<std::uint64_t>(nu, 1u << 30));
    const std::vector<double>& xs = impl_->grid.nodes();
    std::vector<double> qv(xs.size()), gv(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
      qv[i] = survival(Ln, xs[i]);
      gv[i] = prechange_cdf(nun, xs[i]);
    }
    KahanSum acc;
    acc.add(qv[0] * gv[0]);  // atom at statistic 0
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
      acc.add(0.5 * (qv[i] + qv[i + 1]) * (gv[i + 1] - gv[i]));
    r.value = acc.value();
    r.diag.atom_mass = gv[0];
    if (impl_->use_tables() && !impl_->tables_bad) {
      r.diag.g_steps = impl_->table_g_depth(nun);
      r.diag.g_converged_early = impl_->table_g_frozen_at > 0 && nun >= impl_->table_g_frozen_at;
    } else {
      r.diag.g_steps = impl_->grid.prechange_steps(nun);
      r.diag.g_converged_early = impl_->grid.prechange_frozen();
    }
  }

  const bool tables = impl_->use_tables() && !impl_->tables_bad;
  r.diag.used_coeff_tables = tables;
  r.diag.selftest_pass = impl_->selftest_state == 1;
  r.diag.table_depth = tables && impl_->vtab ? impl_->vtab->depth() : 0;
  r.diag.clamp_excess = impl_->clamp_excess;
  const double excess = std::max(0.0, std::max(-r.value, r.value - 1.0));
  r.diag.clamp_excess = std::max(r.diag.clamp_excess, excess);
  r.value = std::min(1.0, std::max(0.0, r.value));
  return r;
}

double CusumCovert::prechange_expectation(std::size_t nu,
                                          const std::function<double(double)>& f) {
  if (nu < 1) throw std::invalid_argument("prechange_expectation: nu must be >= 1");
  const std::vector<double>& xs = impl_->grid.nodes();
  std::vector<double> fv(xs.size()), gv(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    fv[i] = f(xs[i]);
    gv[i] = prechange_cdf(nu, xs[i]);
  }
  KahanSum acc;
  acc.add(fv[0] * gv[0]);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    acc.add(0.5 * (fv[i] + fv[i + 1]) * (gv[i + 1] - gv[i]));
  return acc.value();
}

CovertResult covert_prob_cusum(double q, std::uint64_t L, std::uint64_t nu, double eta_hat_c,
                               const CusumCovertOptions& opts) {
  CusumCovert engine(q, eta_hat_c, opts);
  return engine.covert_prob(L, nu);
}

}  // namespace covertseq
