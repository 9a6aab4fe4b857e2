#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "covertseq/covert_result.hpp"
#include "covertseq/numeric.hpp"
#include "covertseq/scenario.hpp"

namespace covertseq {

// One-step conditional CDF of the scaled CUSUM statistic given current value
// u. Pre-change observations are Exponential(1), post-change
// Exponential(1+q); the statistic has an atom at 0 wherever u < omega.
double cusum_cond_cdf(double x, double u, double q, Phase phase);

// ---------------------------------------------------------------------------
// Coefficient tables: closed-form piecewise-polynomial representations of
//   survival:   Q_n(x) = P{no alarm during n post-change steps | statistic x}
//   pre-change: G_n(x) = P{statistic <= x at time n | no alarm through n}
// Table n+1 is derived from table n only.
// ---------------------------------------------------------------------------

class CusumSurvivalCoeffs {
 public:
  CusumSurvivalCoeffs(double q, double eta_hat_c);

  void extend(std::size_t depth);
  std::size_t depth() const { return tables_.size(); }
  std::size_t piece_limit() const { return m_pieces_; }

  // Q_n(x) for 1 <= n <= depth, 0 <= x <= eta_hat_c (upper end as a limit).
  // Unclamped; callers decide how to treat tiny excursions outside [0,1].
  double eval(std::size_t n, double x) const;

  // entry (n, i, j) with the 1-based indexing of the recursion; for tests.
  double entry(std::size_t n, std::size_t i, std::size_t j) const;

 private:
  using Row = std::vector<double>;
  using Table = std::vector<Row>;
  double q_, eta_, omega_, alpha_, beta_under_;
  std::size_t m_pieces_;
  std::vector<Table> tables_;

  double beta(std::size_t i) const;
  double theta_abl(long long a, long long b, std::size_t l) const;
  double psi(const Table& t, std::size_t n, std::size_t k) const;
};

class CusumPrechangeCoeffs {
 public:
  CusumPrechangeCoeffs(double q, double eta_hat_c);

  void extend(std::size_t depth);
  std::size_t depth() const { return raw_.size(); }

  // Conditional CDF G_n(x); the value at x = 0 is the atom mass.
  double cdf(std::size_t n, double x) const;
  double atom(std::size_t n) const { return cdf(n, 0.0); }

  // Per-step normalizer: raw table value minus its top-row tail at eta.
  double normalizer(std::size_t n) const;

  double raw_entry(std::size_t n, std::size_t i, std::size_t j) const;

 private:
  using Row = std::vector<double>;
  using Table = std::vector<Row>;
  double q_, eta_, omega_, exp_neg_omega_;
  std::size_t m_pieces_;
  std::vector<Table> raw_;       // the unnormalized tables
  std::vector<Table> norm_;      // divided by the per-step normalizer
  std::vector<double> normer_;   // normalizer per step

  double delta(std::size_t i) const;
  double varsigma(long long a, long long b, std::size_t l) const;
  double upsilon(const Table& t, std::size_t n, std::size_t k) const;
  double eval_raw(std::size_t n, double x) const;
};

// ---------------------------------------------------------------------------
// Integral recursions on a dense grid: the defining relations, iterated
// directly. Serves as the independent oracle for the coefficient tables and
// as the evaluation engine wherever the tables are not trusted.
// ---------------------------------------------------------------------------

class CusumGridRecursion {
 public:
  CusumGridRecursion(double q, double eta_hat_c, std::size_t base_nodes = 20000);

  const std::vector<double>& nodes() const { return x_; }

  // survival chain
  void extend_survival(std::size_t depth);
  std::size_t survival_depth() const { return q_rows_.size(); }
  double survival(std::size_t n, double x) const;  // interpolated
  const std::vector<double>& survival_row(std::size_t n) const { return q_rows_[n - 1]; }

  // pre-change chain, with quasi-stationary early stop
  void extend_prechange(std::size_t nu, double converge_tol = 1e-8);
  double prechange_cdf(std::size_t nu, double x) const;
  const std::vector<double>& prechange_row(std::size_t nu) const;
  std::size_t prechange_steps(std::size_t nu) const;
  bool prechange_frozen() const { return g_frozen_; }

 private:
  double q_, eta_, omega_;
  std::vector<double> x_;
  std::vector<GridPoint> down_;  // location of max(x_i - omega, 0)
  std::vector<GridPoint> up_;    // location of min(x_i + omega, eta)
  std::vector<std::vector<double>> q_rows_;
  std::vector<std::vector<double>> g_rows_;
  bool g_frozen_ = false;
  std::size_t g_frozen_at_ = 0;

  const std::vector<double>& g_row_for(std::size_t nu) const;
};

// ---------------------------------------------------------------------------
// Facade: covert probability under the CUSUM test
// ---------------------------------------------------------------------------

struct CusumCovertOptions {
  std::size_t grid_nodes = 4000;    // integration grid / fallback engine resolution
  std::size_t selftest_depth = 10;  // table-vs-recursion agreement window
  double selftest_tol = 1e-6;
  double g_converge_tol = 1e-8;
  int engine = 0;  // 0 = auto (tables when self-test passes), 1 = tables, 2 = grid
};

class CusumCovert {
 public:
  CusumCovert(double q, double eta_hat_c, CusumCovertOptions opts = {});
  ~CusumCovert();
  CusumCovert(CusumCovert&&) noexcept;

  double q() const { return q_; }
  double eta_hat_c() const { return eta_; }

  double survival(std::size_t n, double x);       // clamped to [0,1]
  double prechange_cdf(std::size_t nu, double x);  // nu >= 1
  double prechange_atom(std::size_t nu);

  // Lebesgue-Stieltjes pairing of the two curves; nu = 0 starts the
  // statistic at zero, larger nu integrates against the conditional CDF.
  CovertResult covert_prob(std::uint64_t L, std::uint64_t nu);

  // E[f(statistic at nu) | no alarm through nu] against the same CDF.
  double prechange_expectation(std::size_t nu, const std::function<double(double)>& f);

  bool tables_in_use();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  double q_, eta_;
};

// Self-contained single evaluations (the facade is cheaper for sweeps).
CovertResult covert_prob_cusum(double q, std::uint64_t L, std::uint64_t nu, double eta_hat_c,
                               const CusumCovertOptions& opts = {});

}  // namespace covertseq
