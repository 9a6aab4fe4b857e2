#include "covertseq/calibration.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "covertseq/errors.hpp"
#include "covertseq/numeric.hpp"

namespace covertseq {

namespace {

constexpr std::size_t kMaxPieces = 4096;  // cap on M = ceil(eta_hat_c / omega)

std::size_t piece_count(double eta_hat_c, double omega) {
  const double m = std::ceil(eta_hat_c / omega);
  if (!(m >= 1.0) || m > static_cast<double>(kMaxPieces))
    throw CalibrationError("cusum arl: piece count M=" + std::to_string(m) +
                           " out of range for eta_hat_c=" + std::to_string(eta_hat_c));
  return static_cast<std::size_t>(m);
}

// phi(x) - phi(0) on piece n (n*omega <= x < (n+1)*omega), from the
// run-length coefficients. Zero at x = 0 by construction (c_0 = -1).
// Terms reach e^x scale and cancel; extended precision buys the headroom
// that keeps the result usable through eta_hat_c of about 26.
double phi_offset(double x, std::size_t n, const std::vector<double>& c, double omega) {
  long double acc = 1.0L + static_cast<long double>(n);
  long double inv_fact = 1.0L;
  const auto xl = static_cast<long double>(x);
  const auto wl = static_cast<long double>(omega);
  for (std::size_t m = 0; m <= n; ++m) {
    if (m > 0) inv_fact /= static_cast<long double>(m);
    const long double base = xl - (static_cast<long double>(m) - 1.0L) * wl;  // > 0 on piece n
    const long double sign = (m % 2 == 0) ? 1.0L : -1.0L;
    acc += sign * static_cast<long double>(c[n - m]) *
           powl(base, static_cast<long double>(m)) * inv_fact *
           expl(xl - static_cast<long double>(m) * wl);
  }
  return static_cast<double>(acc);
}

std::size_t piece_index(double x, double eta_hat_c, double omega, std::size_t m_pieces) {
  if (x < 0.0 || x >= eta_hat_c)
    throw std::invalid_argument("cusum_phi: x outside [0, eta_hat_c)");
  auto n = static_cast<std::size_t>(std::floor(x / omega));
  if (n >= m_pieces) n = m_pieces - 1;
  return n;
}

}  // namespace

double calibrate_shewhart(double gamma) {
  if (!(gamma > 1.0)) throw CalibrationError("calibrate_shewhart: gamma must be > 1");
  return std::log(gamma);
}

double shewhart_eta_from_prime(double eta_s_prime, double q) {
  return std::exp(q * eta_s_prime / (1.0 + q)) / (1.0 + q);
}

std::vector<double> cusum_run_length_coeffs(std::size_t count, double omega) {
  std::vector<double> c;
  c.reserve(count);
  c.push_back(-1.0);
  const auto wl = static_cast<long double>(omega);
  for (std::size_t n = 1; n < count; ++n) {
    long double inner = -1.0L;
    // (-1)^n * omega^n / n!
    long double wpow = 1.0L;
    for (std::size_t j = 1; j <= n; ++j) wpow *= -wl / static_cast<long double>(j);
    inner += wpow;
    for (std::size_t m = 1; m + 1 <= n; ++m) {
      const long double base = (static_cast<long double>(n - m) + 1.0L) * wl;
      long double mpow = 1.0L;  // ((n-m+1)*omega)^m / m!
      for (std::size_t j = 1; j <= m; ++j) mpow *= base / static_cast<long double>(j);
      const long double sign = (m % 2 == 0) ? 1.0L : -1.0L;
      inner += sign * static_cast<long double>(c[n - 1 - m] - c[n - m]) * mpow *
               expl(static_cast<long double>(n - m) * wl);
    }
    c.push_back(static_cast<double>(static_cast<long double>(c[n - 1]) +
                                    expl(-static_cast<long double>(n) * wl) * inner));
  }
  return c;
}

double cusum_phi(double x, const CusumArlSolution& sol) {
  const std::size_t m_pieces = piece_count(sol.eta_hat_c, sol.omega);
  const std::size_t n = piece_index(x, sol.eta_hat_c, sol.omega, m_pieces);
  return sol.phi0 + phi_offset(x, n, sol.c_coeffs, sol.omega);
}

CusumArlSolution solve_phi0(double eta_hat_c, double omega, int resolution) {
  if (!(eta_hat_c > 0.0) || !(omega > 0.0))
    throw CalibrationError("solve_phi0: eta_hat_c and omega must be > 0");
  if (resolution < 1) resolution = 1;
  const std::size_t m_pieces = piece_count(eta_hat_c, omega);

  CusumArlSolution sol;
  sol.eta_hat_c = eta_hat_c;
  sol.omega = omega;
  sol.c_coeffs = cusum_run_length_coeffs(m_pieces, omega);

  // Renewal equation anchored at x0 = eta_hat_c - min(omega, eta_hat_c)/2:
  //   phi0 * e^{-(omega - x0 + eta_hat_c)}
  //     = 1 - g(x0) + integral_a^eta of g(y) e^{-(omega - x0 + y)} dy,
  // a = max(x0 - omega, 0). The probability mass at statistic 0 multiplies
  // g(0) = 0, so it drops out of the g-integral.
  const double x0 = eta_hat_c - 0.5 * std::min(omega, eta_hat_c);
  const double a = std::max(x0 - omega, 0.0);

  static const GaussLegendre gl = gauss_legendre(16);
  KahanSum integral;
  const std::size_t n_lo = static_cast<std::size_t>(std::floor(a / omega));
  for (std::size_t n = n_lo; n < m_pieces; ++n) {
    const double lo = std::max(a, static_cast<double>(n) * omega);
    const double hi = std::min(eta_hat_c, static_cast<double>(n + 1) * omega);
    if (hi <= lo) continue;
    const double h = (hi - lo) / resolution;
    for (int s = 0; s < resolution; ++s) {
      const double c0 = lo + h * s;
      for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double y = c0 + 0.5 * h * (gl.nodes[k] + 1.0);
        const double w = 0.5 * h * gl.weights[k];
        integral.add(w * phi_offset(y, n, sol.c_coeffs, omega) * std::exp(-(omega - x0 + y)));
      }
    }
  }

  const double g_x0 =
      phi_offset(x0, piece_index(x0, eta_hat_c, omega, m_pieces), sol.c_coeffs, omega);
  const double alarm_prob = std::exp(-(omega - x0 + eta_hat_c));
  sol.phi0 = (1.0 - g_x0 + integral.value()) / alarm_prob;
  if (!std::isfinite(sol.phi0) || sol.phi0 < 1.0)
    throw CalibrationError("solve_phi0: non-finite or invalid phi(0) at eta_hat_c=" +
                           std::to_string(eta_hat_c));
  return sol;
}

namespace {

// Expected run length from statistic 0 via per-step survival probabilities of
// the discretized pre-change recursion, with a geometric tail once the
// survival ratio settles. All-positive arithmetic; covers the large
// eta_hat_c regime where the piecewise form cancels catastrophically.
double phi0_grid_products_once(double eta_hat_c, double omega, std::size_t base_nodes) {
  const std::size_t m_pieces = piece_count(eta_hat_c, omega);
  std::vector<double> kinks;
  for (std::size_t k = 1; k < m_pieces; ++k) kinks.push_back(static_cast<double>(k) * omega);
  const std::vector<double> x = build_kink_grid(0.0, eta_hat_c, kinks, base_nodes);
  const std::size_t n = x.size();
  std::vector<GridPoint> up(n);
  for (std::size_t i = 0; i < n; ++i) up[i] = locate(x, std::min(x[i] + omega, eta_hat_c));

  std::vector<double> g(n), grown(n), next(n);
  const double d1 = 1.0 - std::exp(-(omega + eta_hat_c));
  for (std::size_t i = 0; i < n; ++i) g[i] = (1.0 - std::exp(-(omega + x[i]))) / d1;

  long double prod = d1;
  long double arl = 1.0L + prod;
  double d_prev = d1;
  constexpr std::size_t kMaxSteps = 200000;
  for (std::size_t step = 2; step <= kMaxSteps; ++step) {
    for (std::size_t i = 0; i < n; ++i) grown[i] = g[i] * std::exp(x[i]);
    const CumTrapezoid cum(&x, &grown);
    for (std::size_t i = 0; i < n; ++i) {
      if (x[i] >= eta_hat_c - omega)
        next[i] = (1.0 - std::exp(-(x[i] + omega - eta_hat_c))) +
                  std::exp(-(x[i] + omega)) * cum.total();
      else
        next[i] = std::exp(-(x[i] + omega)) * cum.at(up[i]);
    }
    const double d = next.back();
    for (std::size_t i = 0; i < n; ++i) next[i] = std::min(1.0, next[i] / d);
    g.swap(next);
    prod *= d;
    arl += prod;
    if (step > 30 && std::abs(d - d_prev) < 1e-11 * d) {
      arl += prod * d / (1.0 - d);
      return static_cast<double>(arl);
    }
    d_prev = d;
  }
  throw CalibrationError("cusum arl grid products: survival ratio did not settle");
}

double phi0_grid_products(double eta_hat_c, double omega) {
  // Richardson over a doubled grid removes the leading h^2 bias.
  const double coarse = phi0_grid_products_once(eta_hat_c, omega, 3000);
  const double fine = phi0_grid_products_once(eta_hat_c, omega, 6000);
  return (4.0 * fine - coarse) / 3.0;
}

// The piecewise closed form is preferred below this threshold; beyond it the
// e^x-scale cancellation in phi_offset outruns extended precision.
constexpr double kAnalyticEtaCap = 26.0;

}  // namespace

CusumArlSolution calibrate_cusum(double gamma, double q) {
  if (!(gamma > 1.0)) throw CalibrationError("calibrate_cusum: gamma must be > 1");
  if (!(q > 0.0)) throw CalibrationError("calibrate_cusum: q must be > 0");
  const double omega = (1.0 + q) / q * std::log1p(q);

  const auto phi0_at = [&](double eta) {
    if (eta <= kAnalyticEtaCap) return solve_phi0(eta, omega).phi0;
    return phi0_grid_products(eta, omega);
  };

  double lo = 0.5 * omega;
  double hi = 2.0 * omega;
  double phi_hi = phi0_at(hi);
  int doublings = 0;
  while (phi_hi < gamma) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 60)
      throw CalibrationError("calibrate_cusum: bracket growth failed for gamma=" +
                             std::to_string(gamma));
    phi_hi = phi0_at(hi);
  }
  if (phi0_at(lo) > gamma) lo = 1e-8 * omega;

  constexpr double kRelTol = 1e-6;
  double best_eta = hi, best_err = std::abs(phi_hi - gamma);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double phi_mid = phi0_at(mid);
    const double err = std::abs(phi_mid - gamma);
    if (err < best_err) {
      best_err = err;
      best_eta = mid;
    }
    if (err / gamma <= kRelTol) break;
    (phi_mid < gamma ? lo : hi) = mid;
    if (hi - lo < 1e-15 * std::max(1.0, hi)) break;
  }
  if (best_err / gamma > kRelTol)
    throw CalibrationError("calibrate_cusum: bisection did not reach tolerance for gamma=" +
                           std::to_string(gamma) + ", q=" + std::to_string(q));

  CusumArlSolution sol;
  if (best_eta <= kAnalyticEtaCap) {
    sol = solve_phi0(best_eta, omega);
  } else {
    sol.eta_hat_c = best_eta;
    sol.omega = omega;
    sol.c_coeffs = cusum_run_length_coeffs(piece_count(best_eta, omega), omega);
    sol.phi0 = phi0_grid_products(best_eta, omega);
  }
  return sol;
}

double cusum_phi0_grid_check(double eta_hat_c, double omega, std::size_t base_nodes) {
  const std::size_t m_pieces = piece_count(eta_hat_c, omega);
  std::vector<double> kinks;
  for (std::size_t k = 1; k < m_pieces; ++k) kinks.push_back(static_cast<double>(k) * omega);
  const std::vector<double> x = build_kink_grid(0.0, eta_hat_c, kinks, base_nodes);
  const std::size_t n = x.size();

  // Precompute the lower integration limit max(x_i - omega, 0) per node and
  // the probability mass at statistic 0 seen from x_i.
  std::vector<GridPoint> shift(n);
  std::vector<double> atom(n), scale(n);
  for (std::size_t i = 0; i < n; ++i) {
    shift[i] = locate(x, std::max(x[i] - omega, 0.0));
    atom[i] = x[i] < omega ? 1.0 - std::exp(x[i] - omega) : 0.0;
    scale[i] = std::exp(x[i] - omega);
  }

  std::vector<double> v(n, 0.0), damped(n), next(n);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  double prev_extrap = kNegInf;
  constexpr std::size_t kMaxIters = 200000;
  for (std::size_t it = 0; it < kMaxIters; ++it) {
    for (std::size_t i = 0; i < n; ++i) damped[i] = v[i] * std::exp(-x[i]);
    const CumTrapezoid cum(&x, &damped);
    for (std::size_t i = 0; i < n; ++i)
      next[i] = 1.0 + v[0] * atom[i] + scale[i] * (cum.total() - cum.at(shift[i]));
    v.swap(next);
    s0 = s1;
    s1 = s2;
    s2 = v[0];
    if (it >= 16) {
      const double d1 = s1 - s0;
      const double d2 = s2 - s1;
      const double denom = d2 - d1;
      if (std::abs(denom) > 1e-14 * std::abs(s2)) {
        const double extrap = s2 - d2 * d2 / denom;
        if (std::isfinite(extrap) && std::abs(extrap - prev_extrap) <= 1e-9 * std::abs(extrap))
          return extrap;
        prev_extrap = extrap;
      } else if (std::abs(d2) <= 1e-12 * std::abs(s2)) {
        return s2;
      }
    }
  }
  throw CalibrationError("cusum_phi0_grid_check: fixed point did not converge");
}

SrArlSolution calibrate_sr(double gamma, double q) {
  if (!(gamma > 1.0)) throw CalibrationError("calibrate_sr: gamma must be > 1");
  if (!(q > 0.0)) throw CalibrationError("calibrate_sr: q must be > 0");
  const double eta_r = gamma / (1.0 + q);
  if (eta_r < 1.0 / q)
    throw SrThresholdError("calibrate_sr: gamma/(1+q) falls below 1/q at q=" +
                           std::to_string(q) + " (needs q >= 1/(gamma-1))");
  SrArlSolution sol;
  sol.eta_r = eta_r;
  sol.arl_at_zero = sr_phi(0.0, q, eta_r);
  return sol;
}

double sr_phi(double x, double q, double eta_r) {
  if (x < 0.0 || x >= eta_r) throw std::invalid_argument("sr_phi: x outside [0, eta_r)");
  return 1.0 + (1.0 + q) * (eta_r - (1.0 + x) / (1.0 + q));
}

}  // namespace covertseq
