#pragma once

#include <cstddef>
#include <vector>

namespace covertseq {

// ---------------------------------------------------------------------------
// Shewhart
// ---------------------------------------------------------------------------

// Power threshold meeting the ARL2FA target: eta_s_prime = ln(gamma). The
// pre-change tail P{|y|^2 >= eta_s_prime} is then exactly 1/gamma.
double calibrate_shewhart(double gamma);

// Likelihood-ratio threshold equivalent to a given power threshold.
double shewhart_eta_from_prime(double eta_s_prime, double q);

// ---------------------------------------------------------------------------
// CUSUM
// ---------------------------------------------------------------------------

// Piecewise-exponential representation of the expected run length phi(x)
// started from statistic value x, under pure noise.
struct CusumArlSolution {
  double phi0 = 0.0;             // phi(0) = ARL2FA
  std::vector<double> c_coeffs;  // c_0..c_{M-1}, c_0 = -1
  double eta_hat_c = 0.0;
  double omega = 0.0;
};

// Run-length coefficients c_0..c_{count-1} for a given drift offset.
std::vector<double> cusum_run_length_coeffs(std::size_t count, double omega);

// phi(x) for 0 <= x < eta_hat_c, evaluated from the piecewise form.
double cusum_phi(double x, const CusumArlSolution& sol);

// Solves the run-length renewal equation for phi(0). The equation is linear
// in phi(0) once phi(x) = phi(0) + g(x) with g known; it is anchored at a
// point near the threshold where the one-step alarm probability is O(1),
// which keeps the solve well conditioned even for large eta_hat_c.
// Quadrature is Gauss-Legendre per omega-aligned piece ("resolution"
// subintervals per piece; doubling it is the standard convergence check).
CusumArlSolution solve_phi0(double eta_hat_c, double omega, int resolution = 4);

// Bisection on eta_hat_c until |phi(0) - gamma|/gamma <= 1e-6.
CusumArlSolution calibrate_cusum(double gamma, double q);

// Independent cross path: fixed-point solution of the discretized renewal
// equation on a dense grid, Aitken-accelerated. Used to validate the
// piecewise coefficients, not for production calibration.
double cusum_phi0_grid_check(double eta_hat_c, double omega, std::size_t base_nodes = 4000);

// ---------------------------------------------------------------------------
// Shiryaev-Roberts
// ---------------------------------------------------------------------------

struct SrArlSolution {
  double eta_r = 0.0;
  double arl_at_zero = 0.0;  // exactly (1+q) * eta_r
};

// eta_r = gamma / (1+q); rejects parameters where that falls below 1/q.
SrArlSolution calibrate_sr(double gamma, double q);

// Expected run length from statistic value x (affine in x).
double sr_phi(double x, double q, double eta_r);

}  // namespace covertseq
