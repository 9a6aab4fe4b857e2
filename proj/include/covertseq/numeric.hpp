#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace covertseq {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Neumaier compensated summation.
class KahanSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// log(e^a + e^b) without overflow; kNegInf is the additive identity.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
// Legendre polynomial.
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussLegendre gauss_legendre(int n) {
  GaussLegendre gl;
  gl.nodes.resize(n);
  gl.weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    gl.nodes[i] = -z;
    gl.nodes[n - 1 - i] = z;
    gl.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    gl.weights[n - 1 - i] = gl.weights[i];
  }
  return gl;
}

// Strictly increasing node set on [lo, hi]: a uniform base grid with the
// given kink positions inserted, deduplicated at a relative tolerance.
std::vector<double> build_kink_grid(double lo, double hi, const std::vector<double>& kinks,
                                    std::size_t base_nodes);

// Location of a point inside a fixed grid: cell index plus barycentric
// coordinate. Precompute once; reuse against changing values.
struct GridPoint {
  std::size_t cell = 0;  // p lies in [x[cell], x[cell+1]]
  double t = 0.0;        // (p - x[cell]) / (x[cell+1] - x[cell])
};

GridPoint locate(const std::vector<double>& x, double p);

// Prefix trapezoid integrals of piecewise-linear values on a fixed grid,
// evaluable at arbitrary interior points (consistent partial cells).
class CumTrapezoid {
 public:
  CumTrapezoid(const std::vector<double>* x, const std::vector<double>* f);
  double total() const { return prefix_.back(); }
  double at_node(std::size_t i) const { return prefix_[i]; }
  double at(const GridPoint& p) const;

 private:
  const std::vector<double>* x_;
  const std::vector<double>* f_;
  std::vector<double> prefix_;
};

// Same idea in log space: prefix log-integrals of exp(log_f) with
// log-linear interpolation inside cells. Tolerates -inf values.
class LogCumTrapezoid {
 public:
  LogCumTrapezoid(const std::vector<double>* x, const std::vector<double>* log_f);
  double log_total() const { return prefix_.back(); }
  double at_node(std::size_t i) const { return prefix_[i]; }
  double at(const GridPoint& p) const;

 private:
  static double cell_log_integral(double la, double lb, double dx);
  const std::vector<double>* x_;
  const std::vector<double>* log_f_;
  std::vector<double> prefix_;
};

}  // namespace covertseq
