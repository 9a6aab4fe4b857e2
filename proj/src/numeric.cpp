#include "covertseq/numeric.hpp"

#include <cassert>
#include <stdexcept>

namespace covertseq {

std::vector<double> build_kink_grid(double lo, double hi, const std::vector<double>& kinks,
                                    std::size_t base_nodes) {
  if (!(hi > lo)) throw std::invalid_argument("build_kink_grid: empty interval");
  if (base_nodes < 2) base_nodes = 2;
  std::vector<double> x;
  x.reserve(base_nodes + kinks.size() + 2);
  const double h = (hi - lo) / static_cast<double>(base_nodes - 1);
  for (std::size_t i = 0; i < base_nodes; ++i) x.push_back(lo + h * static_cast<double>(i));
  x.back() = hi;
  for (double k : kinks)
    if (k > lo && k < hi) x.push_back(k);
  std::sort(x.begin(), x.end());
  const double tol = h * 1e-9;
  std::vector<double> out;
  out.reserve(x.size());
  for (double v : x) {
    if (out.empty() || v - out.back() > tol) out.push_back(v);
  }
  if (out.back() != hi) out.back() = hi;
  return out;
}

GridPoint locate(const std::vector<double>& x, double p) {
  GridPoint gp;
  if (p <= x.front()) {
    gp.cell = 0;
    gp.t = 0.0;
    return gp;
  }
  if (p >= x.back()) {
    gp.cell = x.size() - 2;
    gp.t = 1.0;
    return gp;
  }
  const auto it = std::upper_bound(x.begin(), x.end(), p);
  gp.cell = static_cast<std::size_t>(it - x.begin()) - 1;
  const double dx = x[gp.cell + 1] - x[gp.cell];
  gp.t = dx > 0.0 ? (p - x[gp.cell]) / dx : 0.0;
  return gp;
}

CumTrapezoid::CumTrapezoid(const std::vector<double>* x, const std::vector<double>* f)
    : x_(x), f_(f) {
  assert(x_->size() == f_->size());
  prefix_.resize(x_->size());
  prefix_[0] = 0.0;
  KahanSum acc;
  for (std::size_t i = 0; i + 1 < x_->size(); ++i) {
    acc.add(0.5 * ((*f_)[i] + (*f_)[i + 1]) * ((*x_)[i + 1] - (*x_)[i]));
    prefix_[i + 1] = acc.value();
  }
}

double CumTrapezoid::at(const GridPoint& p) const {
  const std::size_t j = p.cell;
  const double dx = (*x_)[j + 1] - (*x_)[j];
  const double fj = (*f_)[j];
  const double fp = fj + ((*f_)[j + 1] - fj) * p.t;
  return prefix_[j] + 0.5 * (fj + fp) * dx * p.t;
}

double LogCumTrapezoid::cell_log_integral(double la, double lb, double dx) {
  if (dx <= 0.0) return kNegInf;
  if (la == kNegInf && lb == kNegInf) return kNegInf;
  return log_add(la, lb) + std::log(0.5 * dx);
}

LogCumTrapezoid::LogCumTrapezoid(const std::vector<double>* x, const std::vector<double>* log_f)
    : x_(x), log_f_(log_f) {
  assert(x_->size() == log_f_->size());
  prefix_.resize(x_->size());
  prefix_[0] = kNegInf;
  for (std::size_t i = 0; i + 1 < x_->size(); ++i) {
    const double c = cell_log_integral((*log_f_)[i], (*log_f_)[i + 1], (*x_)[i + 1] - (*x_)[i]);
    prefix_[i + 1] = log_add(prefix_[i], c);
  }
}

double LogCumTrapezoid::at(const GridPoint& p) const {
  const std::size_t j = p.cell;
  const double dx = ((*x_)[j + 1] - (*x_)[j]) * p.t;
  const double la = (*log_f_)[j];
  const double lb = (*log_f_)[j + 1];
  double lp;
  if (la == kNegInf || lb == kNegInf)
    lp = p.t < 1.0 ? la : lb;
  else
    lp = la + (lb - la) * p.t;
  return log_add(prefix_[j], cell_log_integral(la, lp, dx));
}

}  // namespace covertseq
