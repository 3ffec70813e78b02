#include "lfkit/smo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lfkit {

namespace {
constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

LinearKernel::LinearKernel(const Eigen::MatrixXd& x) : x_(x) {
  diag_ = x_.rowwise().squaredNorm();
  if (x_.rows() <= kMaxCachedRows) {
    gram_ = x_ * x_.transpose();
    cached_ = true;
  } else {
    scratch_[0].resize(x_.rows());
    scratch_[1].resize(x_.rows());
  }
}

const double* LinearKernel::row(Eigen::Index i, int slot) const {
  if (cached_) return gram_.col(i).data();  // symmetric: column i is row i
  scratch_[slot].noalias() = x_ * x_.row(i).transpose();
  return scratch_[slot].data();
}

SmoSolver::SmoSolver(const LinearKernel& kernel, std::vector<std::int8_t> y, std::vector<double> p,
                     std::vector<double> c, std::vector<Eigen::Index> kernel_index)
    : kernel_(kernel),
      y_(std::move(y)),
      p_(std::move(p)),
      c_(std::move(c)),
      kidx_(std::move(kernel_index)),
      alpha_(y_.size(), 0.0),
      grad_(p_) {}

bool SmoSolver::upper_ok(std::size_t t) const {
  return y_[t] > 0 ? alpha_[t] < c_[t] : alpha_[t] > 0.0;
}

bool SmoSolver::lower_ok(std::size_t t) const {
  return y_[t] > 0 ? alpha_[t] > 0.0 : alpha_[t] < c_[t];
}

double SmoSolver::violation() const {
  double gmax = -kInf;
  double gmax2 = -kInf;
  for (std::size_t t = 0; t < y_.size(); ++t) {
    if (upper_ok(t)) gmax = std::max(gmax, -y_[t] * grad_[t]);
    if (lower_ok(t)) gmax2 = std::max(gmax2, y_[t] * grad_[t]);
  }
  return gmax + gmax2;
}

bool SmoSolver::run(double eps, std::size_t max_iter) {
  const std::size_t l = y_.size();
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // First index: maximal violation among the "up" set.
    double gmax = -kInf;
    std::ptrdiff_t i = -1;
    for (std::size_t t = 0; t < l; ++t) {
      if (upper_ok(t) && -y_[t] * grad_[t] >= gmax) {
        gmax = -y_[t] * grad_[t];
        i = static_cast<std::ptrdiff_t>(t);
      }
    }
    if (i < 0) return true;
    const auto ui = static_cast<std::size_t>(i);
    const double* ki = kernel_.row(kidx_[ui], 0);

    // Second index: largest guaranteed objective decrease.
    double gmax2 = -kInf;
    double best = kInf;
    std::ptrdiff_t j = -1;
    for (std::size_t t = 0; t < l; ++t) {
      if (!lower_ok(t)) continue;
      const double yg = y_[t] * grad_[t];
      gmax2 = std::max(gmax2, yg);
      const double diff = gmax + yg;
      if (diff > 0.0) {
        double quad = kernel_.diag(kidx_[ui]) + kernel_.diag(kidx_[t]) - 2.0 * ki[kidx_[t]];
        if (quad <= 0.0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj <= best) {
          best = obj;
          j = static_cast<std::ptrdiff_t>(t);
        }
      }
    }
    if (gmax + gmax2 < eps || j < 0) return true;
    const auto uj = static_cast<std::size_t>(j);
    const double* kj = kernel_.row(kidx_[uj], 1);

    ++iterations_;
    const double ci = c_[ui];
    const double cj = c_[uj];
    const double old_i = alpha_[ui];
    const double old_j = alpha_[uj];
    double& ai = alpha_[ui];
    double& aj = alpha_[uj];
    const double qij = q(ui, uj, ki);
    const double qdi = kernel_.diag(kidx_[ui]);
    const double qdj = kernel_.diag(kidx_[uj]);

    if (y_[ui] != y_[uj]) {
      double quad = qdi + qdj + 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad_[ui] - grad_[uj]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) {
          aj = 0.0;
          ai = diff;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = -diff;
      }
      if (diff > ci - cj) {
        if (ai > ci) {
          ai = ci;
          aj = ci - diff;
        }
      } else if (aj > cj) {
        aj = cj;
        ai = cj + diff;
      }
    } else {
      double quad = qdi + qdj - 2.0 * qij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad_[ui] - grad_[uj]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > ci) {
        if (ai > ci) {
          ai = ci;
          aj = sum - ci;
        }
      } else if (aj < 0.0) {
        aj = 0.0;
        ai = sum;
      }
      if (sum > cj) {
        if (aj > cj) {
          aj = cj;
          ai = sum - cj;
        }
      } else if (ai < 0.0) {
        ai = 0.0;
        aj = sum;
      }
    }

    const double di = ai - old_i;
    const double dj = aj - old_j;
    for (std::size_t t = 0; t < l; ++t) {
      grad_[t] += q(ui, t, ki) * di + q(uj, t, kj) * dj;
    }
  }
  return false;
}

double SmoSolver::rho() const {
  double ub = kInf;
  double lb = -kInf;
  double sum_free = 0.0;
  std::size_t free = 0;
  for (std::size_t t = 0; t < y_.size(); ++t) {
    const double yg = y_[t] * grad_[t];
    if (alpha_[t] >= c_[t]) {
      if (y_[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha_[t] <= 0.0) {
      if (y_[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }
  if (free > 0) return sum_free / static_cast<double>(free);
  return (ub + lb) / 2.0;
}

double SmoSolver::objective() const {
  double obj = 0.0;
  for (std::size_t t = 0; t < y_.size(); ++t) obj += alpha_[t] * (grad_[t] + p_[t]);
  return 0.5 * obj;
}

std::pair<double, double> piecewise_linear_argmin(std::vector<std::pair<double, double>> breakpoints,
                                                  double initial_slope) {
  std::sort(breakpoints.begin(), breakpoints.end());
  if (breakpoints.empty()) return {0.0, 0.0};
  double slope = initial_slope;
  if (slope >= 0.0) return {-kInf, breakpoints.front().first};
  double scale = std::abs(initial_slope);
  for (const auto& bw : breakpoints) scale += std::abs(bw.second);
  const double tol = 1e-12 * scale;
  double lo = breakpoints.back().first;
  double hi = kInf;
  bool found_lo = false;
  for (const auto& [b, w] : breakpoints) {
    slope += w;
    if (!found_lo && slope >= -tol) {
      lo = b;
      found_lo = true;
    }
    if (found_lo && slope > tol) {
      hi = b;
      break;
    }
  }
  return {lo, hi};
}

}  // namespace lfkit
