#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace lfkit {

// Linear kernel over the rows of X. The Gram matrix is cached when it fits;
// otherwise rows are recomputed on demand.
class LinearKernel {
 public:
  static constexpr Eigen::Index kMaxCachedRows = 4000;

  explicit LinearKernel(const Eigen::MatrixXd& x);

  Eigen::Index size() const { return x_.rows(); }
  const Eigen::MatrixXd& data() const { return x_; }
  double diag(Eigen::Index i) const { return diag_(i); }
  // Row i of X X^T. The pointer stays valid until the next call with a different slot.
  const double* row(Eigen::Index i, int slot) const;

 private:
  const Eigen::MatrixXd& x_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd diag_;
  mutable Eigen::VectorXd scratch_[2];
  bool cached_ = false;
};

// Solves  min 1/2 a'Qa + p'a  s.t.  y'a = 0, 0 <= a_i <= c_i, with
// Q_ij = y_i y_j K(k_i, k_j), using maximal-violating-pair selection with
// second-order working-set choice. State persists, so a call to run() with a
// tighter eps continues from the previous solution.
class SmoSolver {
 public:
  SmoSolver(const LinearKernel& kernel, std::vector<std::int8_t> y, std::vector<double> p,
            std::vector<double> c, std::vector<Eigen::Index> kernel_index);

  // Iterates until the maximal KKT violation is below eps (returns true) or
  // max_iter further iterations have run (returns false).
  bool run(double eps, std::size_t max_iter);

  const std::vector<double>& alpha() const { return alpha_; }
  double rho() const;
  double objective() const;  // 1/2 a'Qa + p'a
  std::size_t iterations() const { return iterations_; }
  double violation() const;

 private:
  bool upper_ok(std::size_t t) const;  // may increase y_t a_t
  bool lower_ok(std::size_t t) const;  // may decrease y_t a_t
  double q(std::size_t i, std::size_t t, const double* krow) const {
    return y_[i] * y_[t] * krow[kidx_[t]];
  }

  const LinearKernel& kernel_;
  std::vector<std::int8_t> y_;
  std::vector<double> p_;
  std::vector<double> c_;
  std::vector<Eigen::Index> kidx_;
  std::vector<double> alpha_;
  std::vector<double> grad_;
  std::size_t iterations_ = 0;
};

// Minimiser interval of the convex piecewise-linear function whose slope starts
// at `initial_slope` and rises by weight_k at each breakpoint b_k.
std::pair<double, double> piecewise_linear_argmin(std::vector<std::pair<double, double>> breakpoints,
                                                  double initial_slope);

}  // namespace lfkit
