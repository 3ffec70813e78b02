#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lfkit/smo.hpp"

namespace lfkit {

struct SolverOptions {
  double tol = 1e-3;          // relative duality gap: P - D <= tol * (1 + |P|)
  std::size_t max_iter = 0;   // 0 picks max(100000, 1000 n)
};

struct SolveStats {
  bool converged = false;
  std::size_t iterations = 0;
  double primal = 0.0;
  double dual = 0.0;
  double kkt_eps = 0.0;  // final working-set tolerance
};

struct LinearSvmModel {
  Eigen::VectorXd w;
  double bias = 0.0;
  double cost = 1.0;
  SolveStats stats;

  double decision(const Eigen::VectorXd& x) const { return w.dot(x) + bias; }
  Eigen::VectorXd decision(const Eigen::MatrixXd& x) const {
    return (x * w).array() + bias;
  }
};

struct LinearSvrModel {
  Eigen::VectorXd w;
  double bias = 0.0;
  double cost = 1.0;
  double epsilon = 1.0;
  SolveStats stats;

  double predict(const Eigen::VectorXd& x) const { return w.dot(x) + bias; }
  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const { return (x * w).array() + bias; }
};

// Labels are +1 / -1. Throws single_class_input. The kernel overload lets a
// caller reuse a Gram matrix across cost values.
LinearSvmModel svm_train(const Eigen::MatrixXd& x, const std::vector<int>& y, double cost,
                         const SolverOptions& options = {});
LinearSvmModel svm_train(const LinearKernel& kernel, const std::vector<int>& y, double cost,
                         const SolverOptions& options = {});

LinearSvrModel svr_train(const Eigen::MatrixXd& x, const std::vector<double>& y, double cost,
                         double epsilon, const SolverOptions& options = {});
LinearSvrModel svr_train(const LinearKernel& kernel, const std::vector<double>& y, double cost,
                         double epsilon, const SolverOptions& options = {});

// 1/2 |w|^2 + C * sum of losses.
double svm_primal(const LinearSvmModel& m, const Eigen::MatrixXd& x, const std::vector<int>& y);
double svr_primal(const LinearSvrModel& m, const Eigen::MatrixXd& x, const std::vector<double>& y);

// Per-dimension z-score. Dimensions with zero spread are centred and left unscaled.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

}  // namespace lfkit
