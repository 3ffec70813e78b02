#include "lfkit/learners.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "lfkit/core.hpp"

namespace lfkit {

namespace {

std::size_t iteration_cap(const SolverOptions& options, std::size_t n) {
  return options.max_iter ? options.max_iter : std::max<std::size_t>(100000, 1000 * n);
}

// Tightens the working-set tolerance until the duality gap closes. `finish`
// recovers the primal model from the current dual point and returns P.
template <typename Finish>
SolveStats solve_to_gap(SmoSolver& solver, const SolverOptions& options, std::size_t n,
                        Finish&& finish) {
  SolveStats stats;
  const std::size_t cap = iteration_cap(options, n);
  double eps = 1e-3;
  while (true) {
    const std::size_t used = solver.iterations();
    const bool reached = solver.run(eps, cap > used ? cap - used : 0);
    stats.primal = finish();
    stats.dual = -solver.objective();
    stats.iterations = solver.iterations();
    stats.kkt_eps = eps;
    if (stats.primal - stats.dual <= options.tol * (1.0 + std::abs(stats.primal))) {
      stats.converged = true;
      break;
    }
    if (!reached || eps < 1e-12) break;
    eps *= 0.1;
  }
  return stats;
}

}  // namespace

LinearSvmModel svm_train(const Eigen::MatrixXd& x, const std::vector<int>& y, double cost,
                         const SolverOptions& options) {
  const LinearKernel kernel(x);
  return svm_train(kernel, y, cost, options);
}

LinearSvmModel svm_train(const LinearKernel& kernel, const std::vector<int>& y, double cost,
                         const SolverOptions& options) {
  const Eigen::MatrixXd& x = kernel.data();
  const auto n = static_cast<std::size_t>(x.rows());
  if (y.size() != n) {
    throw Error(ErrorKind::dimension_mismatch,
                fmt::format("{} labels for {} training rows", y.size(), n));
  }
  if (!(cost > 0.0)) throw Error(ErrorKind::config_error, "cost must be positive");
  std::size_t positives = 0;
  for (int v : y) {
    if (v != 1 && v != -1) throw Error(ErrorKind::config_error, "SVM labels must be +1 or -1");
    positives += v == 1;
  }
  if (positives == 0 || positives == n) {
    throw Error(ErrorKind::single_class_input, "SVM training data contains a single class");
  }

  std::vector<std::int8_t> ys(y.begin(), y.end());
  std::vector<Eigen::Index> kidx(n);
  for (std::size_t i = 0; i < n; ++i) kidx[i] = static_cast<Eigen::Index>(i);
  SmoSolver solver(kernel, ys, std::vector<double>(n, -1.0), std::vector<double>(n, cost), kidx);

  LinearSvmModel model;
  model.cost = cost;
  auto finish = [&] {
    Eigen::VectorXd coef(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) coef(static_cast<Eigen::Index>(i)) = y[i] * solver.alpha()[i];
    model.w = x.transpose() * coef;
    const Eigen::VectorXd f = x * model.w;
    std::vector<std::pair<double, double>> breaks;
    breaks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) breaks.emplace_back(y[i] - f(static_cast<Eigen::Index>(i)), cost);
    const auto [lo, hi] = piecewise_linear_argmin(std::move(breaks), -cost * static_cast<double>(positives));
    model.bias = std::clamp(-solver.rho(), lo, hi);
    return svm_primal(model, x, y);
  };
  model.stats = solve_to_gap(solver, options, n, finish);
  return model;
}

LinearSvrModel svr_train(const Eigen::MatrixXd& x, const std::vector<double>& y, double cost,
                         double epsilon, const SolverOptions& options) {
  const LinearKernel kernel(x);
  return svr_train(kernel, y, cost, epsilon, options);
}

LinearSvrModel svr_train(const LinearKernel& kernel, const std::vector<double>& y, double cost,
                         double epsilon, const SolverOptions& options) {
  const Eigen::MatrixXd& x = kernel.data();
  const auto n = static_cast<std::size_t>(x.rows());
  if (y.size() != n) {
    throw Error(ErrorKind::dimension_mismatch,
                fmt::format("{} targets for {} training rows", y.size(), n));
  }
  if (n < 2) throw Error(ErrorKind::config_error, "SVR needs at least two training rows");
  if (!(cost > 0.0)) throw Error(ErrorKind::config_error, "cost must be positive");
  if (!(epsilon >= 0.0)) throw Error(ErrorKind::config_error, "epsilon must be non-negative");

  std::vector<std::int8_t> ys(2 * n);
  std::vector<double> p(2 * n);
  std::vector<Eigen::Index> kidx(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    ys[i] = 1;
    ys[i + n] = -1;
    p[i] = epsilon - y[i];
    p[i + n] = epsilon + y[i];
    kidx[i] = kidx[i + n] = static_cast<Eigen::Index>(i);
  }
  SmoSolver solver(kernel, ys, p, std::vector<double>(2 * n, cost), kidx);

  LinearSvrModel model;
  model.cost = cost;
  model.epsilon = epsilon;
  auto finish = [&] {
    Eigen::VectorXd coef(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      coef(static_cast<Eigen::Index>(i)) = solver.alpha()[i] - solver.alpha()[i + n];
    }
    model.w = x.transpose() * coef;
    const Eigen::VectorXd f = x * model.w;
    std::vector<std::pair<double, double>> breaks;
    breaks.reserve(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - f(static_cast<Eigen::Index>(i));
      breaks.emplace_back(r - epsilon, cost);
      breaks.emplace_back(r + epsilon, cost);
    }
    const auto [lo, hi] = piecewise_linear_argmin(std::move(breaks), -cost * static_cast<double>(n));
    model.bias = std::clamp(-solver.rho(), lo, hi);
    return svr_primal(model, x, y);
  };
  model.stats = solve_to_gap(solver, options, n, finish);
  return model;
}

double svm_primal(const LinearSvmModel& m, const Eigen::MatrixXd& x, const std::vector<int>& y) {
  const Eigen::VectorXd f = m.decision(x);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    loss += std::max(0.0, 1.0 - y[static_cast<std::size_t>(i)] * f(i));
  }
  return 0.5 * m.w.squaredNorm() + m.cost * loss;
}

double svr_primal(const LinearSvrModel& m, const Eigen::MatrixXd& x, const std::vector<double>& y) {
  const Eigen::VectorXd f = m.predict(x);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    loss += std::max(0.0, std::abs(y[static_cast<std::size_t>(i)] - f(i)) - m.epsilon);
  }
  return 0.5 * m.w.squaredNorm() + m.cost * loss;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& x) {
  Standardizer s;
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  const double denom = x.rows() > 1 ? static_cast<double>(x.rows() - 1) : 1.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double var = (x.col(c).array() - s.mean(c)).square().sum() / denom;
    const double sd = std::sqrt(var);
    s.scale(c) = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                fmt::format("standardizer fitted on {} columns, got {}", mean.size(), x.cols()));
  }
  return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

}  // namespace lfkit
