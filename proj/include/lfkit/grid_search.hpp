#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lfkit/learners.hpp"

namespace lfkit {

struct GridOptions {
  std::vector<double> tier1{1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  std::vector<double> refine{0.25, 0.5, 1.0, 2.0, 4.0};  // multiplies the tier-1 winner
  bool second_tier = true;
  double validation_fraction = 1.0 / 3.0;  // share of subjects held out
  SolverOptions solver;
};

struct GridPoint {
  double cost = 0.0;
  double loss = 0.0;  // lower is better
  int tier = 1;
};

struct GridResult {
  double best_cost = 0.0;
  double best_loss = 0.0;
  double tier1_cost = 0.0;
  double tier1_loss = 0.0;
  std::vector<GridPoint> evaluated;
};

// Evaluates loss(C) over tier 1, then over the refinement of the tier-1 winner.
// Ties go to the smaller C. Each distinct C is evaluated once.
GridResult grid_search(const std::function<double(double)>& loss, const GridOptions& options = {});

// Subject-disjoint inner split: returns true for validation rows. Deterministic in seed.
std::vector<bool> inner_validation_split(const std::vector<std::string>& groups,
                                         double validation_fraction, std::uint64_t seed);

// Classification error rate on the inner validation rows.
GridResult grid_search_svm(const Eigen::MatrixXd& x, const std::vector<int>& y,
                           const std::vector<std::string>& groups, std::uint64_t seed,
                           const GridOptions& options = {});

// Validation MAE.
GridResult grid_search_svr(const Eigen::MatrixXd& x, const std::vector<double>& y,
                           const std::vector<std::string>& groups, double epsilon,
                           std::uint64_t seed, const GridOptions& options = {});

}  // namespace lfkit
