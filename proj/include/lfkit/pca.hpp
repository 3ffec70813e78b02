#pragma once

#include <Eigen/Dense>
#include <vector>

namespace lfkit {

struct PcaModel {
  Eigen::VectorXd mean;        // d
  Eigen::MatrixXd components;  // d x k, orthonormal columns
  std::vector<double> explained_variance;  // k, non-increasing
  std::size_t requested = 0;
  bool rank_deficient = false;  // fewer than `requested` non-null directions exist

  std::size_t dimension() const { return static_cast<std::size_t>(mean.size()); }
  std::size_t rank() const { return static_cast<std::size_t>(components.cols()); }
};

// Rows of `data` are observations. Uses the n x n Gram matrix when n < d. When k
// exceeds the numerical rank the model keeps only the non-null directions and
// sets rank_deficient. Each component's largest-magnitude entry is positive.
PcaModel pca_fit(const Eigen::MatrixXd& data, std::size_t k);

// (x - mean) * components. Throws dimension_mismatch.
Eigen::VectorXd pca_project(const PcaModel& model, const Eigen::VectorXd& x);
Eigen::MatrixXd pca_project_rows(const PcaModel& model, const Eigen::MatrixXd& data);
Eigen::VectorXd pca_reconstruct(const PcaModel& model, const Eigen::VectorXd& z);

}  // namespace lfkit
