#include "lfkit/pca.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "lfkit/core.hpp"

namespace lfkit {

namespace {

// Cholesky-based re-orthonormalisation of V's columns (same span, same order).
void orthonormalize(Eigen::MatrixXd& v) {
  const Eigen::MatrixXd gram = v.transpose() * v;
  const double err = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  if (err <= 1e-10) return;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(v);
    v = qr.householderQ() * Eigen::MatrixXd::Identity(v.rows(), v.cols());
    return;
  }
  // V L^{-T}: columns stay in their original order.
  v = llt.matrixU().solve<Eigen::OnTheRight>(v);
}

void fix_signs(Eigen::MatrixXd& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index arg = 0;
    v.col(j).cwiseAbs().maxCoeff(&arg);
    if (v(arg, j) < 0) v.col(j) = -v.col(j);
  }
}

}  // namespace

PcaModel pca_fit(const Eigen::MatrixXd& data, std::size_t k) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < 2) throw Error(ErrorKind::config_error, "PCA needs at least two observations");
  if (k == 0) throw Error(ErrorKind::config_error, "PCA target dimension must be positive");

  PcaModel model;
  model.requested = k;
  model.mean = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - model.mean.transpose();

  // Eigenvalues of X^T X, descending, and the matching unit directions in R^d.
  Eigen::VectorXd values;
  Eigen::MatrixXd directions;
  if (n < d) {
    const Eigen::MatrixXd gram = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    values = eig.eigenvalues().reverse();
    const Eigen::MatrixXd u = eig.eigenvectors().rowwise().reverse();
    directions = centered.transpose() * u;
  } else {
    const Eigen::MatrixXd cov = centered.transpose() * centered;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    values = eig.eigenvalues().reverse();
    directions = eig.eigenvectors().rowwise().reverse();
  }

  const double largest = std::max(values.size() > 0 ? values(0) : 0.0, 0.0);
  const double cutoff = largest * 1e-10 * static_cast<double>(std::max(n, d));
  Eigen::Index rank = 0;
  while (rank < values.size() && values(rank) > cutoff && values(rank) > 0.0) ++rank;
  const auto keep = std::min<Eigen::Index>(static_cast<Eigen::Index>(k), rank);
  model.rank_deficient = keep < static_cast<Eigen::Index>(k);

  Eigen::MatrixXd v = directions.leftCols(keep);
  if (n < d) {
    for (Eigen::Index j = 0; j < keep; ++j) v.col(j) /= std::sqrt(values(j));
  }
  orthonormalize(v);
  fix_signs(v);
  model.components = std::move(v);
  model.explained_variance.resize(static_cast<std::size_t>(keep));
  for (Eigen::Index j = 0; j < keep; ++j) {
    model.explained_variance[static_cast<std::size_t>(j)] = values(j) / static_cast<double>(n - 1);
  }
  return model;
}

Eigen::VectorXd pca_project(const PcaModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.mean.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                fmt::format("vector has dimension {}, model expects {}", x.size(), model.mean.size()));
  }
  return model.components.transpose() * (x - model.mean);
}

Eigen::MatrixXd pca_project_rows(const PcaModel& model, const Eigen::MatrixXd& data) {
  if (data.cols() != model.mean.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                fmt::format("rows have dimension {}, model expects {}", data.cols(), model.mean.size()));
  }
  return (data.rowwise() - model.mean.transpose()) * model.components;
}

Eigen::VectorXd pca_reconstruct(const PcaModel& model, const Eigen::VectorXd& z) {
  if (z.size() != model.components.cols()) {
    throw Error(ErrorKind::dimension_mismatch,
                fmt::format("code has dimension {}, model rank is {}", z.size(), model.components.cols()));
  }
  return model.mean + model.components * z;
}

}  // namespace lfkit
