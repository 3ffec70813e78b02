#include "lfkit/grid_search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "lfkit/core.hpp"
#include "lfkit/rng.hpp"

namespace lfkit {

GridResult grid_search(const std::function<double(double)>& loss, const GridOptions& options) {
  if (options.tier1.empty()) throw Error(ErrorKind::config_error, "grid tier 1 is empty");
  GridResult result;
  std::map<double, double> seen;

  auto best_of = [&](const std::vector<double>& costs, int tier) {
    double best_c = 0.0;
    double best_l = 0.0;
    bool first = true;
    std::vector<double> sorted = costs;
    std::sort(sorted.begin(), sorted.end());
    for (double c : sorted) {
      auto it = seen.find(c);
      if (it == seen.end()) {
        it = seen.emplace(c, loss(c)).first;
        result.evaluated.push_back({c, it->second, tier});
      }
      // Ascending C, so only a strict improvement replaces the incumbent.
      if (first || it->second < best_l) {
        best_c = c;
        best_l = it->second;
        first = false;
      }
    }
    return std::pair{best_c, best_l};
  };

  std::tie(result.tier1_cost, result.tier1_loss) = best_of(options.tier1, 1);
  result.best_cost = result.tier1_cost;
  result.best_loss = result.tier1_loss;
  if (options.second_tier && !options.refine.empty()) {
    std::vector<double> tier2;
    for (double m : options.refine) tier2.push_back(result.tier1_cost * m);
    std::tie(result.best_cost, result.best_loss) = best_of(tier2, 2);
  }
  return result;
}

std::vector<bool> inner_validation_split(const std::vector<std::string>& groups,
                                         double validation_fraction, std::uint64_t seed) {
  const std::set<std::string> unique(groups.begin(), groups.end());
  std::vector<std::string> subjects(unique.begin(), unique.end());
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(subjects));
  auto held = static_cast<std::size_t>(std::llround(validation_fraction * static_cast<double>(subjects.size())));
  held = std::clamp<std::size_t>(held, subjects.size() > 1 ? 1 : 0, subjects.size() > 1 ? subjects.size() - 1 : 0);
  const std::set<std::string> validation(subjects.begin(), subjects.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<bool> out(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) out[i] = validation.count(groups[i]) > 0;
  return out;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

template <typename T>
std::vector<T> take(const std::vector<T>& v, const std::vector<std::size_t>& rows) {
  std::vector<T> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(v[r]);
  return out;
}

}  // namespace

GridResult grid_search_svm(const Eigen::MatrixXd& x, const std::vector<int>& y,
                           const std::vector<std::string>& groups, std::uint64_t seed,
                           const GridOptions& options) {
  const auto split = inner_validation_split(groups, options.validation_fraction, seed);
  std::vector<std::size_t> tr, va;
  for (std::size_t i = 0; i < split.size(); ++i) (split[i] ? va : tr).push_back(i);
  const auto ytr = take(y, tr);
  const auto yva = take(y, va);
  const bool both = std::count(ytr.begin(), ytr.end(), 1) > 0 && std::count(ytr.begin(), ytr.end(), -1) > 0;
  if (!both || va.empty()) {
    // Inner split cannot support a comparison; every C scores the same.
    return grid_search([](double) { return 0.0; }, options);
  }
  const Eigen::MatrixXd xtr = take_rows(x, tr);
  const Eigen::MatrixXd xva = take_rows(x, va);
  const LinearKernel kernel(xtr);
  return grid_search(
      [&](double c) {
        const auto m = svm_train(kernel, ytr, c, options.solver);
        const Eigen::VectorXd f = m.decision(xva);
        std::size_t wrong = 0;
        for (std::size_t i = 0; i < yva.size(); ++i) {
          const int pred = f(static_cast<Eigen::Index>(i)) >= 0.0 ? 1 : -1;
          wrong += pred != yva[i];
        }
        return static_cast<double>(wrong) / static_cast<double>(yva.size());
      },
      options);
}

GridResult grid_search_svr(const Eigen::MatrixXd& x, const std::vector<double>& y,
                           const std::vector<std::string>& groups, double epsilon,
                           std::uint64_t seed, const GridOptions& options) {
  const auto split = inner_validation_split(groups, options.validation_fraction, seed);
  std::vector<std::size_t> tr, va;
  for (std::size_t i = 0; i < split.size(); ++i) (split[i] ? va : tr).push_back(i);
  if (tr.size() < 2 || va.empty()) return grid_search([](double) { return 0.0; }, options);
  const Eigen::MatrixXd xtr = take_rows(x, tr);
  const Eigen::MatrixXd xva = take_rows(x, va);
  const auto ytr = take(y, tr);
  const auto yva = take(y, va);
  const LinearKernel kernel(xtr);
  return grid_search(
      [&](double c) {
        const auto m = svr_train(kernel, ytr, c, epsilon, options.solver);
        const Eigen::VectorXd f = m.predict(xva);
        double mae = 0.0;
        for (std::size_t i = 0; i < yva.size(); ++i) mae += std::abs(f(static_cast<Eigen::Index>(i)) - yva[i]);
        return mae / static_cast<double>(yva.size());
      },
      options);
}

}  // namespace lfkit
