#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "lfkit/dataset_io.hpp"
#include "lfkit/grid_search.hpp"
#include "lfkit/learners.hpp"
#include "lfkit/model_io.hpp"
#include "lfkit/platt.hpp"
#include "lfkit/rng.hpp"
#include "lfkit/smo.hpp"
#include "test_util.hpp"

using namespace lfkit;
using lfkit::testing::TempDir;

namespace {

struct Blobs {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

Blobs blobs(Rng& rng, int n, int d, double separation, double sd = 1.0) {
  Blobs b{Eigen::MatrixXd(n, d), std::vector<int>(static_cast<std::size_t>(n))};
  for (int i = 0; i < n; ++i) {
    const int label = i % 2 ? 1 : -1;
    b.y[static_cast<std::size_t>(i)] = label;
    for (int j = 0; j < d; ++j) b.x(i, j) = rng.normal() * sd + (j == 0 ? label * separation : 0.0);
  }
  return b;
}

double accuracy(const LinearSvmModel& m, const Blobs& b) {
  const Eigen::VectorXd f = m.decision(b.x);
  int hits = 0;
  for (int i = 0; i < f.size(); ++i) hits += (f(i) >= 0 ? 1 : -1) == b.y[static_cast<std::size_t>(i)];
  return static_cast<double>(hits) / f.size();
}

// Direct minimisation of the 1-D hinge primal on a fine grid, refined once.
double primal_1d_grid(const std::vector<double>& x, const std::vector<int>& y, double c) {
  auto p = [&](double w, double b) {
    double loss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) loss += std::max(0.0, 1.0 - y[i] * (w * x[i] + b));
    return 0.5 * w * w + c * loss;
  };
  double best = p(0, 0), bw = 0, bb = 0;
  for (int pass = 0; pass < 3; ++pass) {
    const double span = pass == 0 ? 10.0 : (pass == 1 ? 0.05 : 0.0005);
    const double cw = bw, cb = bb;
    for (int i = -400; i <= 400; ++i) {
      for (int j = -400; j <= 400; ++j) {
        const double w = cw + span * i / 400.0, b = cb + span * j / 400.0;
        const double v = p(w, b);
        if (v < best) best = v, bw = w, bb = b;
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("separable data is fit perfectly") {
  Rng rng(1);
  const auto b = blobs(rng, 200, 5, 4.0, 0.5);
  const auto m = svm_train(b.x, b.y, 10.0);
  CHECK(m.stats.converged);
  CHECK(accuracy(m, b) == 1.0);
  CHECK(m.stats.primal >= m.stats.dual - 1e-9);
  CHECK(m.stats.primal - m.stats.dual <= 1e-3 * (1.0 + std::abs(m.stats.primal)));
  CHECK(svm_primal(m, b.x, b.y) == doctest::Approx(m.stats.primal));
}

TEST_CASE("svm objective matches a tighter, longer reference") {
  Rng rng(2);
  for (double c : {0.01, 1.0, 100.0}) {
    const auto b = blobs(rng, 150, 8, 0.8);
    SolverOptions loose;
    const auto m = svm_train(b.x, b.y, c, loose);
    SolverOptions tight;
    tight.tol = 1e-9;
    tight.max_iter = 10 * std::max<std::size_t>(100000, 1000 * 150);
    const auto ref = svm_train(b.x, b.y, c, tight);
    const double p = svm_primal(m, b.x, b.y);
    const double pr = svm_primal(ref, b.x, b.y);
    CHECK(p >= pr - 1e-9 * (1.0 + std::abs(pr)));
    CHECK(p - pr <= loose.tol * (1.0 + std::abs(pr)));
  }
}

TEST_CASE("svm primal agrees with direct minimisation in one dimension") {
  const std::vector<double> x{-2.0, -1.5, -0.3, 0.2, 0.4, 1.0, 1.8, -0.6, 0.9, 2.5};
  const std::vector<int> y{-1, -1, 1, -1, 1, 1, 1, -1, -1, 1};
  Eigen::MatrixXd xm(10, 1);
  for (int i = 0; i < 10; ++i) xm(i, 0) = x[static_cast<std::size_t>(i)];
  for (double c : {0.1, 1.0, 5.0}) {
    SolverOptions opts;
    opts.tol = 1e-8;
    const auto m = svm_train(xm, y, c, opts);
    const double grid = primal_1d_grid(x, y, c);
    CHECK(svm_primal(m, xm, y) <= grid + 1e-6);
    CHECK(svm_primal(m, xm, y) == doctest::Approx(grid).epsilon(1e-4));
  }
}

TEST_CASE("svr recovers exact linear data within epsilon") {
  Rng rng(3);
  const int n = 120, d = 6;
  Eigen::MatrixXd x(n, d);
  std::vector<double> y(static_cast<std::size_t>(n));
  const Eigen::VectorXd w_true = (Eigen::VectorXd(d) << 2.0, -1.0, 0.5, 3.0, 0.0, -2.5).finished();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
    y[static_cast<std::size_t>(i)] = x.row(i).dot(w_true) + 30.0;
  }
  const double eps = 1.0;
  const auto m = svr_train(x, y, 100.0, eps);
  CHECK(m.stats.converged);
  const Eigen::VectorXd f = m.predict(x);
  double mae = 0.0, worst = 0.0;
  for (int i = 0; i < n; ++i) {
    const double r = std::abs(f(i) - y[static_cast<std::size_t>(i)]);
    mae += r / n;
    worst = std::max(worst, r);
  }
  CHECK(mae <= eps);
  CHECK(worst <= eps + 1e-3);
  CHECK(svr_primal(m, x, y) == doctest::Approx(m.stats.primal));
  CHECK(m.stats.primal - m.stats.dual <= 1e-3 * (1.0 + m.stats.primal));
}

TEST_CASE("svr objective matches a tighter reference") {
  Rng rng(4);
  const int n = 80;
  Eigen::MatrixXd x(n, 4);
  std::vector<double> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.normal();
    y[static_cast<std::size_t>(i)] = 3 * x(i, 0) - x(i, 2) + rng.normal(0, 2);
  }
  const auto m = svr_train(x, y, 1.0, 1.0);
  SolverOptions tight;
  tight.tol = 1e-9;
  tight.max_iter = 10 * 100000;
  const auto ref = svr_train(x, y, 1.0, 1.0, tight);
  const double p = svr_primal(m, x, y), pr = svr_primal(ref, x, y);
  CHECK(p - pr <= 1e-3 * (1.0 + std::abs(pr)));
  CHECK(p >= pr - 1e-9 * (1.0 + std::abs(pr)));
}

TEST_CASE("learner input errors") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 2);
  try {
    svm_train(x, {1, 1, 1, 1}, 1.0);
    FAIL("expected single_class_input");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::single_class_input);
  }
  CHECK_THROWS_AS(svm_train(x, {1, -1, 1}, 1.0), Error);
  CHECK_THROWS_AS(svm_train(x, {1, -1, 1, 2}, 1.0), Error);
  CHECK_THROWS_AS(svm_train(x, {1, -1, 1, -1}, 0.0), Error);
  CHECK_THROWS_AS(svr_train(x, {1, 2, 3}, 1.0, 1.0), Error);
  CHECK_THROWS_AS(svr_train(x, {1, 2, 3, 4}, 1.0, -1.0), Error);
}

TEST_CASE("piecewise linear argmin agrees with brute force") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::pair<double, double>> br;
    double total = 0;
    const int k = static_cast<int>(rng.range(1, 8));
    for (int i = 0; i < k; ++i) {
      const double w = static_cast<double>(rng.range(1, 3));
      br.emplace_back(static_cast<double>(rng.range(-5, 5)), w);
      total += w;
    }
    const double s0 = -static_cast<double>(rng.range(1, static_cast<std::int64_t>(total)));
    auto value = [&](double b) {
      double v = s0 * b;
      for (const auto& [p, w] : br) v += w * std::max(0.0, b - p);
      return v;
    };
    double best = value(-6);
    for (double b = -6; b <= 6; b += 0.5) best = std::min(best, value(b));
    const auto [lo, hi] = piecewise_linear_argmin(br, s0);
    CHECK(value(lo) == doctest::Approx(best));
    if (std::isfinite(hi)) CHECK(value(hi) == doctest::Approx(best));
    CHECK(lo <= hi);
  }
}

TEST_CASE("platt scaling") {
  SUBCASE("symmetric scores put P(0) at one half") {
    const std::vector<double> f{-3, -2, -1, -0.5, 0.5, 1, 2, 3, -0.2, 0.2};
    const std::vector<int> y{-1, -1, -1, 1, -1, 1, 1, 1, 1, -1};
    const auto m = platt_fit(f, y);
    CHECK(std::abs(m.probability(0.0) - 0.5) < 1e-6);
    CHECK(m.a < 0);
    CHECK(m.probability(2.0) > 0.5);
  }
  SUBCASE("the fit is a minimum of the objective") {
    Rng rng(6);
    std::vector<double> f;
    std::vector<int> y;
    for (int i = 0; i < 300; ++i) {
      const int label = rng.bernoulli(0.3) ? 1 : -1;
      y.push_back(label);
      f.push_back(rng.normal(label * 1.5, 1.2));
    }
    const auto m = platt_fit(f, y);
    const double at = platt_objective(f, y, m.a, m.b);
    for (double da : {-1e-3, 0.0, 1e-3}) {
      for (double db : {-1e-3, 0.0, 1e-3}) {
        CHECK(platt_objective(f, y, m.a + da, m.b + db) >= at - 1e-9);
      }
    }
    for (double v : {-50.0, -1.0, 0.0, 1.0, 50.0}) {
      const double p = m.probability(v);
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
    }
    CHECK(m.probability(1e6) == doctest::Approx(1.0));
  }
  SUBCASE("constant scores give the smoothed prior") {
    const auto m = platt_fit({1, 1, 1, 1, 1}, {1, -1, -1, 1, -1});
    CHECK(m.degenerate);
    CHECK(m.a == 0.0);
    // Falls back to the prior (2 + 1) / (5 + 2) from the starting point.
    CHECK(m.probability(1.0) == doctest::Approx(3.0 / 7.0).epsilon(1e-8));
  }
  CHECK_THROWS_AS(platt_fit({1, 2}, {1, 1}), Error);
}

TEST_CASE("grid search prefers the smaller cost on ties and refines") {
  int calls = 0;
  const auto flat = grid_search([&](double) {
    ++calls;
    return 1.0;
  });
  CHECK(flat.best_cost == 1e-3 * 0.25);
  CHECK(flat.tier1_cost == 1e-3);
  CHECK(calls == 7 + 4);  // the tier-1 winner is not re-evaluated

  const auto bowl = grid_search([](double c) { return std::pow(std::log10(c) - 0.4, 2); });
  CHECK(bowl.tier1_cost == 1.0);
  CHECK(bowl.best_cost == 2.0);

  GridOptions one_tier;
  one_tier.second_tier = false;
  CHECK(grid_search([](double c) { return -c; }, one_tier).best_cost == 1e3);
}

TEST_CASE("inner validation split is subject-disjoint and seeded") {
  std::vector<std::string> groups;
  for (int s = 0; s < 30; ++s) {
    for (int k = 0; k <= s % 4; ++k) groups.push_back("s" + std::to_string(s));
  }
  const auto a = inner_validation_split(groups, 1.0 / 3.0, 5);
  CHECK(a == inner_validation_split(groups, 1.0 / 3.0, 5));
  std::set<std::string> val, train;
  for (std::size_t i = 0; i < groups.size(); ++i) (a[i] ? val : train).insert(groups[i]);
  for (const auto& s : val) CHECK_FALSE(train.count(s));
  CHECK(val.size() == 10);
}

TEST_CASE("grid search on real learners picks a working cost") {
  Rng rng(7);
  const auto b = blobs(rng, 120, 4, 1.5);
  std::vector<std::string> groups;
  for (int i = 0; i < 120; ++i) groups.push_back("g" + std::to_string(i / 2));
  GridOptions opts;
  opts.second_tier = false;
  const auto r = grid_search_svm(b.x, b.y, groups, 3, opts);
  CHECK(r.evaluated.size() == 7);
  CHECK(r.best_loss < 0.25);
}

TEST_CASE("model files round-trip") {
  TempDir dir("models");
  Rng rng(8);
  const auto b = blobs(rng, 40, 3, 2.0);
  const auto svm = svm_train(b.x, b.y, 1.0);
  save_svm(dir / "race.svm", svm, "abc");
  const auto svm2 = load_svm(dir / "race.svm");
  CHECK(svm2.w == svm.w);
  CHECK(svm2.bias == svm.bias);
  CHECK(svm2.cost == svm.cost);
  CHECK(read_model_file(dir / "race.svm").at("training_hash") == "abc");

  std::vector<double> y;
  for (int i = 0; i < 40; ++i) y.push_back(b.x(i, 0) * 3);
  const auto svr = svr_train(b.x, y, 10.0, 0.5);
  save_svr(dir / "age.svr", svr, "abc");
  const auto svr2 = load_svr(dir / "age.svr");
  CHECK(svr2.w == svr.w);
  CHECK(svr2.epsilon == 0.5);

  const PlattModel p{-1.25, 0.125, false, 4};
  save_platt(dir / "p.platt", p, "abc");
  const auto p2 = load_platt(dir / "p.platt");
  CHECK(p2.a == p.a);
  CHECK(p2.b == p.b);

  const auto s = Standardizer::fit(b.x);
  save_standardizer(dir / "z.std", s, "abc");
  const auto s2 = load_standardizer(dir / "z.std");
  CHECK(s2.mean == s.mean);
  CHECK(s2.scale == s.scale);

  write_file(dir / "bad.svm", "kind=svm\n\n");
  CHECK_THROWS_AS(load_svm(dir / "bad.svm"), Error);
}

TEST_CASE("standardizer") {
  Eigen::MatrixXd x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const auto s = Standardizer::fit(x);
  CHECK(s.mean(0) == 2.5);
  CHECK(s.scale(0) == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(s.scale(1) == 1.0);
  const auto z = s.apply(x);
  CHECK(z(0, 1) == 0.0);
  CHECK(z.col(0).sum() == doctest::Approx(0.0));
  CHECK_THROWS_AS(s.apply(Eigen::MatrixXd::Zero(2, 3)), Error);
}
