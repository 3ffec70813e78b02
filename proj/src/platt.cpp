#include "lfkit/platt.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "lfkit/core.hpp"

namespace lfkit {

namespace {

struct Targets {
  std::vector<double> t;
  double prior_pos = 0;
  double prior_neg = 0;
};

Targets smoothed_targets(const std::vector<double>& f, const std::vector<int>& labels) {
  if (f.size() != labels.size()) {
    throw Error(ErrorKind::dimension_mismatch,
                fmt::format("{} decision values for {} labels", f.size(), labels.size()));
  }
  Targets out;
  for (int y : labels) (y > 0 ? out.prior_pos : out.prior_neg) += 1.0;
  if (out.prior_pos == 0 || out.prior_neg == 0) {
    throw Error(ErrorKind::single_class_input, "Platt fit needs both labels");
  }
  const double hi = (out.prior_pos + 1.0) / (out.prior_pos + 2.0);
  const double lo = 1.0 / (out.prior_neg + 2.0);
  out.t.reserve(labels.size());
  for (int y : labels) out.t.push_back(y > 0 ? hi : lo);
  return out;
}

double objective(const std::vector<double>& f, const std::vector<double>& t, double a, double b) {
  double value = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double z = f[i] * a + b;
    value += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
  }
  return value;
}

}  // namespace

double platt_objective(const std::vector<double>& f, const std::vector<int>& labels, double a,
                       double b) {
  return objective(f, smoothed_targets(f, labels).t, a, b);
}

PlattModel platt_fit(const std::vector<double>& f, const std::vector<int>& labels) {
  const auto targets = smoothed_targets(f, labels);
  const auto& t = targets.t;

  PlattModel model;
  model.b = std::log((targets.prior_neg + 1.0) / (targets.prior_pos + 1.0));
  const auto [fmin, fmax] = std::minmax_element(f.begin(), f.end());
  if (*fmax - *fmin <= 1e-12 * std::max(1.0, std::abs(*fmax))) {
    model.degenerate = true;
    return model;
  }

  constexpr int kMaxIter = 100;
  constexpr double kMinStep = 1e-10;
  constexpr double kSigma = 1e-12;
  double fval = objective(f, t, model.a, model.b);
  for (int iter = 0; iter < kMaxIter; ++iter) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double z = f[i] * model.a + model.b;
      double p, q;
      if (z >= 0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += f[i] * f[i] * d2;
      h22 += d2;
      h21 += f[i] * d2;
      const double d1 = t[i] - p;
      g1 += f[i] * d1;
      g2 += d1;
    }
    model.iterations = iter + 1;
    if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;

    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= kMinStep) {
      const double na = model.a + step * da;
      const double nb = model.b + step * db;
      const double nf = objective(f, t, na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        model.a = na;
        model.b = nb;
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < kMinStep) break;  // no further decrease available
  }
  return model;
}

}  // namespace lfkit
