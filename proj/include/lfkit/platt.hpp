#pragma once

#include <cmath>
#include <vector>

namespace lfkit {

// P(positive | f) = 1 / (1 + exp(A f + B)).
struct PlattModel {
  double a = 0.0;
  double b = 0.0;
  bool degenerate = false;  // all decision values equal; A fixed at 0
  int iterations = 0;

  double probability(double f) const {
    const double z = a * f + b;
    // Evaluated on the side that cannot overflow.
    return z >= 0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
  }
};

// Newton iteration with backtracking on the smoothed-target log-likelihood.
// Labels are +1 / -1. Throws single_class_input.
PlattModel platt_fit(const std::vector<double>& f, const std::vector<int>& labels);

// Negative log-likelihood of (A, B) under the smoothed targets.
double platt_objective(const std::vector<double>& f, const std::vector<int>& labels, double a,
                       double b);

}  // namespace lfkit
