#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace lfkit {

// Right-continuous empirical CDF.
class Ecdf {
 public:
  explicit Ecdf(std::vector<double> sample);

  double operator()(double x) const;
  std::size_t size() const { return sorted_.size(); }
  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

// two_sided uses sup|F - G|; greater uses sup(F - G) with F the ECDF of x.
enum class KsAlternative { two_sided, greater };

// sqrt(nm/N) * sup over pooled points. Throws empty_sample.
double ks_statistic(std::span<const double> x, std::span<const double> y,
                    KsAlternative alternative = KsAlternative::two_sided);

// (nm/N) * integral of (F - G)^2 / (H (1 - H)) dH, summed over the distinct pooled
// values; the integrand is 0 where H = 1. Throws empty_sample, degenerate_sample.
double ad_statistic(std::span<const double> x, std::span<const double> y);

enum class GofMethod { permutation, exact, asymptotic };
enum class StatKind { ks, ks_greater, ad };

struct GofResult {
  double statistic = 0.0;
  double p_value = 1.0;
  GofMethod method = GofMethod::permutation;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t permutations = 0;  // relabelings evaluated
};

struct PermutationOptions {
  std::size_t permutations = 10000;
  std::uint64_t seed = 0;
  bool exact = false;
  std::uint64_t exact_cap = 1'000'000;  // largest C(N, n) enumerated
  unsigned threads = 0;
};

// Monte Carlo: p = (1 + #{perm >= obs}) / (1 + permutations), replicate r drawn
// from mix_seed(seed, r). Exact: proportion of all C(N, n) relabelings >= obs.
GofResult permutation_p_value(std::span<const double> x, std::span<const double> y,
                              StatKind stat, const PermutationOptions& options = {});

using StatFn = std::function<double(std::span<const double>, std::span<const double>)>;
GofResult permutation_p_value(std::span<const double> x, std::span<const double> y,
                              const StatFn& stat, const PermutationOptions& options = {});

// Two-sided KS and AD from one shared set of relabelings.
struct KsAdResult {
  GofResult ks;
  GofResult ad;
};
KsAdResult permutation_ks_ad(std::span<const double> x, std::span<const double> y,
                             const PermutationOptions& options = {});

// Kolmogorov limiting tail P(K > d), clamped to [0, 1].
double ks_asymptotic_p(double d);
GofResult ks_asymptotic_test(std::span<const double> x, std::span<const double> y);

std::uint64_t binomial_coefficient(std::uint64_t n, std::uint64_t k);  // saturates at UINT64_MAX

}  // namespace lfkit
