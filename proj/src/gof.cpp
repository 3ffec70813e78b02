#include "lfkit/gof.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "lfkit/core.hpp"
#include "lfkit/parallel.hpp"
#include "lfkit/rng.hpp"

namespace lfkit {

Ecdf::Ecdf(std::vector<double> sample) : sorted_(std::move(sample)) {
  if (sorted_.empty()) throw Error(ErrorKind::empty_sample, "ECDF of an empty sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

namespace {

// Pooled sample sorted once; a relabeling only changes which positions belong to x.
struct Pooled {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> values;            // sorted
  std::vector<std::uint32_t> group_end;  // one past the last position of each distinct value
  std::vector<std::uint8_t> observed;    // 1 where the position came from x
};

Pooled pool(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) {
    throw Error(ErrorKind::empty_sample,
                fmt::format("two-sample test needs non-empty samples (n={}, m={})", x.size(),
                            y.size()));
  }
  std::vector<std::pair<double, std::uint8_t>> tagged;
  tagged.reserve(x.size() + y.size());
  for (double v : x) tagged.emplace_back(v, 1);
  for (double v : y) tagged.emplace_back(v, 0);
  std::sort(tagged.begin(), tagged.end());

  Pooled p;
  p.n = x.size();
  p.m = y.size();
  p.values.reserve(tagged.size());
  p.observed.reserve(tagged.size());
  for (std::size_t i = 0; i < tagged.size(); ++i) {
    p.values.push_back(tagged[i].first);
    p.observed.push_back(tagged[i].second);
    if (i + 1 == tagged.size() || tagged[i + 1].first != tagged[i].first) {
      p.group_end.push_back(static_cast<std::uint32_t>(i + 1));
    }
  }
  return p;
}

struct Stats {
  double ks = 0.0;
  double ks_greater = 0.0;
  double ad = 0.0;
};

Stats evaluate(const Pooled& p, const std::uint8_t* labels) {
  const double n = static_cast<double>(p.n);
  const double m = static_cast<double>(p.m);
  const double total = n + m;
  std::size_t cx = 0;
  std::size_t pos = 0;
  double sup_abs = 0.0;
  double sup_pos = 0.0;
  double ad = 0.0;
  std::size_t start = 0;
  for (const std::uint32_t end : p.group_end) {
    for (; pos < end; ++pos) cx += labels[pos];
    const double f = static_cast<double>(cx) / n;
    const double g = static_cast<double>(end - cx) / m;
    const double diff = f - g;
    sup_abs = std::max(sup_abs, std::abs(diff));
    sup_pos = std::max(sup_pos, diff);
    if (end < p.values.size()) {
      const double h = static_cast<double>(end) / total;
      ad += diff * diff / (h * (1.0 - h)) * static_cast<double>(end - start) / total;
    }
    start = end;
  }
  const double scale = n * m / total;
  return {std::sqrt(scale) * sup_abs, std::sqrt(scale) * sup_pos, scale * ad};
}

double pick(const Stats& s, StatKind kind) {
  switch (kind) {
    case StatKind::ks: return s.ks;
    case StatKind::ks_greater: return s.ks_greater;
    case StatKind::ad: return s.ad;
  }
  return 0.0;
}

void require_spread(const Pooled& p) {
  if (p.group_end.size() < 2) {
    throw Error(ErrorKind::degenerate_sample, "pooled sample has zero variance");
  }
}

bool at_least(double permuted, double observed) {
  return permuted >= observed - 1e-12 * std::max(1.0, std::abs(observed));
}

// Visits every way of choosing n of N positions as x.
template <typename Fn>
void for_each_relabeling(std::size_t total, std::size_t n, Fn&& fn) {
  std::vector<std::size_t> pick(n);
  std::iota(pick.begin(), pick.end(), std::size_t{0});
  std::vector<std::uint8_t> labels(total, 0);
  while (true) {
    std::fill(labels.begin(), labels.end(), 0);
    for (auto i : pick) labels[i] = 1;
    fn(labels.data());
    std::size_t i = n;
    while (i > 0 && pick[i - 1] == total - n + (i - 1)) --i;
    if (i == 0) return;
    ++pick[i - 1];
    for (std::size_t j = i; j < n; ++j) pick[j] = pick[j - 1] + 1;
  }
}

void random_labels(const Pooled& p, std::uint64_t seed, std::vector<std::uint32_t>& idx,
                   std::vector<std::uint8_t>& labels) {
  const std::size_t total = p.values.size();
  Rng rng(seed);
  idx.resize(total);
  std::iota(idx.begin(), idx.end(), 0u);
  labels.assign(total, 0);
  for (std::size_t i = 0; i < p.n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(idx[i], idx[j]);
    labels[idx[i]] = 1;
  }
}

std::uint64_t check_exact(const Pooled& p, const PermutationOptions& options) {
  const auto count = binomial_coefficient(p.n + p.m, p.n);
  if (count > options.exact_cap) {
    throw Error(ErrorKind::exact_mode_too_large,
                fmt::format("exact mode needs C({}, {}) relabelings, cap is {}", p.n + p.m, p.n,
                            options.exact_cap));
  }
  return count;
}

// Shared driver: evaluates `score` on the observed labeling and on every relabeling.
template <std::size_t K, typename Score>
std::array<GofResult, K> run_permutations(const Pooled& p, const PermutationOptions& options,
                                          Score&& score) {
  const auto observed = score(p.observed.data());
  std::array<std::size_t, K> hits{};
  std::size_t evaluated = 0;
  GofMethod method = GofMethod::permutation;

  if (options.exact) {
    evaluated = check_exact(p, options);
    method = GofMethod::exact;
    for_each_relabeling(p.values.size(), p.n, [&](const std::uint8_t* labels) {
      const auto s = score(labels);
      for (std::size_t k = 0; k < K; ++k) hits[k] += at_least(s[k], observed[k]);
    });
  } else {
    if (options.permutations == 0) {
      throw Error(ErrorKind::config_error, "permutation count must be at least 1");
    }
    evaluated = options.permutations;
    std::vector<std::array<double, K>> replicate(options.permutations);
    parallel_for(
        options.permutations,
        [&](std::size_t r) {
          std::vector<std::uint32_t> idx;
          std::vector<std::uint8_t> labels;
          random_labels(p, mix_seed(options.seed, r), idx, labels);
          replicate[r] = score(labels.data());
        },
        options.threads);
    for (const auto& s : replicate) {
      for (std::size_t k = 0; k < K; ++k) hits[k] += at_least(s[k], observed[k]);
    }
  }

  std::array<GofResult, K> out;
  for (std::size_t k = 0; k < K; ++k) {
    auto& r = out[k];
    r.statistic = observed[k];
    r.method = method;
    r.n = p.n;
    r.m = p.m;
    r.permutations = evaluated;
    r.p_value = method == GofMethod::exact
                    ? static_cast<double>(hits[k]) / static_cast<double>(evaluated)
                    : static_cast<double>(1 + hits[k]) / static_cast<double>(1 + evaluated);
    r.p_value = std::clamp(r.p_value, 0.0, 1.0);
  }
  return out;
}

}  // namespace

double ks_statistic(std::span<const double> x, std::span<const double> y,
                    KsAlternative alternative) {
  const auto p = pool(x, y);
  const auto s = evaluate(p, p.observed.data());
  return alternative == KsAlternative::two_sided ? s.ks : s.ks_greater;
}

double ad_statistic(std::span<const double> x, std::span<const double> y) {
  const auto p = pool(x, y);
  require_spread(p);
  return evaluate(p, p.observed.data()).ad;
}

GofResult permutation_p_value(std::span<const double> x, std::span<const double> y,
                              StatKind stat, const PermutationOptions& options) {
  const auto p = pool(x, y);
  if (stat == StatKind::ad) require_spread(p);
  return run_permutations<1>(p, options, [&](const std::uint8_t* labels) {
    return std::array<double, 1>{pick(evaluate(p, labels), stat)};
  })[0];
}

GofResult permutation_p_value(std::span<const double> x, std::span<const double> y,
                              const StatFn& stat, const PermutationOptions& options) {
  const auto p = pool(x, y);
  return run_permutations<1>(p, options, [&](const std::uint8_t* labels) {
    std::vector<double> xs;
    std::vector<double> ys;
    xs.reserve(p.n);
    ys.reserve(p.m);
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      (labels[i] ? xs : ys).push_back(p.values[i]);
    }
    return std::array<double, 1>{stat(xs, ys)};
  })[0];
}

KsAdResult permutation_ks_ad(std::span<const double> x, std::span<const double> y,
                             const PermutationOptions& options) {
  const auto p = pool(x, y);
  require_spread(p);
  const auto r = run_permutations<2>(p, options, [&](const std::uint8_t* labels) {
    const auto s = evaluate(p, labels);
    return std::array<double, 2>{s.ks, s.ad};
  });
  return {r[0], r[1]};
}

double ks_asymptotic_p(double d) {
  if (!(d > 0.0)) return 1.0;
  double p = 0.0;
  if (d < 0.8) {
    // Theta-function form; the alternating series converges slowly here.
    constexpr double pi = std::numbers::pi;
    double sum = 0.0;
    for (int k = 1; k < 100; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * pi * pi / (8.0 * d * d));
      sum += term;
      if (term < 1e-16 * sum) break;
    }
    p = 1.0 - std::sqrt(2.0 * pi) / d * sum;
  } else {
    for (int k = 1; k < 1000; ++k) {
      const double term = std::exp(-2.0 * k * k * d * d);
      p += (k % 2 == 1 ? 2.0 : -2.0) * term;
      if (term < 1e-12) break;
    }
  }
  return std::clamp(p, 0.0, 1.0);
}

GofResult ks_asymptotic_test(std::span<const double> x, std::span<const double> y) {
  GofResult r;
  r.statistic = ks_statistic(x, y);
  r.p_value = ks_asymptotic_p(r.statistic);
  r.method = GofMethod::asymptotic;
  r.n = x.size();
  r.m = y.size();
  return r;
}

std::uint64_t binomial_coefficient(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 c = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    c = c * (n - k + i) / i;
    if (c > std::numeric_limits<std::uint64_t>::max()) {
      return std::numeric_limits<std::uint64_t>::max();
    }
  }
  return static_cast<std::uint64_t>(c);
}

}  // namespace lfkit
