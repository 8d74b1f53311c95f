// Copyright 2026 The rankforge Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "rankforge/error.hpp"

namespace rankforge::stats {

enum class SpearmanMethod { TApprox, ExactPermutation };

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  SpearmanMethod method = SpearmanMethod::TApprox;
};

inline constexpr std::size_t kMaxExactPermutationN = 8;

/// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j + 1);  // mean of ranks i+1..j
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = mid;
    i = j;
  }
  return ranks;
}

namespace detail {

inline double pearson(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

/// Rank correlation for any n >= 2. Throws `on_constant` if either input
/// has no spread.
inline double rank_correlation(std::span<const double> x, std::span<const double> y, errc on_constant) {
  if (x.size() != y.size()) {
    fail(errc::length_mismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (is_constant(x) || is_constant(y)) fail(on_constant, "rank correlation of a constant vector is undefined");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson(rx, ry);
}

inline void check_spearman_input(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    fail(errc::length_mismatch, std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < 3) fail(errc::invalid_params, "spearman needs n >= 3, got " + std::to_string(x.size()));
}

}  // namespace detail

/// Spearman's rho: Pearson correlation of the midrank transforms.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  detail::check_spearman_input(x, y);
  return detail::rank_correlation(x, y, errc::constant_input);
}

/// Two-sided p-value of rho under the Student-t approximation with n-2
/// degrees of freedom.
inline double spearman_t_pvalue(double rho, std::size_t n) {
  const double dof = static_cast<double>(n) - 2.0;
  const double r2 = rho * rho;
  if (r2 >= 1.0) return 0.0;
  const double t2 = r2 * dof / (1.0 - r2);
  // P(|T| >= t) = I_{dof/(dof+t^2)}(dof/2, 1/2)
  return std::clamp(boost::math::ibeta(0.5 * dof, 0.5, dof / (dof + t2)), 0.0, 1.0);
}

/// Fraction of all n! pairings of the rank vectors whose |rho| is at least
/// the observed |rho|.
inline double spearman_exact_pvalue(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  const double observed = std::abs(detail::pearson(rx, ry));
  const double tol = 1e-12;
  std::sort(ry.begin(), ry.end());
  std::size_t hits = 0;
  std::size_t total = 0;
  do {
    ++total;
    if (std::abs(detail::pearson(rx, ry)) >= observed - tol) ++hits;
  } while (std::next_permutation(ry.begin(), ry.end()));
  // next_permutation skips duplicate arrangements of tied ranks; each distinct
  // arrangement stands for the same number of raw permutations, so the ratio
  // is unchanged.
  return static_cast<double>(hits) / static_cast<double>(total);
}

inline SpearmanResult spearman_test(std::span<const double> x, std::span<const double> y,
                                    SpearmanMethod method = SpearmanMethod::TApprox) {
  detail::check_spearman_input(x, y);
  SpearmanResult result;
  result.n = x.size();
  result.method = method;
  if (method == SpearmanMethod::TApprox) {
    if (x.size() < 4) fail(errc::invalid_params, "t-approximation needs n >= 4");
    result.rho = detail::rank_correlation(x, y, errc::constant_input);
    result.p_value = spearman_t_pvalue(result.rho, result.n);
  } else {
    if (x.size() > kMaxExactPermutationN) {
      fail(errc::method_unavailable,
           "exact permutation test limited to n <= 8, got " + std::to_string(x.size()));
    }
    result.rho = detail::rank_correlation(x, y, errc::constant_input);
    result.p_value = spearman_exact_pvalue(x, y);
  }
  return result;
}

/// KL(p || q) in nats. Both inputs must be strictly positive probability
/// vectors.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    fail(errc::length_mismatch, std::to_string(p.size()) + " vs " + std::to_string(q.size()));
  }
  auto check = [](std::span<const double> v, const char* name) {
    double sum = 0.0;
    for (double x : v) {
      if (!std::isfinite(x) || x < 0.0) fail(errc::not_normalized, std::string(name) + " has a negative entry");
      if (x == 0.0) fail(errc::zero_entry, std::string(name) + " has a zero entry");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) fail(errc::not_normalized, std::string(name) + " sums to " + std::to_string(sum));
  };
  check(p, "p");
  check(q, "q");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) kl += p[i] * std::log(p[i] / q[i]);
  return std::max(kl, 0.0);
}

/// Shift to nonnegative, add epsilon, normalize to unit sum.
inline std::vector<double> to_distribution(std::span<const double> values, double epsilon) {
  const double lo = *std::min_element(values.begin(), values.end());
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = values[i] - lo + epsilon;
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

/// One-sided exact sign test: P(X >= wins) for X ~ Binomial(trials, 1/2).
inline double sign_test_pvalue(std::size_t wins, std::size_t trials) {
  if (wins == 0) return 1.0;
  if (wins > trials) return 0.0;
  return boost::math::ibeta(static_cast<double>(wins), static_cast<double>(trials - wins + 1), 0.5);
}

}  // namespace rankforge::stats
