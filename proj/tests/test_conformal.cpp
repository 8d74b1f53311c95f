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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "rankforge/conformal.hpp"
#include "rankforge/random.hpp"

namespace rankforge::conformal {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

SquareMatrix matrix(std::initializer_list<std::initializer_list<double>> rows) {
  SquareMatrix m(rows.size());
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

ScoreMatrix random_pool(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  ScoreMatrix pool{SquareMatrix(n, kNaN), SquareMatrix(n, kNaN), {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      pool.quality(i, j) = rng.uniform();
      pool.similarity(i, j) = rng.uniform();
    }
  }
  return pool;
}

errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return errc::invalid_params;
}

TEST(ScoreVectors, RowWithoutDiagonal) {
  ScoreMatrix pool{matrix({{kNaN, 1, 2}, {3, kNaN, 4}, {5, 6, kNaN}}),
                   matrix({{kNaN, .5, .2}, {.5, kNaN, .9}, {.2, .9, kNaN}}), {}};
  EXPECT_EQ(quality_vector(pool, 1), (std::vector<double>{3, 4}));
  EXPECT_EQ(similarity_vector(pool, 2), (std::vector<double>{.2, .9}));

  ScoreMatrix two{matrix({{kNaN, 7}, {9, kNaN}}), matrix({{kNaN, 1}, {1, kNaN}}), {}};
  EXPECT_EQ(quality_vector(two, 0), (std::vector<double>{7}));
  EXPECT_EQ(similarity_vector(two, 0).size(), 1u);
}

TEST(ScoreVectors, LengthIsPoolMinusOne) {
  const auto pool = random_pool(50, 3);
  EXPECT_EQ(quality_vector(pool, 10).size(), 49u);
  const auto twenty = random_pool(20, 4);
  for (CandidateId i = 0; i < 20; ++i) EXPECT_EQ(similarity_vector(twenty, i).size(), 19u);
}

TEST(ScoreVectors, Errors) {
  auto pool = random_pool(4, 5);
  EXPECT_EQ(code_of([&] { quality_vector(pool, 4); }), errc::index_out_of_range);
  pool.quality(2, 0) = std::numeric_limits<double>::infinity();
  EXPECT_EQ(code_of([&] { quality_vector(pool, 2); }), errc::non_finite);
  EXPECT_NO_THROW(quality_vector(pool, 1));
}

TEST(Conformity, Examples) {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> rev{3, 2, 1};
  EXPECT_EQ(conformity_score(a, a, {0.85, ConformityFn::NegKL, 1e-9}), 0.0);
  EXPECT_DOUBLE_EQ(conformity_score(a, rev, {0.85, ConformityFn::Spearman, 1e-9}), -1.0);

  // Sum of squared rank differences is 2, n = 4.
  const std::vector<double> q{1, 2, 3, 4};
  const std::vector<double> s{1, 3, 2, 4};
  const double oracle = 1.0 - 6.0 * 2.0 / (4.0 * 15.0);
  EXPECT_NEAR(oracle, 0.8, 1e-15);
  EXPECT_NEAR(conformity_score(q, s, {0.85, ConformityFn::Spearman, 1e-9}), oracle, 1e-12);
}

TEST(Conformity, NegKlIsNonPositive) {
  Rng rng(9);
  const ConformityConfig cfg{0.85, ConformityFn::NegKL, 1e-9};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng.below(40);
    std::vector<double> q(n), s(n);
    for (auto& v : q) v = rng.normal();
    for (auto& v : s) v = rng.normal();
    EXPECT_LE(conformity_score(q, s, cfg), 0.0);
    // Same derived distribution (positive affine image) -> exactly zero.
    std::vector<double> shifted(q);
    for (auto& v : shifted) v += 5.0;
    EXPECT_NEAR(conformity_score(q, shifted, cfg), 0.0, 1e-12);
  }
}

TEST(Conformity, Errors) {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{1, 2};
  const std::vector<double> flat{2, 2, 2};
  const ConformityConfig spearman{0.85, ConformityFn::Spearman, 1e-9};
  EXPECT_EQ(code_of([&] { conformity_score(a, b, spearman); }), errc::length_mismatch);
  EXPECT_EQ(code_of([&] { conformity_score(a, flat, spearman); }), errc::degenerate_vector);
  const std::vector<double> one{1};
  EXPECT_EQ(code_of([&] { conformity_score(one, one, spearman); }), errc::length_mismatch);
}

TEST(Jackknife, IdenticalMatricesScoreZero) {
  const auto m = matrix({{kNaN, 0.2, 0.7}, {0.4, kNaN, 0.1}, {0.9, 0.3, kNaN}});
  ScoreMatrix pool{m, m, {}};
  const auto report = jackknife_scores(pool, {});
  ASSERT_EQ(report.scores.size(), 3u);
  EXPECT_EQ(report.augmented_set_size, 4u);
  for (double s : report.scores) EXPECT_EQ(s, 0.0);
}

TEST(Jackknife, SpearmanPerRowOracle) {
  // Row 0 is anti-correlated, the others agree.
  ScoreMatrix pool{matrix({{kNaN, 1, 2}, {3, kNaN, 4}, {5, 6, kNaN}}),
                   matrix({{kNaN, 2, 1}, {1, kNaN, 2}, {1, 2, kNaN}}), {}};
  const ConformityConfig cfg{0.85, ConformityFn::Spearman, 1e-9};
  const auto report = jackknife_scores(pool, cfg);
  EXPECT_DOUBLE_EQ(report.scores[0], -1.0);
  for (CandidateId i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(report.scores[i], conformity_score(quality_vector(pool, i), similarity_vector(pool, i), cfg));
  }
}

TEST(Jackknife, ErrorNamesCandidate) {
  ScoreMatrix pool{matrix({{kNaN, 1, 2}, {3, kNaN, 4}, {5, 6, kNaN}}),
                   matrix({{kNaN, 2, 1}, {1, kNaN, 1}, {1, 2, kNaN}}), {}};
  try {
    jackknife_scores(pool, {0.85, ConformityFn::Spearman, 1e-9});
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::degenerate_vector);
    EXPECT_NE(std::string(e.what()).find("candidate 1"), std::string::npos);
  }
  ScoreMatrix tiny{matrix({{kNaN, 1}, {1, kNaN}}), matrix({{kNaN, 1}, {1, kNaN}}), {}};
  EXPECT_EQ(code_of([&] { jackknife_scores(tiny, {}); }), errc::invalid_params);
}

TEST(Quantile, Examples) {
  const std::vector<double> s{1, 2, 3, 4};
  // |V| = 5: ceil(0.15 * 5) = 1 -> the sentinel.
  EXPECT_EQ(quantile_threshold(s, 0.85), kNegInf);
  // ceil(0.6 * 5) = 3 -> V sorted (-inf, 1, 2, 3, 4), third smallest.
  EXPECT_EQ(quantile_threshold(s, 0.4), 2.0);
  EXPECT_EQ(quantile_threshold(s, 1.0), kNegInf);
  // Smallest alpha pushes the index to |V|: the maximum score.
  EXPECT_EQ(quantile_threshold(s, 1e-6), 4.0);
  EXPECT_TRUE(reliable_set(s, quantile_threshold(s, 1e-6)).empty());
}

TEST(Quantile, Errors) {
  const std::vector<double> empty;
  const std::vector<double> s{1, 2};
  EXPECT_EQ(code_of([&] { quantile_threshold(empty, 0.5); }), errc::empty_scores);
  EXPECT_EQ(code_of([&] { quantile_threshold(s, 0.0); }), errc::alpha_out_of_range);
  EXPECT_EQ(code_of([&] { quantile_threshold(s, 1.5); }), errc::alpha_out_of_range);
}

TEST(ReliableSet, StrictInequality) {
  const std::vector<double> s{1, 2, 3, 4};
  EXPECT_EQ(reliable_set(s, 3.0), (std::vector<CandidateId>{3}));
  EXPECT_EQ(reliable_set(s, kNegInf), (std::vector<CandidateId>{0, 1, 2, 3}));
}

TEST(ReliableSet, RetentionIsMonotoneInAlpha) {
  Rng rng(21);
  std::vector<double> scores(301);
  for (auto& v : scores) v = rng.normal();
  std::vector<CandidateId> prev;
  for (int step = 1; step <= 100; ++step) {
    const double alpha = step / 100.0;
    const auto kept = reliable_set(scores, quantile_threshold(scores, alpha));
    EXPECT_TRUE(std::includes(kept.begin(), kept.end(), prev.begin(), prev.end()));
    prev = kept;
  }
  EXPECT_EQ(prev.size(), scores.size());
}

TEST(ReliableSet, ExchangeableRetentionNearAlpha) {
  // Monte-Carlo oracle over 50 independent pools of 500 candidates.
  for (double alpha : {0.55, 0.85}) {
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      Rng rng(seed);
      std::vector<double> scores(500);
      for (auto& v : scores) v = rng.normal();
      total += static_cast<double>(reliable_set(scores, quantile_threshold(scores, alpha)).size()) / 500.0;
    }
    EXPECT_NEAR(total / 50.0, alpha, 0.05);
  }
}

TEST(Calibrate, ThresholdIgnoresQueries) {
  auto pool = random_pool(30, 1);
  pool.query_similarity["a"] = std::vector<double>(30, 0.5);
  const auto before = calibrate(pool, {});
  pool.query_similarity["a"][3] = 0.99;
  pool.query_similarity["b"] = std::vector<double>(30, 0.1);
  EXPECT_EQ(calibrate(pool, {}), before);
}

TEST(Calibrate, PermutationEquivariance) {
  const std::size_t n = 40;
  const auto pool = random_pool(n, 2);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(99);
  rng.shuffle(std::span<std::size_t>(perm));
  ScoreMatrix permuted{SquareMatrix(n, kNaN), SquareMatrix(n, kNaN), {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      permuted.quality(perm[i], perm[j]) = pool.quality(i, j);
      permuted.similarity(perm[i], perm[j]) = pool.similarity(i, j);
    }
  }
  for (auto fn : {ConformityFn::NegKL, ConformityFn::Spearman}) {
    const ConformityConfig cfg{0.7, fn, 1e-9};
    const auto a = calibrate(pool, cfg);
    const auto b = calibrate(permuted, cfg);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(b.scores[perm[i]], a.scores[i], 1e-12);
    EXPECT_NEAR(a.threshold, b.threshold, 1e-12);
    std::vector<CandidateId> mapped;
    for (CandidateId c : a.reliable_set) mapped.push_back(perm[c]);
    std::sort(mapped.begin(), mapped.end());
    EXPECT_EQ(mapped, b.reliable_set);
  }
}

TEST(InitialAlternative, TopKWithIndexTieBreak) {
  EXPECT_EQ(build_initial_alternative(std::vector<double>{.9, .1, .5}, 2), (std::vector<CandidateId>{0, 2}));
  EXPECT_EQ(build_initial_alternative(std::vector<double>{.9, .1, .5}, 3), (std::vector<CandidateId>{0, 2, 1}));
  EXPECT_EQ(build_initial_alternative(std::vector<double>{.5, .5, .1}, 2), (std::vector<CandidateId>{0, 1}));
}

TEST(InitialAlternative, Errors) {
  ScoreMatrix pool = random_pool(3, 1);
  pool.query_similarity["q"] = {.1, .2, .3};
  EXPECT_EQ(code_of([&] { build_initial_alternative(pool, "q", 4); }), errc::k_too_large);
  EXPECT_EQ(code_of([&] { build_initial_alternative(pool, "missing", 1); }), errc::missing_query_vector);
  EXPECT_EQ(build_initial_alternative(pool, "q", 1), (std::vector<CandidateId>{2}));
}

TEST(Refine, OrderPreservingIntersection) {
  const std::vector<CandidateId> initial{0, 2, 5};
  EXPECT_EQ(refine(initial, std::vector<CandidateId>{2, 5, 9}), (std::vector<CandidateId>{2, 5}));
  EXPECT_TRUE(refine(initial, std::vector<CandidateId>{1, 3}).empty());
  const std::vector<CandidateId> shuffled{5, 0, 2};
  EXPECT_EQ(refine(shuffled, std::vector<CandidateId>{0, 1, 2, 3, 4, 5}), shuffled);
}

TEST(Fill, Examples) {
  std::vector<double> sims(10, 0.0);
  sims[7] = .8;
  sims[9] = .3;
  sims[2] = .1;
  const std::vector<CandidateId> reliable{2, 7, 9};
  EXPECT_EQ(fill(std::vector<CandidateId>{2}, reliable, sims, 2), (std::vector<CandidateId>{2, 7}));
  EXPECT_EQ(fill(std::vector<CandidateId>{2, 9}, reliable, sims, 2), (std::vector<CandidateId>{2, 9}));

  // Enumerate-and-sort oracle for the empty refined set.
  std::vector<CandidateId> oracle(reliable);
  std::sort(oracle.begin(), oracle.end(), [&](CandidateId a, CandidateId b) { return sims[a] > sims[b]; });
  EXPECT_EQ(fill(std::vector<CandidateId>{}, reliable, sims, 5), oracle);
}

TEST(Fill, SubsetProperties) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 10 + rng.below(40);
    std::vector<double> scores(n), sims(n);
    for (auto& v : scores) v = rng.normal();
    for (auto& v : sims) v = rng.uniform();
    const auto reliable = reliable_set(scores, quantile_threshold(scores, 0.2 + 0.8 * rng.uniform()));
    const std::size_t k = 1 + rng.below(n);
    const auto initial = build_initial_alternative(sims, k);
    const auto refined = refine(initial, reliable);
    const auto filled = fill(refined, reliable, sims, k);
    for (CandidateId c : refined) {
      EXPECT_NE(std::find(initial.begin(), initial.end(), c), initial.end());
      EXPECT_TRUE(std::binary_search(reliable.begin(), reliable.end(), c));
    }
    ASSERT_GE(filled.size(), refined.size());
    EXPECT_TRUE(std::equal(refined.begin(), refined.end(), filled.begin()));
    EXPECT_LE(filled.size(), k);
    for (std::size_t i = refined.size(); i < filled.size(); ++i) {
      EXPECT_TRUE(std::binary_search(reliable.begin(), reliable.end(), filled[i]));
    }
    std::vector<CandidateId> uni(reliable);
    uni.insert(uni.end(), refined.begin(), refined.end());
    std::sort(uni.begin(), uni.end());
    uni.erase(std::unique(uni.begin(), uni.end()), uni.end());
    EXPECT_EQ(filled.size(), std::min(k, uni.size()));
  }
}

TEST(Supplement, FallsBackToMostSimilarInitial) {
  const std::vector<CandidateId> initial{4, 1, 3};
  EXPECT_EQ(supplement_from_initial(std::vector<CandidateId>{}, initial), (std::vector<CandidateId>{4}));
  EXPECT_EQ(supplement_from_initial(std::vector<CandidateId>{3}, initial), (std::vector<CandidateId>{3}));
}

TEST(SelectForQuery, DefaultTargetIsK) {
  ScoreMatrix pool = random_pool(60, 8);
  Rng rng(3);
  std::vector<double> sims(60);
  for (auto& v : sims) v = rng.uniform();
  pool.query_similarity["q"] = sims;
  const auto report = calibrate(pool, {0.6, ConformityFn::NegKL, 1e-9});
  const auto set = select_for_query(pool, report, "q", 10);
  EXPECT_EQ(set.target_size, 10u);
  EXPECT_EQ(set.initial.size(), 10u);
  EXPECT_EQ(set.refined, refine(set.initial, report.reliable_set));
  EXPECT_EQ(set.filled.size(), 10u);
}

}  // namespace
}  // namespace rankforge::conformal
