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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rankforge/aggregate.hpp"
#include "rankforge/random.hpp"

namespace rankforge::aggregate {
namespace {

// Minimum-norm least-squares solution of the stacked comparison rows, via
// complete orthogonal decomposition. For a connected graph the minimum-norm
// solution is the sum-zero one.
std::vector<double> pinv_oracle(const PreferenceSystem& ps) {
  const auto n = static_cast<Eigen::Index>(ps.n_candidates());
  const auto m = static_cast<Eigen::Index>(ps.rows.size());
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd s(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& row = ps.rows[static_cast<std::size_t>(i)];
    const double w = std::sqrt(row.weight / (2.0 * static_cast<double>(ps.n_sources)));
    D(i, static_cast<Eigen::Index>(row.winner)) = w;
    D(i, static_cast<Eigen::Index>(row.loser)) = -w;
    s(i) = w;
  }
  const Eigen::VectorXd r = D.completeOrthogonalDecomposition().solve(s);
  return {r.data(), r.data() + n};
}

PreferenceSystem random_connected_system(Rng& rng, std::size_t n) {
  std::vector<Preference> prefs;
  // A random spanning path keeps the graph connected.
  std::vector<CandidateId> ids(n);
  std::iota(ids.begin(), ids.end(), CandidateId{0});
  rng.shuffle(std::span<CandidateId>(ids));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    prefs.push_back({ids[i], ids[i + 1], 0.5 + rng.uniform(), static_cast<std::int64_t>(rng.below(3))});
  }
  const std::size_t extra = rng.below(3 * n);
  for (std::size_t e = 0; e < extra; ++e) {
    const auto a = rng.below(n);
    auto b = rng.below(n);
    if (a == b) b = (b + 1) % n;
    prefs.push_back({a, b, 0.5 + rng.uniform(), static_cast<std::int64_t>(rng.below(3))});
  }
  return PreferenceSystem::from_preferences(prefs);
}

TEST(PreferencesFromRanking, AllOrderedPairs) {
  const std::vector<CandidateId> two{4, 9};
  EXPECT_EQ(preferences_from_ranking(two, 0), (std::vector<Preference>{{4, 9, 1.0, 0}}));
  const std::vector<CandidateId> three{7, 3, 5};
  EXPECT_EQ(preferences_from_ranking(three, 2),
            (std::vector<Preference>{{7, 3, 1.0, 2}, {7, 5, 1.0, 2}, {3, 5, 1.0, 2}}));
  const std::vector<CandidateId> five{0, 1, 2, 3, 4};
  EXPECT_EQ(preferences_from_ranking(five, 0).size(), 10u);
  const std::vector<CandidateId> dup{1, 2, 1};
  try {
    preferences_from_ranking(dup, 0);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::duplicate_candidate);
  }
}

TEST(SolveGlobal, SinglePair) {
  const std::vector<Preference> prefs{{3, 8, 1.0, 0}};
  const auto g = solve_global(PreferenceSystem::from_preferences(prefs));
  ASSERT_EQ(g.candidates, (std::vector<CandidateId>{3, 8}));
  EXPECT_NEAR(g.scores[0], 0.5, 1e-7);
  EXPECT_NEAR(g.scores[1], -0.5, 1e-7);
  EXPECT_EQ(g.order, (std::vector<CandidateId>{3, 8}));
  EXPECT_NEAR(g.residual, 0.0, 1e-12);
  EXPECT_FALSE(g.disconnected);
}

TEST(SolveGlobal, ContradictionTiesByIndex) {
  const std::vector<Preference> prefs{{5, 2, 1.0, 0}, {2, 5, 1.0, 1}};
  const auto g = solve_global(PreferenceSystem::from_preferences(prefs));
  EXPECT_NEAR(g.scores[0], 0.0, 1e-12);
  EXPECT_NEAR(g.scores[1], 0.0, 1e-12);
  EXPECT_EQ(g.order, (std::vector<CandidateId>{2, 5}));
}

TEST(SolveGlobal, TransitiveTripleMatchesOracle) {
  const std::vector<Preference> prefs{{0, 1, 1.0, 0}, {1, 2, 1.0, 0}, {0, 2, 1.0, 0}};
  const auto ps = PreferenceSystem::from_preferences(prefs);
  const auto g = solve_global(ps);
  const auto oracle = pinv_oracle(ps);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(g.scores[i], oracle[i], 1e-9);
  EXPECT_NEAR(g.scores[0], 2.0 / 3.0, 1e-7);
  EXPECT_EQ(g.order, (std::vector<CandidateId>{0, 1, 2}));
}

TEST(SolveGlobal, SmallInstancesMatchPseudoInverse) {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto ps = random_connected_system(rng, 2 + rng.below(5));
    const auto g = solve_global(ps);
    const auto oracle = pinv_oracle(ps);
    for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(g.scores[i], oracle[i], 1e-6);
    EXPECT_NEAR(std::accumulate(g.scores.begin(), g.scores.end(), 0.0), 0.0, 1e-9);
    EXPECT_NEAR(g.residual, objective(ps, oracle), 1e-9);
  }
}

TEST(SolveGlobal, ConjugateGradientPathMatchesDense) {
  Rng rng(8);
  const auto ps = random_connected_system(rng, 90);
  const auto g = solve_global(ps);
  const auto oracle = pinv_oracle(ps);
  for (std::size_t i = 0; i < oracle.size(); ++i) EXPECT_NEAR(g.scores[i], oracle[i], 1e-6);
}

TEST(SolveGlobal, PermutationEquivariance) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.below(12);
    const auto ps = random_connected_system(rng, n);
    std::vector<CandidateId> relabel(n);
    std::iota(relabel.begin(), relabel.end(), CandidateId{0});
    rng.shuffle(std::span<CandidateId>(relabel));
    auto prefs = ps.to_preferences();
    for (auto& p : prefs) {
      p.winner = relabel[p.winner];
      p.loser = relabel[p.loser];
    }
    const auto a = solve_global(ps);
    const auto b = solve_global(PreferenceSystem::from_preferences(prefs));
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(b.scores[relabel[i]], a.scores[i], 1e-9);
  }
}

TEST(SolveGlobal, NoiselessTotalOrderIsRecovered) {
  // Every pair observed equally often: r_i is proportional to wins minus
  // losses, so the order is exact.
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(19);
    std::vector<CandidateId> truth(n);
    std::iota(truth.begin(), truth.end(), CandidateId{0});
    rng.shuffle(std::span<CandidateId>(truth));
    std::vector<Preference> prefs;
    const std::size_t copies = 1 + rng.below(3);
    for (std::size_t c = 0; c < copies; ++c) {
      const auto rows = preferences_from_ranking(truth, static_cast<std::int64_t>(c));
      prefs.insert(prefs.end(), rows.begin(), rows.end());
    }
    EXPECT_EQ(solve_global(PreferenceSystem::from_preferences(prefs)).order, truth);
  }
}

TEST(SolveGlobal, UnevenMultiplicityCanReorderConsistentRows) {
  // Every row agrees with 0 > 1 > 2 > 3 and every pair is seen, but with
  // uneven multiplicities. Natural multiplicity weighting lifts 1 above 0.
  const std::vector<std::pair<std::pair<CandidateId, CandidateId>, int>> counts{
      {{0, 1}, 1}, {{0, 2}, 1}, {{0, 3}, 4}, {{1, 2}, 5}, {{1, 3}, 1}, {{2, 3}, 4}};
  std::vector<Preference> prefs;
  for (const auto& [pair, c] : counts) {
    for (int i = 0; i < c; ++i) prefs.push_back({pair.first, pair.second, 1.0, 0});
  }
  const auto ps = PreferenceSystem::from_preferences(prefs);
  const auto g = solve_global(ps);
  const auto oracle = pinv_oracle(ps);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(g.scores[i], oracle[i], 1e-9);
  EXPECT_EQ(g.order, (std::vector<CandidateId>{1, 0, 2, 3}));
}

TEST(SolveGlobal, DuplicatingARowNeverDemotesItsWinner) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto ps = random_connected_system(rng, 3 + rng.below(8));
    auto prefs = ps.to_preferences();
    const auto row = prefs[rng.below(prefs.size())];
    const auto before = solve_global(ps);
    prefs.push_back(row);
    const auto after = solve_global(PreferenceSystem::from_preferences(prefs));
    auto pos = [](const GlobalRanking& g, CandidateId c) {
      return std::find(g.order.begin(), g.order.end(), c) - g.order.begin();
    };
    auto gap = [&](const GlobalRanking& g) {
      auto score = [&](CandidateId c) {
        return g.scores[std::lower_bound(g.candidates.begin(), g.candidates.end(), c) - g.candidates.begin()];
      };
      return score(row.winner) - score(row.loser);
    };
    // The extra row pulls the fitted gap toward its target of 1.
    const double lo = std::min(gap(before), 1.0) - 1e-9;
    const double hi = std::max(gap(before), 1.0) + 1e-9;
    EXPECT_GE(gap(after), lo);
    EXPECT_LE(gap(after), hi);
    if (gap(before) > 1e-9) {
      EXPECT_LT(pos(after, row.winner), pos(after, row.loser));
    }
  }
}

TEST(SolveGlobal, DisconnectedGraphIsFlagged) {
  const std::vector<Preference> prefs{{4, 1, 1.0, 0}, {0, 6, 1.0, 0}, {6, 9, 1.0, 0}};
  const auto g = solve_global(PreferenceSystem::from_preferences(prefs));
  EXPECT_TRUE(g.disconnected);
  EXPECT_EQ(g.n_components, 2u);
  // Component {0, 6, 9} holds the smallest id, so it comes first.
  EXPECT_EQ(g.order, (std::vector<CandidateId>{0, 6, 9, 4, 1}));
  EXPECT_NEAR(std::accumulate(g.scores.begin(), g.scores.end(), 0.0), 0.0, 1e-9);
}

TEST(SolveGlobal, Errors) {
  PreferenceSystem empty;
  try {
    solve_global(empty);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::empty_system);
  }
  PreferenceSystem self{{0, 1}, {{0, 0, 1.0, 0}}, 1};
  EXPECT_THROW(solve_global(self), error);
  PreferenceSystem negative{{0, 1}, {{0, 1, -1.0, 0}}, 1};
  EXPECT_THROW(solve_global(negative), error);
}

TEST(Rankers, OutputsArePermutations) {
  const std::vector<double> quality{0.1, 0.9, 0.5, 0.7, 0.3};
  const std::vector<double> sims{0.5, 0.4, 0.3, 0.2, 0.1};
  const RankContext ctx{quality, sims};
  const std::vector<CandidateId> cands{0, 2, 3, 4};
  EXPECT_EQ(OracleRanker{}.rank(cands, ctx), (RankedSubsequence{3, 2, 4, 0}));
  EXPECT_EQ(SimilarityRanker{}.rank(cands, ctx), (RankedSubsequence{0, 2, 3, 4}));
  NoisyOracleRanker clean(0, 1);
  EXPECT_EQ(clean.rank(cands, ctx), OracleRanker{}.rank(cands, ctx));
  NoisyOracleRanker noisy(3, 1);
  for (int i = 0; i < 50; ++i) {
    auto r = noisy.rank(cands, ctx);
    std::sort(r.begin(), r.end());
    EXPECT_EQ(r, cands);
  }
}

TEST(Pipeline, OracleWithCoveringRecoversTrueOrder) {
  // The complete design sees every pair equally often.
  covering::DesignCache cache;
  cache.insert({{10, 5, 2}, covering::detail::all_blocks(10, 5)});
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> quality(40);
    for (auto& q : quality) q = rng.uniform();
    std::vector<CandidateId> alt(40);
    std::iota(alt.begin(), alt.end(), CandidateId{0});
    rng.shuffle(std::span<CandidateId>(alt));
    alt.resize(10);
    OracleRanker oracle;
    const auto result =
        aggregate_pipeline(alt, CoveringSampling{5, 2, &cache}, oracle, RankContext{quality, quality}, 100 + trial);
    const auto& design = cache.get({10, 5, 2});
    EXPECT_EQ(covering::verify_cover(design).covered_fraction, 1.0);
    EXPECT_EQ(result.ranking.order, oracle.rank(alt, RankContext{quality, quality}));
  }
}

TEST(Pipeline, TwoCandidates) {
  const std::vector<double> quality{0.2, 0.8};
  const std::vector<CandidateId> alt{0, 1};
  OracleRanker oracle;
  for (const SamplingSpec& spec : {SamplingSpec(CoveringSampling{}), SamplingSpec(RandomSampling{})}) {
    const auto r = aggregate_pipeline(alt, spec, oracle, RankContext{quality, quality}, 1);
    EXPECT_EQ(r.ranking.top(), 1u);
    EXPECT_EQ(r.sequences.size(), 1u);
  }
}

TEST(Pipeline, ZeroNoiseEqualsOracle) {
  Rng rng(77);
  std::vector<double> quality(30);
  for (auto& q : quality) q = rng.uniform();
  std::vector<CandidateId> alt(30);
  std::iota(alt.begin(), alt.end(), CandidateId{0});
  const RankContext ctx{quality, quality};
  OracleRanker oracle;
  NoisyOracleRanker noisy(0, 123);
  const RandomSampling spec{20, 5};
  EXPECT_EQ(aggregate_pipeline(alt, spec, oracle, ctx, 9).ranking.order,
            aggregate_pipeline(alt, spec, noisy, ctx, 9).ranking.order);
}

}  // namespace
}  // namespace rankforge::aggregate
