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

// Synthetic worlds and the two-arm selection experiment.
//
// A world is a Gaussian copula: for prompt i and target j a pair of standard
// normals with correlation rho_i is drawn, and quality / similarity are their
// normal CDFs. rho_i = tanh(atanh(latent_corr) + corr_spread * xi_i) gives
// every candidate its own reliability; corr_spread = 0 makes all pairs
// exchangeable with a common correlation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "rankforge/aggregate.hpp"
#include "rankforge/conformal.hpp"
#include "rankforge/covering.hpp"
#include "rankforge/error.hpp"
#include "rankforge/random.hpp"
#include "rankforge/score_matrix.hpp"
#include "rankforge/stats.hpp"

namespace rankforge::harness {

struct SyntheticWorldConfig {
  std::size_t M = 500;  // pool holds M + 1 candidates
  std::size_t n_queries = 200;
  double latent_corr = 0.05;
  double corr_spread = 0.2;
  std::size_t noise_swaps = 3;
  std::size_t K = 50;
  std::size_t k = 5;
  double alpha = 0.85;
  std::uint64_t seed = 0;

  // Experiment knobs.
  std::size_t baseline_budget = 50;
  bool fill = true;
  conformal::ConformityFn conformity_fn = conformal::ConformityFn::NegKL;
  std::uint64_t design_seed = 0;

  void validate() const {
    auto bad = [](const std::string& what) { fail(errc::invalid_config, what); };
    if (M < 2) bad("M must be at least 2");
    if (K < 1 || K > M + 1) bad("K must lie in [1, M+1]");
    if (k < 2 || k > K) bad("k must lie in [2, K]");
    if (!(alpha > 0.0 && alpha <= 1.0)) bad("alpha must lie in (0, 1]");
    if (!(latent_corr >= -1.0 && latent_corr <= 1.0)) bad("latent_corr must lie in [-1, 1]");
    if (!(corr_spread >= 0.0) || !std::isfinite(corr_spread)) bad("corr_spread must be a nonnegative number");
    if (baseline_budget < 1) bad("baseline_budget must be positive");
  }
};

struct World {
  ScoreMatrix pool;
  /// True quality of every candidate as a prompt for each query.
  std::map<QueryId, std::vector<double>> query_quality;
  /// Per-candidate latent correlation.
  std::vector<double> candidate_corr;
  std::vector<QueryId> queries;  // generation order
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline std::string query_name(std::size_t q, std::size_t n_queries) {
  const int width = static_cast<int>(std::to_string(n_queries == 0 ? 0 : n_queries - 1).size());
  char buf[32];
  std::snprintf(buf, sizeof buf, "q%0*zu", width, q);
  return buf;
}

namespace detail {

inline std::pair<double, double> correlated_pair(Rng& rng, double rho) {
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  const double w = rho * z1 + std::sqrt(std::max(0.0, 1.0 - rho * rho)) * z2;
  return {normal_cdf(z1), normal_cdf(w)};
}

}  // namespace detail

inline World generate_world(const SyntheticWorldConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.M + 1;
  World world;

  Rng corr_rng(derive_seed(cfg.seed, 0));
  world.candidate_corr.resize(n);
  for (auto& rho : world.candidate_corr) {
    const double xi = corr_rng.normal();
    if (std::abs(cfg.latent_corr) >= 1.0) {
      rho = cfg.latent_corr;
    } else {
      rho = std::tanh(std::atanh(cfg.latent_corr) + cfg.corr_spread * xi);
    }
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  world.pool.quality = SquareMatrix(n, nan);
  world.pool.similarity = SquareMatrix(n, nan);
  Rng pool_rng(derive_seed(cfg.seed, 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto [quality, similarity] = detail::correlated_pair(pool_rng, world.candidate_corr[i]);
      world.pool.quality(i, j) = quality;
      world.pool.similarity(i, j) = similarity;
    }
  }

  for (std::size_t q = 0; q < cfg.n_queries; ++q) {
    const QueryId id = query_name(q, cfg.n_queries);
    Rng query_rng(derive_seed(cfg.seed, 2, q));
    std::vector<double> quality(n), similarity(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::tie(quality[i], similarity[i]) = detail::correlated_pair(query_rng, world.candidate_corr[i]);
    }
    world.pool.query_similarity.emplace(id, std::move(similarity));
    world.query_quality.emplace(id, std::move(quality));
    world.queries.push_back(id);
  }
  return world;
}

/// Mean of the k best true qualities inside `alt`, for each k.
inline std::vector<double> top_k_oracle_quality(std::span<const CandidateId> alt, std::span<const double> quality,
                                                std::span<const std::size_t> ks) {
  std::vector<double> values;
  values.reserve(alt.size());
  for (CandidateId c : alt) {
    if (c >= quality.size()) fail(errc::index_out_of_range, "candidate " + std::to_string(c));
    values.push_back(quality[c]);
  }
  std::sort(values.begin(), values.end(), std::greater<>());
  std::vector<double> out;
  for (std::size_t k : ks) {
    if (k == 0 || k > values.size()) {
      fail(errc::k_too_large, "k = " + std::to_string(k) + " for " + std::to_string(values.size()) + " candidates");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) sum += values[i];
    out.push_back(sum / static_cast<double>(k));
  }
  return out;
}

enum class Arm { Baseline, RH };

inline const char* arm_name(Arm arm) { return arm == Arm::Baseline ? "baseline_random" : "rh_covering"; }

struct Arms {
  bool baseline = true;
  bool rh = true;
};

struct QueryOutcome {
  QueryId query;
  Arm arm = Arm::Baseline;
  std::size_t alt_size = 0;
  CandidateId selected = 0;
  double selected_quality = 0.0;
  double oracle_best_quality = 0.0;
  double regret = 0.0;
  bool hit = false;
  std::size_t n_subsequences = 0;
  double pair_coverage = 0.0;
  double multiplicity_variance = 0.0;
};

struct ArmSummary {
  Arm arm = Arm::Baseline;
  std::size_t n_queries = 0;
  double mean_regret = 0.0;
  double top1_hit_rate = 0.0;
  double mean_pair_coverage = 0.0;
  double mean_multiplicity_variance = 0.0;
  double mean_alt_size = 0.0;
};

struct ExperimentReport {
  SyntheticWorldConfig config;
  std::size_t reliable_set_size = 0;
  double threshold = 0.0;
  std::vector<QueryOutcome> outcomes;  // query order, baseline before RH
  std::vector<ArmSummary> arms;

  std::vector<double> regrets(Arm arm) const {
    std::vector<double> out;
    for (const auto& o : outcomes) {
      if (o.arm == arm) out.push_back(o.regret);
    }
    return out;
  }
};

namespace detail {

inline QueryOutcome run_arm(Arm arm, const QueryId& query, std::span<const CandidateId> alt,
                            const SyntheticWorldConfig& cfg, const aggregate::RankContext& ctx, double oracle_best,
                            covering::DesignCache& cache, std::uint64_t stream) {
  QueryOutcome out;
  out.query = query;
  out.arm = arm;
  out.alt_size = alt.size();
  out.oracle_best_quality = oracle_best;
  if (alt.size() == 1) {
    out.selected = alt.front();
    out.pair_coverage = 1.0;
  } else {
    aggregate::NoisyOracleRanker ranker(cfg.noise_swaps, derive_seed(stream, 1));
    aggregate::SamplingSpec sampling = arm == Arm::Baseline
                                           ? aggregate::SamplingSpec(aggregate::RandomSampling{cfg.baseline_budget, cfg.k})
                                           : aggregate::SamplingSpec(aggregate::CoveringSampling{cfg.k, 2, &cache});
    const auto result = aggregate::aggregate_pipeline(alt, sampling, ranker, ctx, derive_seed(stream, 2));
    out.selected = result.ranking.top();
    out.n_subsequences = result.sequences.size();
    const auto cov = covering::pair_coverage(std::span<const std::vector<CandidateId>>(result.sequences), alt);
    out.pair_coverage = cov.covered_fraction;
    out.multiplicity_variance = cov.multiplicity_variance;
  }
  out.selected_quality = ctx.quality[out.selected];
  out.regret = std::max(0.0, oracle_best - out.selected_quality);
  out.hit = out.selected_quality >= oracle_best;
  return out;
}

inline ArmSummary summarize(Arm arm, std::span<const QueryOutcome> outcomes) {
  ArmSummary s;
  s.arm = arm;
  for (const auto& o : outcomes) {
    if (o.arm != arm) continue;
    ++s.n_queries;
    s.mean_regret += o.regret;
    s.top1_hit_rate += o.hit ? 1.0 : 0.0;
    s.mean_pair_coverage += o.pair_coverage;
    s.mean_multiplicity_variance += o.multiplicity_variance;
    s.mean_alt_size += static_cast<double>(o.alt_size);
  }
  if (s.n_queries > 0) {
    const auto n = static_cast<double>(s.n_queries);
    s.mean_regret /= n;
    s.top1_hit_rate /= n;
    s.mean_pair_coverage /= n;
    s.mean_multiplicity_variance /= n;
    s.mean_alt_size /= n;
  }
  return s;
}

}  // namespace detail

/// Per query: the baseline arm ranks the initial top-K set from random
/// sub-sequences; the RH arm ranks the conformally refined (and filled) set
/// from covering-design sub-sequences. Regret is measured against the best
/// true quality in the initial set plus the fill candidates, which is the
/// same reference for both arms.
inline ExperimentReport run_experiment(const SyntheticWorldConfig& cfg, Arms arms = {},
                                       covering::DesignCache* shared_cache = nullptr) {
  cfg.validate();
  const World world = generate_world(cfg);
  const conformal::ConformityConfig ccfg{cfg.alpha, cfg.conformity_fn, 1e-9};
  const auto report = conformal::calibrate(world.pool, ccfg);

  covering::DesignCache local_cache(cfg.design_seed);
  covering::DesignCache& cache = shared_cache ? *shared_cache : local_cache;

  ExperimentReport out;
  out.config = cfg;
  out.reliable_set_size = report.reliable_set.size();
  out.threshold = report.threshold;

  for (std::size_t q = 0; q < world.queries.size(); ++q) {
    const QueryId& query = world.queries[q];
    const auto& sims = world.pool.query_similarity.at(query);
    const auto& quality = world.query_quality.at(query);
    const aggregate::RankContext ctx{quality, sims};

    const auto initial = conformal::build_initial_alternative(sims, cfg.K);
    const auto refined = conformal::refine(initial, report.reliable_set);
    auto rh_alt = cfg.fill ? conformal::fill(refined, report.reliable_set, sims, cfg.K) : refined;
    rh_alt = conformal::supplement_from_initial(rh_alt, initial);

    // Reference set: the initial set plus every candidate fill could add.
    const auto fill_pool = conformal::fill(refined, report.reliable_set, sims, cfg.K);
    double oracle_best = -std::numeric_limits<double>::infinity();
    for (CandidateId c : initial) oracle_best = std::max(oracle_best, quality[c]);
    for (CandidateId c : fill_pool) oracle_best = std::max(oracle_best, quality[c]);

    if (arms.baseline) {
      out.outcomes.push_back(detail::run_arm(Arm::Baseline, query, initial, cfg, ctx, oracle_best, cache,
                                             derive_seed(cfg.seed, 10, q)));
    }
    if (arms.rh) {
      out.outcomes.push_back(
          detail::run_arm(Arm::RH, query, rh_alt, cfg, ctx, oracle_best, cache, derive_seed(cfg.seed, 20, q)));
    }
  }
  if (arms.baseline) out.arms.push_back(detail::summarize(Arm::Baseline, out.outcomes));
  if (arms.rh) out.arms.push_back(detail::summarize(Arm::RH, out.outcomes));
  return out;
}

struct SignTest {
  std::size_t wins = 0;    // RH strictly better
  std::size_t losses = 0;  // baseline strictly better
  std::size_t ties = 0;
  double p_value = 1.0;    // one-sided, H1: RH better
};

/// Paired one-sided sign test on per-query regrets; ties are dropped.
inline SignTest sign_test(std::span<const double> baseline_regret, std::span<const double> rh_regret) {
  if (baseline_regret.size() != rh_regret.size()) fail(errc::length_mismatch, "paired regret vectors");
  SignTest t;
  for (std::size_t i = 0; i < rh_regret.size(); ++i) {
    if (rh_regret[i] < baseline_regret[i]) {
      ++t.wins;
    } else if (rh_regret[i] > baseline_regret[i]) {
      ++t.losses;
    } else {
      ++t.ties;
    }
  }
  t.p_value = stats::sign_test_pvalue(t.wins, t.wins + t.losses);
  return t;
}

}  // namespace rankforge::harness
