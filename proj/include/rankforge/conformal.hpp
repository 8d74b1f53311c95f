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

// Jackknife conformal filtering of a candidate pool.
//
// Every pool element gets a conformity score comparing how good it is as a
// prompt for the rest of the pool (quality) with how similar it is to the
// rest of the pool (similarity). The (1 - alpha) empirical quantile of those
// scores, with a -inf sentinel appended, is the reliability threshold; only
// candidates strictly above it are kept. The threshold never looks at a
// query.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rankforge/error.hpp"
#include "rankforge/score_matrix.hpp"
#include "rankforge/stats.hpp"

namespace rankforge::conformal {

enum class ConformityFn { NegKL, Spearman };

struct ConformityConfig {
  double alpha = 0.85;
  ConformityFn conformity_fn = ConformityFn::NegKL;
  double epsilon = 1e-9;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) fail(errc::alpha_out_of_range, "alpha must lie in (0, 1]");
    if (!(epsilon > 0.0 && epsilon <= 1e-3)) fail(errc::invalid_config, "epsilon must lie in (0, 1e-3]");
  }
};

struct ConformalReport {
  std::vector<double> scores;
  std::size_t augmented_set_size = 0;  // M + 2, counting the -inf sentinel
  double threshold = -std::numeric_limits<double>::infinity();
  double alpha = 0.0;
  std::vector<CandidateId> reliable_set;

  friend bool operator==(const ConformalReport&, const ConformalReport&) = default;
};

struct RefinedAlternativeSet {
  QueryId query;
  std::vector<CandidateId> initial;
  std::vector<CandidateId> refined;
  std::vector<CandidateId> filled;
  std::size_t target_size = 0;
};

namespace detail {

inline std::vector<double> off_diagonal_row(const SquareMatrix& m, CandidateId i, const char* which) {
  if (i >= m.size()) {
    fail(errc::index_out_of_range,
         std::string(which) + " row " + std::to_string(i) + " of a pool with " + std::to_string(m.size()));
  }
  std::vector<double> out;
  out.reserve(m.size() - 1);
  for (std::size_t j = 0; j < m.size(); ++j) {
    if (j == i) continue;
    const double v = m(i, j);
    if (!std::isfinite(v)) {
      fail(errc::non_finite, std::string(which) + " entry [" + std::to_string(i) + "][" + std::to_string(j) + "]");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

/// Row i of the quality matrix without its diagonal entry, ascending j.
inline std::vector<double> quality_vector(const ScoreMatrix& pool, CandidateId i) {
  return detail::off_diagonal_row(pool.quality, i, "quality");
}

inline std::vector<double> similarity_vector(const ScoreMatrix& pool, CandidateId i) {
  return detail::off_diagonal_row(pool.similarity, i, "similarity");
}

/// Higher is more conformal. NegKL returns -KL(P_quality || P_similarity),
/// Spearman returns rho(quality, similarity).
inline double conformity_score(std::span<const double> quality, std::span<const double> similarity,
                               const ConformityConfig& cfg) {
  if (quality.size() != similarity.size()) {
    fail(errc::length_mismatch, std::to_string(quality.size()) + " vs " + std::to_string(similarity.size()));
  }
  if (quality.size() < 2) fail(errc::length_mismatch, "conformity needs at least 2 aligned entries");
  switch (cfg.conformity_fn) {
    case ConformityFn::NegKL: {
      const auto p = stats::to_distribution(quality, cfg.epsilon);
      const auto q = stats::to_distribution(similarity, cfg.epsilon);
      return -stats::kl_divergence(p, q);
    }
    case ConformityFn::Spearman:
      return stats::detail::rank_correlation(quality, similarity, errc::degenerate_vector);
  }
  return 0.0;
}

/// One conformity score per pool candidate; fills `scores` and
/// `augmented_set_size` only.
inline ConformalReport jackknife_scores(const ScoreMatrix& pool, const ConformityConfig& cfg) {
  cfg.validate();
  const std::size_t n = pool.pool_size();
  if (n < 3 || pool.similarity.size() != n) {
    fail(errc::invalid_params, "jackknife needs M >= 2 and matching matrices");
  }
  ConformalReport report;
  report.alpha = cfg.alpha;
  report.augmented_set_size = n + 1;
  report.scores.resize(n);
  for (CandidateId i = 0; i < n; ++i) {
    try {
      report.scores[i] = conformity_score(quality_vector(pool, i), similarity_vector(pool, i), cfg);
    } catch (const error& e) {
      throw error(e.code(), "candidate " + std::to_string(i) + ": " + e.what());
    }
  }
  return report;
}

/// The ceil((1 - alpha)(M + 2))-th smallest element of scores ∪ {-inf}.
/// Index 0 (alpha = 1) yields -inf; an index past the end clamps to the max.
inline double quantile_threshold(std::span<const double> scores, double alpha) {
  if (scores.empty()) fail(errc::empty_scores, "no conformity scores");
  if (!(alpha > 0.0 && alpha <= 1.0)) fail(errc::alpha_out_of_range, "alpha = " + std::to_string(alpha));
  for (double s : scores) {
    if (!std::isfinite(s)) fail(errc::non_finite, "conformity score");
  }
  const std::size_t augmented = scores.size() + 1;
  // Guard against 0.6 * 5 = 3.0000000000000004 style representation error.
  const double raw = (1.0 - alpha) * static_cast<double>(augmented);
  auto index = static_cast<std::size_t>(std::max(0.0, std::ceil(raw - 1e-9)));
  if (index == 0) return -std::numeric_limits<double>::infinity();
  index = std::min(index, augmented);
  if (index == 1) return -std::numeric_limits<double>::infinity();
  std::vector<double> sorted(scores.begin(), scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(index - 2), sorted.end());
  return sorted[index - 2];
}

/// Candidates whose score strictly exceeds the threshold, ascending id.
inline std::vector<CandidateId> reliable_set(std::span<const double> scores, double threshold) {
  std::vector<CandidateId> out;
  for (CandidateId i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) fail(errc::non_finite, "score of candidate " + std::to_string(i));
    if (scores[i] > threshold) out.push_back(i);
  }
  return out;
}

/// Full calibration: jackknife scores, threshold, reliable set.
inline ConformalReport calibrate(const ScoreMatrix& pool, const ConformityConfig& cfg) {
  auto report = jackknife_scores(pool, cfg);
  report.threshold = quantile_threshold(report.scores, cfg.alpha);
  report.reliable_set = reliable_set(report.scores, report.threshold);
  return report;
}

/// Descending order of `values` restricted to `ids`, ties by ascending id.
inline void sort_by_descending(std::vector<CandidateId>& ids, std::span<const double> values) {
  std::sort(ids.begin(), ids.end(), [&](CandidateId a, CandidateId b) {
    if (values[a] != values[b]) return values[a] > values[b];
    return a < b;
  });
}

/// Top-K candidates by query similarity.
inline std::vector<CandidateId> build_initial_alternative(std::span<const double> query_similarity, std::size_t k) {
  if (k > query_similarity.size()) {
    fail(errc::k_too_large, "K = " + std::to_string(k) + " exceeds pool size " + std::to_string(query_similarity.size()));
  }
  std::vector<CandidateId> ids(query_similarity.size());
  std::iota(ids.begin(), ids.end(), CandidateId{0});
  auto cmp = [&](CandidateId a, CandidateId b) {
    if (query_similarity[a] != query_similarity[b]) return query_similarity[a] > query_similarity[b];
    return a < b;
  };
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), cmp);
  ids.resize(k);
  return ids;
}

inline const std::vector<double>& query_vector(const ScoreMatrix& pool, const QueryId& query) {
  const auto it = pool.query_similarity.find(query);
  if (it == pool.query_similarity.end()) fail(errc::missing_query_vector, "query '" + query + "'");
  return it->second;
}

inline std::vector<CandidateId> build_initial_alternative(const ScoreMatrix& pool, const QueryId& query, std::size_t k) {
  return build_initial_alternative(query_vector(pool, query), k);
}

/// Order-preserving intersection of `initial` with `reliable`.
inline std::vector<CandidateId> refine(std::span<const CandidateId> initial, std::span<const CandidateId> reliable) {
  std::vector<CandidateId> lookup(reliable.begin(), reliable.end());
  std::sort(lookup.begin(), lookup.end());
  std::vector<CandidateId> out;
  for (CandidateId c : initial) {
    if (std::binary_search(lookup.begin(), lookup.end(), c)) out.push_back(c);
  }
  return out;
}

/// Tops `refined` up to `target_size` with the most query-similar members of
/// the reliable set that it does not already contain.
inline std::vector<CandidateId> fill(std::span<const CandidateId> refined, std::span<const CandidateId> reliable,
                                     std::span<const double> query_similarity, std::size_t target_size) {
  std::vector<CandidateId> out(refined.begin(), refined.end());
  if (out.size() >= target_size) return out;
  std::vector<CandidateId> taken(refined.begin(), refined.end());
  std::sort(taken.begin(), taken.end());
  std::vector<CandidateId> pool;
  for (CandidateId c : reliable) {
    if (c >= query_similarity.size()) {
      fail(errc::index_out_of_range, "reliable candidate " + std::to_string(c) + " has no query similarity");
    }
    if (!std::binary_search(taken.begin(), taken.end(), c)) pool.push_back(c);
  }
  sort_by_descending(pool, query_similarity);
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  for (CandidateId c : pool) {
    if (out.size() >= target_size) break;
    out.push_back(c);
  }
  return out;
}

inline std::vector<CandidateId> fill(std::span<const CandidateId> refined, std::span<const CandidateId> reliable,
                                     const ScoreMatrix& pool, const QueryId& query, std::size_t target_size) {
  return fill(refined, reliable, query_vector(pool, query), target_size);
}

/// Keeps a refined set non-empty by falling back to the most similar member
/// of the initial alternative set.
inline std::vector<CandidateId> supplement_from_initial(std::span<const CandidateId> refined,
                                                        std::span<const CandidateId> initial) {
  std::vector<CandidateId> out(refined.begin(), refined.end());
  if (out.empty() && !initial.empty()) out.push_back(initial.front());
  return out;
}

/// Initial set, refinement and fill for one query. target_size 0 means K.
inline RefinedAlternativeSet select_for_query(const ScoreMatrix& pool, const ConformalReport& report,
                                              const QueryId& query, std::size_t k, std::size_t target_size = 0) {
  RefinedAlternativeSet out;
  out.query = query;
  out.target_size = target_size == 0 ? k : target_size;
  const auto& sims = query_vector(pool, query);
  out.initial = build_initial_alternative(sims, k);
  out.refined = refine(out.initial, report.reliable_set);
  out.filled = fill(out.refined, report.reliable_set, sims, out.target_size);
  return out;
}

}  // namespace rankforge::conformal
