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

// Global ranking from local rankings.
//
// Each ranked sub-sequence yields one (winner, loser) row per ordered pair.
// The global score vector r minimizes
//
//   sum_rows weight / (2 * n_sources) * (r[winner] - r[loser] - 1)^2
//
// subject to sum(r) = 0 on every connected component of the comparison graph.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "rankforge/covering.hpp"
#include "rankforge/error.hpp"
#include "rankforge/random.hpp"
#include "rankforge/score_matrix.hpp"

namespace rankforge::aggregate {

/// Best-first ordering produced by a local ranker.
using RankedSubsequence = std::vector<CandidateId>;

struct Preference {
  CandidateId winner = 0;
  CandidateId loser = 0;
  double weight = 1.0;
  std::int64_t source_id = 0;

  friend bool operator==(const Preference&, const Preference&) = default;
};

/// Rows over local indices 0..n-1; candidates[i] maps back to the pool.
struct PreferenceSystem {
  struct Row {
    std::size_t winner = 0;
    std::size_t loser = 0;
    double weight = 1.0;
    std::int64_t source_id = 0;
  };

  std::vector<CandidateId> candidates;
  std::vector<Row> rows;
  std::size_t n_sources = 0;

  std::size_t n_candidates() const noexcept { return candidates.size(); }

  /// Local indices follow ascending CandidateId; n_sources counts distinct
  /// source ids.
  static PreferenceSystem from_preferences(std::span<const Preference> prefs) {
    PreferenceSystem ps;
    std::set<CandidateId> ids;
    std::set<std::int64_t> sources;
    for (const auto& p : prefs) {
      ids.insert(p.winner);
      ids.insert(p.loser);
      sources.insert(p.source_id);
    }
    ps.candidates.assign(ids.begin(), ids.end());
    ps.n_sources = sources.size();
    auto local = [&](CandidateId c) {
      return static_cast<std::size_t>(std::lower_bound(ps.candidates.begin(), ps.candidates.end(), c) -
                                      ps.candidates.begin());
    };
    ps.rows.reserve(prefs.size());
    for (const auto& p : prefs) ps.rows.push_back({local(p.winner), local(p.loser), p.weight, p.source_id});
    return ps;
  }

  std::vector<Preference> to_preferences() const {
    std::vector<Preference> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back({candidates[r.winner], candidates[r.loser], r.weight, r.source_id});
    return out;
  }
};

struct GlobalRanking {
  std::vector<CandidateId> candidates;  // same order as PreferenceSystem::candidates
  std::vector<double> scores;           // scores[i] belongs to candidates[i]
  std::vector<CandidateId> order;       // best first
  double residual = 0.0;
  bool disconnected = false;
  std::size_t n_components = 0;

  CandidateId top() const { return order.front(); }
};

inline constexpr double kRidge = 1e-8;
inline constexpr std::size_t kDenseLimit = 64;

/// One row per ordered pair (a before b): C(len, 2) rows.
inline std::vector<Preference> preferences_from_ranking(std::span<const CandidateId> order, std::int64_t source_id) {
  std::vector<CandidateId> sorted(order.begin(), order.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    fail(errc::duplicate_candidate, "ranked sub-sequence repeats a candidate");
  }
  std::vector<Preference> rows;
  rows.reserve(order.size() * (order.size() - (order.empty() ? 0 : 1)) / 2);
  for (std::size_t a = 0; a < order.size(); ++a) {
    for (std::size_t b = a + 1; b < order.size(); ++b) rows.push_back({order[a], order[b], 1.0, source_id});
  }
  return rows;
}

namespace detail {

/// Dense symmetric positive-definite solve (Cholesky), row-major `a`.
inline std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) fail(errc::invalid_params, "normal equations not positive definite");
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / l;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= a[i * n + k] * b[k];
    b[i] = s / a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[k * n + i] * b[k];
    b[i] = s / a[i * n + i];
  }
  return b;
}

/// Conjugate gradient on a dense SPD matrix.
inline std::vector<double> conjugate_gradient(const std::vector<double>& a, const std::vector<double>& b,
                                              std::size_t n) {
  std::vector<double> x(n, 0.0), r = b, p = b, ap(n);
  double rr = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
  const double stop = 1e-28 * std::max(1.0, rr);
  for (std::size_t it = 0; it < 10 * n && rr > stop; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a[i * n + j] * p[j];
      ap[i] = s;
    }
    const double step = rr / std::inner_product(p.begin(), p.end(), ap.begin(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += step * p[i];
      r[i] -= step * ap[i];
    }
    const double rr_next = std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + (rr_next / rr) * p[i];
    rr = rr_next;
  }
  return x;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

inline double objective(const PreferenceSystem& ps, std::span<const double> r) {
  const double scale = 1.0 / (2.0 * static_cast<double>(std::max<std::size_t>(ps.n_sources, 1)));
  double total = 0.0;
  for (const auto& row : ps.rows) {
    const double d = r[row.winner] - r[row.loser] - 1.0;
    total += row.weight * scale * d * d;
  }
  return total;
}

inline GlobalRanking solve_global(const PreferenceSystem& ps) {
  const std::size_t n = ps.n_candidates();
  if (ps.rows.empty() || n == 0) fail(errc::empty_system, "no preference rows");
  for (const auto& row : ps.rows) {
    if (row.winner >= n || row.loser >= n) fail(errc::index_out_of_range, "preference row index");
    if (row.winner == row.loser) fail(errc::invalid_params, "preference row compares a candidate with itself");
    if (!(row.weight > 0.0) || !std::isfinite(row.weight)) fail(errc::invalid_params, "weights must be positive");
  }
  const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(ps.n_sources, 1));

  detail::DisjointSets sets(n);
  for (const auto& row : ps.rows) sets.unite(row.winner, row.loser);
  // Members of each component, ascending local index (= ascending id).
  std::vector<std::vector<std::size_t>> components;
  std::vector<std::size_t> component_of(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (component_of[root] == n) {
      component_of[root] = components.size();
      components.emplace_back();
    }
    component_of[i] = component_of[root];
    components[component_of[i]].push_back(i);
  }

  std::vector<double> r(n, 0.0);
  std::vector<std::size_t> slot(n);
  for (const auto& members : components) {
    const std::size_t m = members.size();
    if (m == 1) continue;
    for (std::size_t s = 0; s < m; ++s) slot[members[s]] = s;
    // L + J/m + ridge*I: the J/m term pins the constant direction, so the
    // solution of a connected Laplacian system is its sum-zero least-squares
    // solution.
    std::vector<double> a(m * m, 1.0 / static_cast<double>(m));
    for (std::size_t s = 0; s < m; ++s) a[s * m + s] += kRidge;
    std::vector<double> b(m, 0.0);
    for (const auto& row : ps.rows) {
      if (component_of[row.winner] != component_of[members.front()]) continue;
      const std::size_t w = slot[row.winner], l = slot[row.loser];
      const double c = row.weight * scale;
      a[w * m + w] += c;
      a[l * m + l] += c;
      a[w * m + l] -= c;
      a[l * m + w] -= c;
      b[w] += c;
      b[l] -= c;
    }
    auto solve = [&](std::vector<double> rhs) {
      return m < kDenseLimit ? detail::cholesky_solve(a, std::move(rhs), m) : detail::conjugate_gradient(a, rhs, m);
    };
    auto x = solve(b);
    // The ridge biases x by O(ridge); two refinement sweeps against the
    // unridged system remove it.
    for (int sweep = 0; sweep < 2; ++sweep) {
      std::vector<double> res(b);
      for (std::size_t i = 0; i < m; ++i) {
        double ax = -kRidge * x[i];
        for (std::size_t j = 0; j < m; ++j) ax += a[i * m + j] * x[j];
        res[i] -= ax;
      }
      const auto dx = solve(std::move(res));
      for (std::size_t i = 0; i < m; ++i) x[i] += dx[i];
    }
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(m);
    for (std::size_t s = 0; s < m; ++s) r[members[s]] = x[s] - mean;
  }

  GlobalRanking out;
  out.candidates = ps.candidates;
  out.scores = r;
  out.residual = objective(ps, r);
  out.n_components = components.size();
  out.disconnected = components.size() > 1;
  // Components are already ordered by their smallest member.
  for (const auto& members : components) {
    std::vector<std::size_t> local = members;
    std::stable_sort(local.begin(), local.end(), [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });
    for (std::size_t i : local) out.order.push_back(ps.candidates[i]);
  }
  return out;
}

/// Context handed to a local ranker: the query's true quality and
/// similarity for every pool candidate.
struct RankContext {
  std::span<const double> quality;
  std::span<const double> similarity;
};

template <typename R>
concept Ranker = requires(R& ranker, std::span<const CandidateId> candidates, const RankContext& ctx) {
  { ranker.rank(candidates, ctx) } -> std::convertible_to<RankedSubsequence>;
};

namespace detail {

inline RankedSubsequence sort_descending(std::span<const CandidateId> candidates, std::span<const double> key) {
  RankedSubsequence out(candidates.begin(), candidates.end());
  std::sort(out.begin(), out.end(), [&](CandidateId a, CandidateId b) {
    if (key[a] != key[b]) return key[a] > key[b];
    return a < b;
  });
  return out;
}

}  // namespace detail

/// Ranks by the query's true quality.
struct OracleRanker {
  RankedSubsequence rank(std::span<const CandidateId> candidates, const RankContext& ctx) const {
    return detail::sort_descending(candidates, ctx.quality);
  }
};

/// Oracle order corrupted by `n_swaps` adjacent transpositions at uniformly
/// drawn positions.
class NoisyOracleRanker {
 public:
  NoisyOracleRanker(std::size_t n_swaps, std::uint64_t seed) : n_swaps_(n_swaps), rng_(seed) {}

  RankedSubsequence rank(std::span<const CandidateId> candidates, const RankContext& ctx) {
    auto out = detail::sort_descending(candidates, ctx.quality);
    if (out.size() < 2) return out;
    for (std::size_t s = 0; s < n_swaps_; ++s) {
      const auto pos = static_cast<std::size_t>(rng_.below(out.size() - 1));
      std::swap(out[pos], out[pos + 1]);
    }
    return out;
  }

 private:
  std::size_t n_swaps_;
  Rng rng_;
};

/// Ranks by the query's similarity (the similarity-priority heuristic).
struct SimilarityRanker {
  RankedSubsequence rank(std::span<const CandidateId> candidates, const RankContext& ctx) const {
    return detail::sort_descending(candidates, ctx.similarity);
  }
};

struct CoveringSampling {
  std::size_t k = 5;
  std::size_t t = 2;
  covering::DesignCache* cache = nullptr;
};

struct RandomSampling {
  std::size_t n_subseq = 50;
  std::size_t k = 5;
};

using SamplingSpec = std::variant<CoveringSampling, RandomSampling>;

struct PipelineResult {
  GlobalRanking ranking;
  std::vector<std::vector<CandidateId>> sequences;
};

/// Sample, rank each sub-sequence locally, accumulate preferences, solve.
/// ranking.top() is the selected in-context example.
template <Ranker R>
PipelineResult aggregate_pipeline(std::span<const CandidateId> alt, const SamplingSpec& sampling, R& ranker,
                                  const RankContext& ctx, std::uint64_t seed) {
  if (alt.size() < 2) fail(errc::invalid_params, "aggregation needs at least 2 candidates");
  PipelineResult result;
  result.sequences = std::visit(
      [&](const auto& spec) -> std::vector<std::vector<CandidateId>> {
        using Spec = std::decay_t<decltype(spec)>;
        if (alt.size() < spec.k) return {std::vector<CandidateId>(alt.begin(), alt.end())};
        if constexpr (std::is_same_v<Spec, CoveringSampling>) {
          if (spec.cache == nullptr) {
            covering::DesignCache local;
            return covering::covering_subsequences(alt, spec.k, spec.t, local, seed);
          }
          return covering::covering_subsequences(alt, spec.k, spec.t, *spec.cache, seed);
        } else {
          return covering::random_subsequences(alt, spec.n_subseq, spec.k, seed);
        }
      },
      sampling);

  std::vector<Preference> prefs;
  for (std::size_t s = 0; s < result.sequences.size(); ++s) {
    const auto& seq = result.sequences[s];
    if (seq.size() < 2) continue;
    const RankedSubsequence ranked = ranker.rank(seq, ctx);
    auto rows = preferences_from_ranking(ranked, static_cast<std::int64_t>(s));
    prefs.insert(prefs.end(), rows.begin(), rows.end());
  }
  if (prefs.empty()) fail(errc::empty_system, "sampling produced no comparable sub-sequence");
  result.ranking = solve_global(PreferenceSystem::from_preferences(prefs));
  return result;
}

}  // namespace rankforge::aggregate
