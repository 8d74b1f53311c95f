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

// (K, k, t) covering designs: families of k-element blocks over {0..K-1}
// such that every t-subset lies inside at least one block. With t = 2 a
// design tells the sampler which k-length sub-sequences to draw so that
// every candidate pair is ranked together at least once.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "rankforge/error.hpp"
#include "rankforge/random.hpp"

namespace rankforge::covering {

struct DesignParams {
  std::size_t K = 0;
  std::size_t k = 0;
  std::size_t t = 0;

  void validate() const {
    if (!(1 <= t && t <= k && k <= K)) {
      fail(errc::invalid_params, "need 1 <= t <= k <= K, got (" + std::to_string(K) + "," + std::to_string(k) +
                                     "," + std::to_string(t) + ")");
    }
  }

  friend auto operator<=>(const DesignParams&, const DesignParams&) = default;
};

using Block = std::vector<std::size_t>;

struct CoveringDesign {
  DesignParams params;
  std::vector<Block> blocks;

  friend bool operator==(const CoveringDesign&, const CoveringDesign&) = default;
};

struct CoverageStats {
  double covered_fraction = 0.0;
  std::vector<std::uint32_t> multiplicity;  // indexed by colex rank of the t-subset
  double multiplicity_variance = 0.0;
  std::uint32_t min_multiplicity = 0;
};

inline constexpr std::size_t kDefaultProbeBudget = 5000;

namespace detail {

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    acc = acc * (n - r + i) / i;
    if (acc > std::numeric_limits<std::uint64_t>::max()) fail(errc::invalid_params, "binomial overflow");
  }
  return static_cast<std::uint64_t>(acc);
}

/// Binomial lookup table, table[n][r] for n <= K, r <= t.
class BinomialTable {
 public:
  BinomialTable(std::size_t max_n, std::size_t max_r) : cols_(max_r + 1), table_((max_n + 1) * (max_r + 1), 0) {
    for (std::size_t n = 0; n <= max_n; ++n) {
      for (std::size_t r = 0; r <= max_r; ++r) table_[n * cols_ + r] = binomial(n, r);
    }
  }
  std::uint64_t operator()(std::size_t n, std::size_t r) const { return table_[n * cols_ + r]; }

 private:
  std::size_t cols_;
  std::vector<std::uint64_t> table_;
};

/// Colex rank of a strictly increasing subset.
inline std::uint64_t colex_rank(std::span<const std::size_t> subset, const BinomialTable& binom) {
  std::uint64_t rank = 0;
  for (std::size_t i = 0; i < subset.size(); ++i) rank += binom(subset[i], i + 1);
  return rank;
}

/// Calls fn(subset) for every r-subset of `items` (items sorted ascending).
template <typename Fn>
void for_each_subset(std::span<const std::size_t> items, std::size_t r, Fn&& fn) {
  if (r > items.size()) return;
  std::vector<std::size_t> idx(r);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<std::size_t> subset(r);
  while (true) {
    for (std::size_t i = 0; i < r; ++i) subset[i] = items[idx[i]];
    fn(std::span<const std::size_t>(subset));
    std::size_t i = r;
    while (i > 0 && idx[i - 1] == items.size() - r + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
}

inline void validate_block(const Block& block, const DesignParams& params, const std::string& where) {
  if (block.size() != params.k) {
    fail(errc::malformed_block, where + ": block has " + std::to_string(block.size()) + " elements, expected " +
                                    std::to_string(params.k));
  }
  for (std::size_t i = 0; i < block.size(); ++i) {
    if (block[i] >= params.K) {
      fail(errc::malformed_block, where + ": element " + std::to_string(block[i]) + " out of range");
    }
    if (i > 0 && block[i] <= block[i - 1]) {
      fail(errc::malformed_block, where + ": elements must be distinct and ascending");
    }
  }
}

}  // namespace detail

/// Nested-ceiling lower bound on the number of blocks of any covering,
/// evaluated innermost-first in exact integer arithmetic.
inline std::uint64_t schonheim_bound(const DesignParams& params) {
  params.validate();
  unsigned __int128 value = 1;
  for (std::size_t i = params.t; i-- > 0;) {
    const unsigned __int128 num = value * (params.K - i);
    const unsigned __int128 den = params.k - i;
    value = (num + den - 1) / den;
    if (value > std::numeric_limits<std::uint64_t>::max()) fail(errc::invalid_params, "bound overflows 64 bits");
  }
  return static_cast<std::uint64_t>(value);
}

/// Exact enumeration of all C(K, t) subsets and how often each is covered.
inline CoverageStats verify_cover(const CoveringDesign& design) {
  const auto& p = design.params;
  p.validate();
  const detail::BinomialTable binom(p.K, p.t);
  const std::uint64_t total = binom(p.K, p.t);
  CoverageStats stats;
  stats.multiplicity.assign(total, 0);
  for (std::size_t b = 0; b < design.blocks.size(); ++b) {
    const Block& block = design.blocks[b];
    detail::validate_block(block, p, "block " + std::to_string(b));
    detail::for_each_subset(block, p.t, [&](std::span<const std::size_t> s) {
      ++stats.multiplicity[detail::colex_rank(s, binom)];
    });
  }
  std::uint64_t covered = 0;
  double sum = 0.0;
  for (auto m : stats.multiplicity) {
    covered += m > 0 ? 1 : 0;
    sum += m;
  }
  const double mean = sum / static_cast<double>(total);
  double var = 0.0;
  for (auto m : stats.multiplicity) var += (m - mean) * (m - mean);
  stats.multiplicity_variance = var / static_cast<double>(total);
  stats.covered_fraction = static_cast<double>(covered) / static_cast<double>(total);
  stats.min_multiplicity = *std::min_element(stats.multiplicity.begin(), stats.multiplicity.end());
  return stats;
}

namespace detail {

class GreedyState {
 public:
  explicit GreedyState(const DesignParams& p) : p_(p), binom_(p.K, p.t), covered_(binom_(p.K, p.t), 0) {
    uncovered_ = covered_.size();
  }

  std::uint64_t uncovered() const { return uncovered_; }

  std::size_t gain(const Block& block) const {
    std::size_t g = 0;
    for_each_subset(block, p_.t, [&](std::span<const std::size_t> s) { g += covered_[colex_rank(s, binom_)] ? 0 : 1; });
    return g;
  }

  /// Uncovered t-subsets formed by `element` with t-1 members of `partial`.
  std::size_t extension_gain(const Block& partial, std::size_t element) const {
    std::size_t g = 0;
    std::vector<std::size_t> subset(p_.t);
    for_each_subset(partial, p_.t - 1, [&](std::span<const std::size_t> s) {
      std::merge(s.begin(), s.end(), &element, &element + 1, subset.begin());
      g += covered_[colex_rank(subset, binom_)] ? 0 : 1;
    });
    return g;
  }

  void add(const Block& block) {
    for_each_subset(block, p_.t, [&](std::span<const std::size_t> s) {
      auto& c = covered_[colex_rank(s, binom_)];
      if (!c) {
        c = 1;
        --uncovered_;
      }
    });
  }

  bool covered_rank(std::uint64_t rank) const { return covered_[rank] != 0; }

  /// Colex ranks of all uncovered subsets, ascending.
  std::vector<std::uint64_t> uncovered_ranks() const {
    std::vector<std::uint64_t> out;
    out.reserve(uncovered_);
    for (std::uint64_t r = 0; r < covered_.size(); ++r) {
      if (!covered_[r]) out.push_back(r);
    }
    return out;
  }

  /// Decodes a colex rank back into its subset.
  Block unrank(std::uint64_t rank) const {
    Block subset(p_.t);
    std::size_t top = p_.K;
    for (std::size_t i = p_.t; i-- > 0;) {
      std::size_t c = i;
      while (c + 1 < top && binom_(c + 1, i + 1) <= rank) ++c;
      subset[i] = c;
      rank -= binom_(c, i + 1);
      top = c;
    }
    return subset;
  }

 private:
  DesignParams p_;
  BinomialTable binom_;
  std::vector<std::uint8_t> covered_;
  std::uint64_t uncovered_ = 0;
};

inline std::vector<Block> all_blocks(std::size_t K, std::size_t k) {
  std::vector<std::size_t> universe(K);
  std::iota(universe.begin(), universe.end(), std::size_t{0});
  std::vector<Block> out;
  for_each_subset(universe, k, [&](std::span<const std::size_t> s) { out.emplace_back(s.begin(), s.end()); });
  return out;
}

/// Grows an uncovered t-subset to k elements, each step adding the element
/// that closes the most uncovered t-subsets (random tie-break).
inline Block grow_probe(const GreedyState& state, const DesignParams& p, Block block, Rng& rng) {
  std::vector<std::size_t> best;
  std::vector<std::size_t> gain(p.K, 0);
  std::vector<std::uint8_t> in_block(p.K, 0);
  for (std::size_t b : block) in_block[b] = 1;
  const bool pairs = p.t == 2;
  // For pairs the gain of every outside element is maintained incrementally.
  auto pair_open = [&](std::size_t a, std::size_t b) {
    if (a > b) std::swap(a, b);
    return !state.covered_rank(static_cast<std::uint64_t>(b) * (b - 1) / 2 + a);
  };
  if (pairs) {
    for (std::size_t e = 0; e < p.K; ++e) {
      if (in_block[e]) continue;
      for (std::size_t b : block) gain[e] += pair_open(b, e) ? 1 : 0;
    }
  }
  while (block.size() < p.k) {
    std::size_t best_gain = 0;
    best.clear();
    for (std::size_t e = 0; e < p.K; ++e) {
      if (in_block[e]) continue;
      const std::size_t g = pairs ? gain[e] : state.extension_gain(block, e);
      if (best.empty() || g > best_gain) {
        best_gain = g;
        best.assign(1, e);
      } else if (g == best_gain) {
        best.push_back(e);
      }
    }
    const std::size_t pick = best[rng.below(best.size())];
    block.insert(std::upper_bound(block.begin(), block.end(), pick), pick);
    in_block[pick] = 1;
    if (pairs) {
      for (std::size_t e = 0; e < p.K; ++e) {
        if (!in_block[e]) gain[e] += pair_open(pick, e) ? 1 : 0;
      }
    }
  }
  return block;
}

}  // namespace detail

/// Greedy covering construction, deterministic in `seed`.
///
/// When C(K, k) fits in the probe budget every block is a candidate, and each
/// round takes the first block of maximal gain in a seed-shuffled order.
/// Otherwise each round evaluates `probe_budget` probes, each grown from a
/// uniformly drawn uncovered t-subset, and keeps the best (earliest on ties).
inline CoveringDesign greedy_cover(const DesignParams& params, std::uint64_t seed,
                                   std::size_t probe_budget = kDefaultProbeBudget) {
  params.validate();
  if (probe_budget == 0) fail(errc::invalid_params, "probe budget must be positive");
  CoveringDesign design{params, {}};
  detail::GreedyState state(params);
  Rng rng(seed);

  if (detail::binomial(params.K, params.k) <= probe_budget) {
    auto candidates = detail::all_blocks(params.K, params.k);
    rng.shuffle(std::span<Block>(candidates));
    while (state.uncovered() > 0) {
      std::size_t best = 0, best_gain = 0;
      for (std::size_t c = 0; c < candidates.size(); ++c) {
        const std::size_t g = state.gain(candidates[c]);
        if (g > best_gain) {
          best_gain = g;
          best = c;
        }
      }
      state.add(candidates[best]);
      design.blocks.push_back(candidates[best]);
    }
    return design;
  }

  while (state.uncovered() > 0) {
    const auto open = state.uncovered_ranks();
    Block best_block;
    std::size_t best_gain = 0;
    for (std::size_t probe = 0; probe < probe_budget; ++probe) {
      Block start = state.unrank(open[rng.below(open.size())]);
      Block block = detail::grow_probe(state, params, std::move(start), rng);
      const std::size_t g = state.gain(block);
      if (g > best_gain) {
        best_gain = g;
        best_block = std::move(block);
      }
    }
    state.add(best_block);
    design.blocks.push_back(std::move(best_block));
  }
  return design;
}

/// Applies the design to one permutation of `alt`'s positions: block B emits
/// alt[perm[b]] for b in B, in block order.
template <typename T>
std::vector<std::vector<T>> sample_subsequences(std::span<const T> alt, const CoveringDesign& design,
                                                std::span<const std::size_t> perm) {
  if (alt.size() != design.params.K) {
    fail(errc::size_mismatch, "alternative set has " + std::to_string(alt.size()) + " candidates, design expects " +
                                  std::to_string(design.params.K));
  }
  if (perm.size() != alt.size()) fail(errc::size_mismatch, "permutation length differs from alternative set");
  std::vector<std::vector<T>> out;
  out.reserve(design.blocks.size());
  for (const Block& block : design.blocks) {
    std::vector<T> seq;
    seq.reserve(block.size());
    for (std::size_t b : block) seq.push_back(alt[perm[b]]);
    out.push_back(std::move(seq));
  }
  return out;
}

template <typename T>
std::vector<std::vector<T>> sample_subsequences(std::span<const T> alt, const CoveringDesign& design,
                                                std::uint64_t seed) {
  std::vector<std::size_t> perm(alt.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(perm));
  return sample_subsequences(alt, design, std::span<const std::size_t>(perm));
}

/// Baseline sampler: shuffle, cut into floor(|alt| / k) disjoint runs of k,
/// repeat until n_subseq sequences exist.
template <typename T>
std::vector<std::vector<T>> random_subsequences(std::span<const T> alt, std::size_t n_subseq, std::size_t k,
                                                std::uint64_t seed) {
  if (k == 0 || k > alt.size()) {
    fail(errc::invalid_params, "k = " + std::to_string(k) + " for " + std::to_string(alt.size()) + " candidates");
  }
  std::vector<std::vector<T>> out;
  out.reserve(n_subseq);
  std::vector<T> shuffled(alt.begin(), alt.end());
  Rng rng(seed);
  const std::size_t runs = alt.size() / k;
  while (out.size() < n_subseq) {
    rng.shuffle(std::span<T>(shuffled));
    for (std::size_t r = 0; r < runs && out.size() < n_subseq; ++r) {
      out.emplace_back(shuffled.begin() + static_cast<std::ptrdiff_t>(r * k),
                       shuffled.begin() + static_cast<std::ptrdiff_t>((r + 1) * k));
    }
  }
  return out;
}

/// Co-occurrence of candidate pairs across emitted sequences, over the pairs
/// of `universe`. Pairs are ranked by universe position.
template <typename T>
CoverageStats pair_coverage(std::span<const std::vector<T>> sequences, std::span<const T> universe) {
  std::map<T, std::size_t> position;
  for (std::size_t i = 0; i < universe.size(); ++i) position.emplace(universe[i], i);
  const std::size_t n = universe.size();
  CoverageStats stats;
  const std::size_t total = n * (n - 1) / 2;
  stats.multiplicity.assign(total, 0);
  if (total == 0) {
    stats.covered_fraction = 1.0;
    return stats;
  }
  std::vector<std::size_t> pos;
  for (const auto& seq : sequences) {
    pos.clear();
    for (const T& c : seq) pos.push_back(position.at(c));
    std::sort(pos.begin(), pos.end());
    for (std::size_t a = 0; a < pos.size(); ++a) {
      for (std::size_t b = a + 1; b < pos.size(); ++b) {
        if (pos[a] == pos[b]) continue;
        ++stats.multiplicity[pos[b] * (pos[b] - 1) / 2 + pos[a]];
      }
    }
  }
  std::size_t covered = 0;
  double sum = 0.0;
  for (auto m : stats.multiplicity) {
    covered += m > 0 ? 1 : 0;
    sum += m;
  }
  const double mean = sum / static_cast<double>(total);
  double var = 0.0;
  for (auto m : stats.multiplicity) var += (m - mean) * (m - mean);
  stats.multiplicity_variance = var / static_cast<double>(total);
  stats.covered_fraction = static_cast<double>(covered) / static_cast<double>(total);
  stats.min_multiplicity = *std::min_element(stats.multiplicity.begin(), stats.multiplicity.end());
  return stats;
}

/// Greedy designs memoized by parameters. Not thread-safe.
class DesignCache {
 public:
  explicit DesignCache(std::uint64_t seed = 0, std::size_t probe_budget = kDefaultProbeBudget)
      : seed_(seed), probe_budget_(probe_budget) {}

  const CoveringDesign& get(const DesignParams& params) {
    auto it = designs_.find(params);
    if (it == designs_.end()) it = designs_.emplace(params, greedy_cover(params, seed_, probe_budget_)).first;
    return it->second;
  }

  void insert(CoveringDesign design) { designs_[design.params] = std::move(design); }

 private:
  std::uint64_t seed_;
  std::size_t probe_budget_;
  std::map<DesignParams, CoveringDesign> designs_;
};

/// Covering-design sampling for an alternative set of arbitrary size K'.
/// Below k the whole set is emitted as one sequence.
template <typename T>
std::vector<std::vector<T>> covering_subsequences(std::span<const T> alt, std::size_t k, std::size_t t,
                                                  DesignCache& cache, std::uint64_t seed) {
  if (alt.size() < k) return {std::vector<T>(alt.begin(), alt.end())};
  return sample_subsequences(alt, cache.get({alt.size(), k, t}), seed);
}

inline void write_design(std::ostream& out, const CoveringDesign& design) {
  out << design.params.K << ' ' << design.params.k << ' ' << design.params.t << '\n';
  for (const Block& block : design.blocks) {
    for (std::size_t i = 0; i < block.size(); ++i) out << (i ? " " : "") << block[i];
    out << '\n';
  }
}

inline CoveringDesign read_design(std::istream& in) {
  CoveringDesign design;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::vector<long long> values;
    std::string token;
    while (fields >> token) {
      std::size_t used = 0;
      long long v = 0;
      try {
        v = std::stoll(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size() || v < 0) {
        fail(errc::parse_error, "line " + std::to_string(line_no) + ": '" + token + "' is not a nonnegative integer");
      }
      values.push_back(v);
    }
    if (!have_header) {
      if (values.size() != 3) fail(errc::parse_error, "line " + std::to_string(line_no) + ": header must be 'K k t'");
      design.params = {static_cast<std::size_t>(values[0]), static_cast<std::size_t>(values[1]),
                       static_cast<std::size_t>(values[2])};
      try {
        design.params.validate();
      } catch (const error& e) {
        fail(errc::parse_error, "line " + std::to_string(line_no) + ": " + e.what());
      }
      have_header = true;
      continue;
    }
    Block block(values.begin(), values.end());
    std::sort(block.begin(), block.end());
    detail::validate_block(block, design.params, "line " + std::to_string(line_no));
    design.blocks.push_back(std::move(block));
  }
  if (!have_header) fail(errc::parse_error, "missing header line");
  return design;
}

inline void save_design(const std::string& path, const CoveringDesign& design) {
  std::ofstream out(path);
  if (!out) fail(errc::parse_error, "cannot open '" + path + "' for writing");
  write_design(out, design);
}

inline CoveringDesign load_design(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::parse_error, "cannot open '" + path + "'");
  return read_design(in);
}

}  // namespace rankforge::covering
