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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "rankforge/error.hpp"

namespace rankforge {

/// Index of a training-pool element, 0..M.
using CandidateId = std::size_t;
/// Query samples live in their own namespace, keyed by name.
using QueryId = std::string;

/// Dense row-major square matrix.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t row, std::size_t col) { return data_[row * n_ + col]; }
  double operator()(std::size_t row, std::size_t col) const { return data_[row * n_ + col]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * n_, n_}; }

  // NaN diagonals compare equal to each other.
  friend bool operator==(const SquareMatrix& x, const SquareMatrix& y) {
    return x.n_ == y.n_ && std::equal(x.data_.begin(), x.data_.end(), y.data_.begin(), [](double a, double b) {
             return a == b || (std::isnan(a) && std::isnan(b));
           });
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Quality-as-prompt and similarity scores over a pool of M+1 candidates.
///
/// quality(i, j) is the quality obtained when candidate i prompts sample j;
/// similarity(i, j) is the similarity of sample j to prompt i. Diagonals are
/// never read. query_similarity[q][i] is the similarity of query q to
/// candidate i.
struct ScoreMatrix {
  SquareMatrix quality;
  SquareMatrix similarity;
  std::map<QueryId, std::vector<double>> query_similarity;

  std::size_t pool_size() const noexcept { return quality.size(); }

  /// Checks the structural invariants: equal square dimensions, finite
  /// off-diagonal entries, query vectors of length M+1.
  void validate() const {
    const std::size_t n = quality.size();
    if (similarity.size() != n) {
      fail(errc::size_mismatch, "quality is " + std::to_string(n) + "x" + std::to_string(n) +
                                    " but similarity is " + std::to_string(similarity.size()) + "x" +
                                    std::to_string(similarity.size()));
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        if (!std::isfinite(quality(i, j)) || !std::isfinite(similarity(i, j))) {
          fail(errc::non_finite, "entry [" + std::to_string(i) + "][" + std::to_string(j) + "]");
        }
      }
    }
    for (const auto& [qid, sims] : query_similarity) {
      if (sims.size() != n) {
        fail(errc::size_mismatch, "query '" + qid + "' has " + std::to_string(sims.size()) +
                                      " similarities, pool has " + std::to_string(n));
      }
      for (double s : sims) {
        if (!std::isfinite(s)) fail(errc::non_finite, "query '" + qid + "' similarity");
      }
    }
  }
};

}  // namespace rankforge
