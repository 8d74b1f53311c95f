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

#include <cstddef>
#include <vector>

#include "rankforge/conformal.hpp"
#include "rankforge/error.hpp"
#include "rankforge/score_matrix.hpp"
#include "rankforge/stats.hpp"

namespace rankforge::stats {

struct CandidateAudit {
  CandidateId candidate = 0;
  double rho = 0.0;
  double p_value = 1.0;
  bool significant = false;
};

/// How many pool candidates show a significant monotone association between
/// their quality-as-prompt and similarity profiles, and how strong it is on
/// average.
struct AuditRecord {
  std::size_t n_candidates = 0;  // candidates actually tested
  std::size_t n_significant = 0;
  double fraction_significant = 0.0;
  double mean_rho = 0.0;
  std::vector<CandidateId> skipped;  // constant quality or similarity profile
  std::vector<CandidateAudit> details;
};

inline AuditRecord motivation_audit(const ScoreMatrix& pool, double alpha_sig = 0.05) {
  if (pool.pool_size() < 4) fail(errc::invalid_params, "audit needs M >= 3");
  if (!(alpha_sig > 0.0 && alpha_sig < 1.0)) fail(errc::alpha_out_of_range, "significance level must lie in (0, 1)");
  AuditRecord record;
  double rho_sum = 0.0;
  for (CandidateId i = 0; i < pool.pool_size(); ++i) {
    const auto q = conformal::quality_vector(pool, i);
    const auto s = conformal::similarity_vector(pool, i);
    SpearmanResult r;
    try {
      r = spearman_test(q, s, SpearmanMethod::TApprox);
    } catch (const error& e) {
      if (e.code() != errc::constant_input) throw;
      record.skipped.push_back(i);
      continue;
    }
    const bool sig = r.p_value < alpha_sig;
    record.details.push_back({i, r.rho, r.p_value, sig});
    record.n_significant += sig ? 1 : 0;
    rho_sum += r.rho;
  }
  record.n_candidates = record.details.size();
  if (record.n_candidates > 0) {
    record.fraction_significant = static_cast<double>(record.n_significant) / static_cast<double>(record.n_candidates);
    record.mean_rho = rho_sum / static_cast<double>(record.n_candidates);
  }
  return record;
}

}  // namespace rankforge::stats
