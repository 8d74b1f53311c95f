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

// File formats: score matrices (CSV / JSON), conformal reports, preference
// CSV, ranking JSON, audit and experiment reports.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankforge/aggregate.hpp"
#include "rankforge/audit.hpp"
#include "rankforge/conformal.hpp"
#include "rankforge/error.hpp"
#include "rankforge/harness.hpp"
#include "rankforge/score_matrix.hpp"

namespace rankforge::io {

using nlohmann::json;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_real(const std::string& token, std::size_t line_no) {
  if (token == "nan" || token == "NaN" || token == "NAN") return std::numeric_limits<double>::quiet_NaN();
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used == token.size()) return v;
  } catch (const std::exception&) {
  }
  fail(errc::parse_error, "line " + std::to_string(line_no) + ": '" + token + "' is not a number");
}

inline std::size_t parse_index(const std::string& token, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(token, &used);
    if (used == token.size() && v >= 0) return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
  }
  fail(errc::parse_error, "line " + std::to_string(line_no) + ": '" + token + "' is not a candidate id");
}

inline bool next_data_line(std::istream& in, std::string& line, std::size_t& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) return true;
  }
  return false;
}

inline double json_real(const json& v) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    fail(errc::parse_error, "'" + s + "' is not a number");
  }
  if (!v.is_number()) fail(errc::parse_error, "expected a number, got " + v.dump());
  return v.get<double>();
}

inline json json_real_out(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  return v;
}

inline SquareMatrix matrix_from_json(const json& rows, const char* name) {
  if (!rows.is_array()) fail(errc::parse_error, std::string(name) + " must be an array of rows");
  SquareMatrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != rows.size()) {
      fail(errc::parse_error, std::string(name) + " row " + std::to_string(i) + " has the wrong length");
    }
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = json_real(rows[i][j]);
  }
  return m;
}

}  // namespace detail

/// CSV matrix: a header line holding M, then M+1 rows of M+1 reals; the
/// diagonal is conventionally `nan`.
inline SquareMatrix read_matrix_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!detail::next_data_line(in, line, line_no)) fail(errc::parse_error, "empty matrix file");
  const std::size_t n = detail::parse_index(detail::trim(line), line_no) + 1;
  SquareMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!detail::next_data_line(in, line, line_no)) {
      fail(errc::parse_error, "expected " + std::to_string(n) + " rows, file ends after " + std::to_string(i));
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != n) {
      fail(errc::parse_error, "line " + std::to_string(line_no) + ": expected " + std::to_string(n) + " values, got " +
                                  std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < n; ++j) m(i, j) = detail::parse_real(fields[j], line_no);
  }
  if (detail::next_data_line(in, line, line_no)) {
    fail(errc::parse_error, "line " + std::to_string(line_no) + ": trailing data after matrix");
  }
  return m;
}

inline void write_matrix_csv(std::ostream& out, const SquareMatrix& m) {
  out << (m.size() == 0 ? 0 : m.size() - 1) << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (j) out << ',';
      if (std::isnan(m(i, j))) {
        out << "nan";
      } else {
        out << m(i, j);
      }
    }
    out << '\n';
  }
}

/// Query CSV: one row per query, `qid,s_0,...,s_M`.
inline std::map<QueryId, std::vector<double>> read_queries_csv(std::istream& in) {
  std::map<QueryId, std::vector<double>> out;
  std::string line;
  std::size_t line_no = 0;
  while (detail::next_data_line(in, line, line_no)) {
    const auto fields = detail::split(line, ',');
    if (fields.size() < 2 || fields[0].empty()) fail(errc::parse_error, "line " + std::to_string(line_no) + ": bad query row");
    std::vector<double> sims;
    for (std::size_t i = 1; i < fields.size(); ++i) sims.push_back(detail::parse_real(fields[i], line_no));
    if (!out.emplace(fields[0], std::move(sims)).second) {
      fail(errc::parse_error, "line " + std::to_string(line_no) + ": duplicate query '" + fields[0] + "'");
    }
  }
  return out;
}

/// `{quality: [[...]], similarity: [[...]], queries: {qid: [...]}}`.
inline ScoreMatrix score_matrix_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("quality") || !doc.contains("similarity")) {
    fail(errc::parse_error, "score document needs 'quality' and 'similarity'");
  }
  ScoreMatrix pool;
  pool.quality = detail::matrix_from_json(doc.at("quality"), "quality");
  pool.similarity = detail::matrix_from_json(doc.at("similarity"), "similarity");
  if (doc.contains("queries")) {
    for (const auto& [qid, sims] : doc.at("queries").items()) {
      std::vector<double> v;
      for (const auto& s : sims) v.push_back(detail::json_real(s));
      pool.query_similarity.emplace(qid, std::move(v));
    }
  }
  pool.validate();
  return pool;
}

inline json score_matrix_to_json(const ScoreMatrix& pool) {
  auto matrix = [](const SquareMatrix& m) {
    json rows = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < m.size(); ++j) row.push_back(detail::json_real_out(m(i, j)));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  json doc{{"quality", matrix(pool.quality)}, {"similarity", matrix(pool.similarity)}};
  json queries = json::object();
  for (const auto& [qid, sims] : pool.query_similarity) queries[qid] = sims;
  doc["queries"] = std::move(queries);
  return doc;
}

inline json conformal_report_to_json(const conformal::ConformalReport& r) {
  return json{{"scores", r.scores},
              {"threshold", detail::json_real_out(r.threshold)},
              {"alpha", r.alpha},
              {"reliable_set", r.reliable_set}};
}

inline conformal::ConformalReport conformal_report_from_json(const json& doc) {
  conformal::ConformalReport r;
  for (const auto& s : doc.at("scores")) r.scores.push_back(detail::json_real(s));
  r.threshold = detail::json_real(doc.at("threshold"));
  r.alpha = doc.at("alpha").get<double>();
  r.reliable_set = doc.at("reliable_set").get<std::vector<CandidateId>>();
  r.augmented_set_size = r.scores.size() + 1;
  return r;
}

inline json refined_set_to_json(const conformal::RefinedAlternativeSet& s) {
  return json{{"query", s.query},
              {"initial", s.initial},
              {"refined", s.refined},
              {"filled", s.filled},
              {"target_size", s.target_size}};
}

/// `winner,loser,weight,source`, optional header line.
inline std::vector<aggregate::Preference> read_preferences_csv(std::istream& in) {
  std::vector<aggregate::Preference> out;
  std::string line;
  std::size_t line_no = 0;
  while (detail::next_data_line(in, line, line_no)) {
    const auto fields = detail::split(line, ',');
    if (out.empty() && !fields.empty() && fields[0] == "winner") continue;
    if (fields.size() != 4) {
      fail(errc::parse_error, "line " + std::to_string(line_no) + ": expected winner,loser,weight,source");
    }
    aggregate::Preference p;
    p.winner = detail::parse_index(fields[0], line_no);
    p.loser = detail::parse_index(fields[1], line_no);
    p.weight = detail::parse_real(fields[2], line_no);
    try {
      std::size_t used = 0;
      p.source_id = std::stoll(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("source");
    } catch (const std::exception&) {
      fail(errc::parse_error, "line " + std::to_string(line_no) + ": bad source id '" + fields[3] + "'");
    }
    if (p.winner == p.loser) fail(errc::parse_error, "line " + std::to_string(line_no) + ": winner equals loser");
    if (!(p.weight > 0.0) || !std::isfinite(p.weight)) {
      fail(errc::parse_error, "line " + std::to_string(line_no) + ": weight must be positive");
    }
    out.push_back(p);
  }
  return out;
}

inline void write_preferences_csv(std::ostream& out, std::span<const aggregate::Preference> prefs) {
  out << "winner,loser,weight,source\n" << std::setprecision(17);
  for (const auto& p : prefs) out << p.winner << ',' << p.loser << ',' << p.weight << ',' << p.source_id << '\n';
}

inline json ranking_to_json(const aggregate::GlobalRanking& g) {
  return json{{"candidates", g.candidates}, {"scores", g.scores},       {"order", g.order},
              {"residual", g.residual},     {"disconnected", g.disconnected}, {"n_components", g.n_components}};
}

inline json audit_to_json(const stats::AuditRecord& a) {
  return json{{"n_candidates", a.n_candidates},
              {"n_significant", a.n_significant},
              {"fraction_significant", a.fraction_significant},
              {"mean_rho", a.mean_rho},
              {"skipped", a.skipped}};
}

inline void write_audit_csv(std::ostream& out, const stats::AuditRecord& a) {
  out << "candidate,rho,p_value,significant\n" << std::setprecision(17);
  for (const auto& d : a.details) out << d.candidate << ',' << d.rho << ',' << d.p_value << ',' << (d.significant ? 1 : 0) << '\n';
}

inline json world_config_to_json(const harness::SyntheticWorldConfig& c) {
  return json{{"M", c.M},
              {"n_queries", c.n_queries},
              {"latent_corr", c.latent_corr},
              {"corr_spread", c.corr_spread},
              {"noise_swaps", c.noise_swaps},
              {"K", c.K},
              {"k", c.k},
              {"alpha", c.alpha},
              {"seed", c.seed},
              {"baseline_budget", c.baseline_budget},
              {"fill", c.fill},
              {"conformity", c.conformity_fn == conformal::ConformityFn::NegKL ? "negkl" : "spearman"},
              {"design_seed", c.design_seed}};
}

inline json experiment_to_json(const harness::ExperimentReport& r) {
  json arms = json::object();
  for (const auto& s : r.arms) {
    arms[harness::arm_name(s.arm)] = json{{"n_queries", s.n_queries},
                                          {"mean_regret", s.mean_regret},
                                          {"top1_hit_rate", s.top1_hit_rate},
                                          {"mean_pair_coverage", s.mean_pair_coverage},
                                          {"mean_multiplicity_variance", s.mean_multiplicity_variance},
                                          {"mean_alt_size", s.mean_alt_size}};
  }
  return json{{"config", world_config_to_json(r.config)},
              {"reliable_set_size", r.reliable_set_size},
              {"threshold", detail::json_real_out(r.threshold)},
              {"arms", std::move(arms)}};
}

inline void write_experiment_csv(std::ostream& out, const harness::ExperimentReport& r) {
  out << "query,arm,alt_size,selected,selected_quality,oracle_best_quality,regret,hit,n_subsequences,pair_coverage,"
         "multiplicity_variance\n"
      << std::setprecision(17);
  for (const auto& o : r.outcomes) {
    out << o.query << ',' << harness::arm_name(o.arm) << ',' << o.alt_size << ',' << o.selected << ','
        << o.selected_quality << ',' << o.oracle_best_quality << ',' << o.regret << ',' << (o.hit ? 1 : 0) << ','
        << o.n_subsequences << ',' << o.pair_coverage << ',' << o.multiplicity_variance << '\n';
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::parse_error, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(errc::parse_error, path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(errc::parse_error, "cannot open '" + path + "' for writing");
  out << text;
}

}  // namespace rankforge::io
