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

// Declarative `key = value` configuration. Blank lines and lines starting
// with '#' are ignored.

#include <cstdint>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <string>

#include "rankforge/conformal.hpp"
#include "rankforge/error.hpp"
#include "rankforge/harness.hpp"

namespace rankforge::config {

using KeyValues = std::map<std::string, std::string>;

inline KeyValues parse_key_values(std::istream& in) {
  KeyValues out;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(errc::parse_error, "line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) fail(errc::parse_error, "line " + std::to_string(line_no) + ": empty key");
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

namespace detail {

inline std::uint64_t to_unsigned(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used == v.size() && v.find('-') == std::string::npos) return x;
  } catch (const std::exception&) {
  }
  fail(errc::invalid_config, key + " = '" + v + "' is not a nonnegative integer");
}

inline double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  fail(errc::invalid_config, key + " = '" + v + "' is not a number");
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(errc::invalid_config, key + " = '" + v + "' is not a boolean");
}

}  // namespace detail

inline conformal::ConformityFn parse_conformity(const std::string& v) {
  if (v == "negkl" || v == "neg_kl" || v == "NegKL") return conformal::ConformityFn::NegKL;
  if (v == "spearman" || v == "Spearman") return conformal::ConformityFn::Spearman;
  fail(errc::invalid_config, "conformity must be 'negkl' or 'spearman', got '" + v + "'");
}

/// Applies recognized keys; unknown keys are an error so typos surface.
inline void apply(harness::SyntheticWorldConfig& cfg, const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "M") cfg.M = detail::to_unsigned(key, value);
    else if (key == "n_queries") cfg.n_queries = detail::to_unsigned(key, value);
    else if (key == "latent_corr") cfg.latent_corr = detail::to_real(key, value);
    else if (key == "corr_spread") cfg.corr_spread = detail::to_real(key, value);
    else if (key == "noise_swaps") cfg.noise_swaps = detail::to_unsigned(key, value);
    else if (key == "K") cfg.K = detail::to_unsigned(key, value);
    else if (key == "k") cfg.k = detail::to_unsigned(key, value);
    else if (key == "alpha") cfg.alpha = detail::to_real(key, value);
    else if (key == "seed") cfg.seed = detail::to_unsigned(key, value);
    else if (key == "baseline_budget") cfg.baseline_budget = detail::to_unsigned(key, value);
    else if (key == "fill") cfg.fill = detail::to_bool(key, value);
    else if (key == "conformity") cfg.conformity_fn = parse_conformity(value);
    else if (key == "design_seed") cfg.design_seed = detail::to_unsigned(key, value);
    else fail(errc::invalid_config, "unknown key '" + key + "'");
  }
}

/// Seed fallback from RANKFORGE_SEED, if set.
inline std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("RANKFORGE_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  return detail::to_unsigned("RANKFORGE_SEED", v);
}

}  // namespace rankforge::config
