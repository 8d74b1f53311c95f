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

// rankforge command line.
//
//   rankforge select    conformal refinement from score files
//   rankforge cover     gen | verify | bound
//   rankforge aggregate global ranking from a preference CSV
//   rankforge audit     per-candidate Spearman significance audit
//   rankforge simulate  baseline vs covering/conformal experiment
//
// Exit codes: 0 success, 1 validation error, 2 internal error.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rankforge/config.hpp"
#include "rankforge/io.hpp"
#include "rankforge/rankforge.hpp"

namespace {

using namespace rankforge;
using nlohmann::json;

constexpr int kValidationError = 1;
constexpr int kInternalError = 2;

struct PoolSource {
  std::string scores_json;
  std::string quality_csv;
  std::string similarity_csv;
  std::string queries_csv;

  void add_options(CLI::App& cmd) {
    cmd.add_option("--scores", scores_json, "JSON document {quality, similarity, queries}");
    cmd.add_option("--quality", quality_csv, "quality matrix CSV");
    cmd.add_option("--similarity", similarity_csv, "similarity matrix CSV");
    cmd.add_option("--queries", queries_csv, "query similarity CSV (qid,s_0,...,s_M)");
  }

  bool given() const { return !scores_json.empty() || !quality_csv.empty(); }

  ScoreMatrix load() const {
    if (!scores_json.empty()) return io::score_matrix_from_json(io::read_json_file(scores_json));
    if (quality_csv.empty() || similarity_csv.empty()) {
      fail(errc::invalid_config, "pass --scores, or both --quality and --similarity");
    }
    auto open = [](const std::string& path) {
      std::ifstream in(path);
      if (!in) fail(errc::parse_error, "cannot open '" + path + "'");
      return in;
    };
    ScoreMatrix pool;
    {
      auto in = open(quality_csv);
      pool.quality = io::read_matrix_csv(in);
    }
    {
      auto in = open(similarity_csv);
      pool.similarity = io::read_matrix_csv(in);
    }
    if (!queries_csv.empty()) {
      auto in = open(queries_csv);
      pool.query_similarity = io::read_queries_csv(in);
    }
    pool.validate();
    return pool;
  }
};

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    io::write_text_file(path, text);
  }
}

/// Config file, then RANKFORGE_SEED if the file did not set a seed. Flags are
/// applied by the caller afterwards.
harness::SyntheticWorldConfig load_world_config(const std::string& path) {
  harness::SyntheticWorldConfig cfg;
  config::KeyValues kv;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) fail(errc::invalid_config, "cannot open config '" + path + "'");
    kv = config::parse_key_values(in);
  }
  if (!kv.contains("seed")) {
    if (auto s = config::env_seed()) cfg.seed = *s;
  }
  config::apply(cfg, kv);
  return cfg;
}

/// Command-line overrides for world parameters; only flags actually given
/// are applied.
struct WorldFlags {
  std::optional<std::size_t> M, n_queries, noise_swaps, K, k, baseline_budget;
  std::optional<double> latent_corr, corr_spread, alpha;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> conformity;
  bool no_fill = false;

  void add_options(CLI::App& cmd, bool experiment) {
    cmd.add_option("--M", M, "pool size minus one");
    cmd.add_option("--latent-corr", latent_corr, "planted latent correlation");
    cmd.add_option("--corr-spread", corr_spread, "per-candidate spread of the latent correlation (Fisher z)");
    cmd.add_option("--seed", seed, "global seed (fallback: RANKFORGE_SEED)");
    if (!experiment) return;
    cmd.add_option("--n-queries", n_queries, "number of queries");
    cmd.add_option("--noise-swaps", noise_swaps, "adjacent swaps per local ranking");
    cmd.add_option("--K", K, "alternative set size");
    cmd.add_option("--k", k, "sub-sequence length");
    cmd.add_option("--alpha", alpha, "conformal confidence level");
    cmd.add_option("--baseline-budget", baseline_budget, "random sub-sequences for the baseline arm");
    cmd.add_option("--conformity", conformity, "negkl | spearman");
    cmd.add_flag("--no-fill", no_fill, "do not top up the refined set");
  }

  void apply(harness::SyntheticWorldConfig& cfg) const {
    if (M) cfg.M = *M;
    if (n_queries) cfg.n_queries = *n_queries;
    if (noise_swaps) cfg.noise_swaps = *noise_swaps;
    if (K) cfg.K = *K;
    if (k) cfg.k = *k;
    if (baseline_budget) cfg.baseline_budget = *baseline_budget;
    if (latent_corr) cfg.latent_corr = *latent_corr;
    if (corr_spread) cfg.corr_spread = *corr_spread;
    if (alpha) cfg.alpha = *alpha;
    if (seed) cfg.seed = *seed;
    if (conformity) cfg.conformity_fn = config::parse_conformity(*conformity);
    if (no_fill) cfg.fill = false;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rankforge: conformal candidate filtering, covering-design sampling and global rank aggregation"};
  app.require_subcommand(1);

  // select
  auto* select = app.add_subcommand("select", "conformal refinement of a candidate pool");
  PoolSource select_src;
  select_src.add_options(*select);
  double select_alpha = 0.85;
  double select_epsilon = 1e-9;
  std::string select_conformity = "negkl";
  std::size_t select_K = 0;
  std::size_t select_target = 0;
  bool select_no_fill = false;
  std::string select_out;
  select->add_option("--alpha", select_alpha, "confidence level in (0, 1]");
  select->add_option("--epsilon", select_epsilon, "smoothing constant for NegKL");
  select->add_option("--conformity", select_conformity, "negkl | spearman");
  select->add_option("--K", select_K, "initial alternative set size (0: report only)");
  select->add_option("--target", select_target, "fill target size (default K)");
  select->add_flag("--no-fill", select_no_fill, "skip the fill step");
  select->add_option("--out", select_out, "output JSON (default stdout)");

  // cover
  auto* cover = app.add_subcommand("cover", "covering designs");
  cover->require_subcommand(1);
  std::size_t cK = 0, ck = 0, ct = 2;
  std::uint64_t cseed = 0;
  std::size_t cprobes = covering::kDefaultProbeBudget;
  std::string cout_path, cin_path;
  auto* gen = cover->add_subcommand("gen", "greedy covering design");
  gen->add_option("--K", cK, "universe size")->required();
  gen->add_option("--k", ck, "block size")->required();
  gen->add_option("--t", ct, "subset size to cover");
  gen->add_option("--seed", cseed, "construction seed");
  gen->add_option("--probes", cprobes, "probe budget per greedy round");
  gen->add_option("--out", cout_path, "design file (default stdout)");
  auto* verify = cover->add_subcommand("verify", "check a design file");
  verify->add_option("--in", cin_path, "design file")->required();
  auto* bound = cover->add_subcommand("bound", "Schonheim lower bound");
  bound->add_option("--K", cK, "universe size")->required();
  bound->add_option("--k", ck, "block size")->required();
  bound->add_option("--t", ct, "subset size")->required();

  // aggregate
  auto* agg = app.add_subcommand("aggregate", "least-squares global ranking");
  std::string prefs_path, agg_out;
  agg->add_option("--prefs", prefs_path, "winner,loser,weight,source CSV")->required();
  agg->add_option("--out", agg_out, "ranking JSON (default stdout)");

  // audit
  auto* audit = app.add_subcommand("audit", "Spearman significance audit of a pool");
  PoolSource audit_src;
  audit_src.add_options(*audit);
  bool audit_synthetic = false;
  std::string audit_config, audit_out, audit_detail;
  double alpha_sig = 0.05;
  WorldFlags audit_flags;
  audit->add_flag("--synthetic", audit_synthetic, "audit a generated world instead of score files");
  audit->add_option("--config", audit_config, "key = value world config");
  audit_flags.add_options(*audit, false);
  audit->add_option("--alpha-sig", alpha_sig, "significance level");
  audit->add_option("--out", audit_out, "summary JSON (default stdout)");
  audit->add_option("--detail", audit_detail, "per-candidate CSV");

  // simulate
  auto* sim = app.add_subcommand("simulate", "baseline vs RH selection experiment");
  std::string sim_config, sim_out, sim_detail, sim_arms = "both";
  WorldFlags sim_flags;
  sim->add_option("--config", sim_config, "key = value config file");
  sim_flags.add_options(*sim, true);
  sim->add_option("--arms", sim_arms, "both | baseline | rh");
  sim->add_option("--out", sim_out, "summary JSON (default stdout)");
  sim->add_option("--detail", sim_detail, "per-query CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kValidationError;
  }

  try {
    if (select->parsed()) {
      const ScoreMatrix pool = select_src.load();
      conformal::ConformityConfig cfg{select_alpha, config::parse_conformity(select_conformity), select_epsilon};
      const auto report = conformal::calibrate(pool, cfg);
      json doc = io::conformal_report_to_json(report);
      if (select_K > 0) {
        json queries = json::object();
        for (const auto& [qid, sims] : pool.query_similarity) {
          auto set = conformal::select_for_query(pool, report, qid, select_K, select_target);
          if (select_no_fill) set.filled = set.refined;
          queries[qid] = io::refined_set_to_json(set);
        }
        doc["queries"] = std::move(queries);
      }
      emit(select_out, doc.dump(2) + "\n");
    } else if (gen->parsed()) {
      const auto design = covering::greedy_cover({cK, ck, ct}, cseed, cprobes);
      std::ostringstream text;
      covering::write_design(text, design);
      emit(cout_path, text.str());
      std::cerr << design.blocks.size() << " blocks (Schonheim bound " << covering::schonheim_bound(design.params)
                << ")\n";
    } else if (verify->parsed()) {
      const auto design = covering::load_design(cin_path);
      const auto stats = covering::verify_cover(design);
      json doc{{"K", design.params.K},
               {"k", design.params.k},
               {"t", design.params.t},
               {"blocks", design.blocks.size()},
               {"schonheim_bound", covering::schonheim_bound(design.params)},
               {"covered_fraction", stats.covered_fraction},
               {"min_multiplicity", stats.min_multiplicity},
               {"multiplicity_variance", stats.multiplicity_variance}};
      std::cout << doc.dump(2) << "\n";
      return stats.covered_fraction == 1.0 ? 0 : kValidationError;
    } else if (bound->parsed()) {
      std::cout << covering::schonheim_bound({cK, ck, ct}) << "\n";
    } else if (agg->parsed()) {
      std::ifstream in(prefs_path);
      if (!in) fail(errc::parse_error, "cannot open '" + prefs_path + "'");
      const auto prefs = io::read_preferences_csv(in);
      const auto ranking = aggregate::solve_global(aggregate::PreferenceSystem::from_preferences(prefs));
      emit(agg_out, io::ranking_to_json(ranking).dump(2) + "\n");
    } else if (audit->parsed()) {
      ScoreMatrix pool;
      if (audit_synthetic) {
        auto cfg = load_world_config(audit_config);
        audit_flags.apply(cfg);
        cfg.n_queries = 0;
        pool = harness::generate_world(cfg).pool;
      } else {
        pool = audit_src.load();
      }
      const auto record = stats::motivation_audit(pool, alpha_sig);
      emit(audit_out, io::audit_to_json(record).dump(2) + "\n");
      if (!audit_detail.empty()) {
        std::ostringstream csv;
        io::write_audit_csv(csv, record);
        io::write_text_file(audit_detail, csv.str());
      }
    } else if (sim->parsed()) {
      auto cfg = load_world_config(sim_config);
      sim_flags.apply(cfg);
      harness::Arms arms;
      if (sim_arms == "baseline") {
        arms.rh = false;
      } else if (sim_arms == "rh") {
        arms.baseline = false;
      } else if (sim_arms != "both") {
        fail(errc::invalid_config, "--arms must be both, baseline or rh");
      }
      const auto report = harness::run_experiment(cfg, arms);
      json doc = io::experiment_to_json(report);
      if (arms.baseline && arms.rh) {
        const auto t = harness::sign_test(report.regrets(harness::Arm::Baseline), report.regrets(harness::Arm::RH));
        doc["sign_test"] = json{{"rh_wins", t.wins}, {"rh_losses", t.losses}, {"ties", t.ties}, {"p_value", t.p_value}};
      }
      emit(sim_out, doc.dump(2) + "\n");
      if (!sim_detail.empty()) {
        std::ostringstream csv;
        io::write_experiment_csv(csv, report);
        io::write_text_file(sim_detail, csv.str());
      }
    }
  } catch (const rankforge::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
  return 0;
}
