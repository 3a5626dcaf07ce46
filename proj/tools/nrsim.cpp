/*
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// nrsim command-line front end.
//
//   nrsim [run flags]                 network campaign
//   nrsim rul --corpus c.csv [...]    RUL cost/advance evaluation
//   nrsim gen-corpus --out c.csv      synthetic RUL corpus

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nrsim/campaign.hpp"
#include "nrsim/error.hpp"
#include "nrsim/rul.hpp"

namespace {

struct run_flags {
  std::string config;
  std::string arch, n_ues, bandwidth_mhz, scs_khz, mod_order;
  std::string t_cn_ms, seed, replications, out_dir, figure, policy;
};

// A single value maps to the base key, a comma list to the sweep axis.
void route(nrsim::kv_config& kv, const std::string& value, const std::string& base_key, const std::string& sweep_key) {
  if (value.empty()) return;
  kv.set(value.find(',') == std::string::npos ? base_key : sweep_key, value);
}

int run_campaign_cmd(const run_flags& f) {
  auto kv = f.config.empty() ? nrsim::kv_config{} : nrsim::kv_config::load(f.config);
  route(kv, f.arch, "arch.id", "sweep.arch");
  route(kv, f.n_ues, "traffic.n_ues", "sweep.n_ues");
  route(kv, f.bandwidth_mhz, "radio.bandwidth_mhz", "sweep.bandwidth_mhz");
  route(kv, f.scs_khz, "radio.scs_khz", "sweep.scs_khz");
  route(kv, f.mod_order, "radio.mod_order", "sweep.mod_order");
  if (!f.t_cn_ms.empty()) kv.set("arch.t_cn_ms", f.t_cn_ms);
  if (!f.seed.empty()) kv.set("campaign.seed", f.seed);
  if (!f.replications.empty()) kv.set("traffic.replications", f.replications);
  if (!f.out_dir.empty()) kv.set("campaign.out_dir", f.out_dir);
  if (!f.figure.empty()) kv.set("campaign.figure", f.figure);
  if (!f.policy.empty()) kv.set("sched.policy", f.policy);

  const auto spec = nrsim::build_campaign(kv);
  const auto written = nrsim::run_and_write(spec, nrsim::worker_count_from_env(), std::cout);
  for (const auto& p : written) std::cout << "wrote " << p.string() << '\n';
  return 0;
}

struct rul_flags {
  std::string corpus, scores, out;
  int margin = 5;
  double c_fp = 0.2;
  std::uint64_t seed = 1;
  bool exclude_fault_sample = false;
};

std::vector<nrsim::rul::series> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw nrsim::config_error("cannot open corpus " + path);
  return nrsim::rul::read_corpus_csv(in);
}

int run_rul_cmd(const rul_flags& f) {
  namespace rul = nrsim::rul;
  const auto corpus = load_corpus(f.corpus);
  const auto split = rul::split_folds(static_cast<int>(corpus.size()), f.seed);
  const rul::cost_params params{f.c_fp, f.margin};
  rul::pipeline_options options;
  options.include_fault_sample = !f.exclude_fault_sample;
  rul::leakage_audit audit(split);

  nlohmann::ordered_json out;
  out["corpus"] = f.corpus;
  out["series"] = corpus.size();
  out["margin"] = f.margin;
  out["c_fp"] = f.c_fp;
  out["split_seed"] = f.seed;
  if (!f.scores.empty()) {
    std::ifstream in(f.scores);
    if (!in) throw nrsim::config_error("cannot open scores " + f.scores);
    const auto scores = rul::read_scores_csv(in, corpus);
    auto subset = [&](const std::vector<int>& idx, std::vector<std::vector<double>>& sc) {
      std::vector<rul::labeled_series> set;
      for (int i : idx) {
        set.push_back(rul::label_with_margin(corpus[static_cast<std::size_t>(i)], f.margin, options.include_fault_sample));
        sc.push_back(scores[static_cast<std::size_t>(i)]);
      }
      return set;
    };
    audit.touch_for_fit(split.threshold_validation, "score threshold");
    std::vector<std::vector<double>> val_scores, test_scores;
    const auto val = subset(split.threshold_validation, val_scores);
    const auto best = rul::optimize_threshold(val_scores, val, params);
    const auto test = subset(split.test, test_scores);
    out["scores"] = nlohmann::ordered_json::parse(rul::metrics_json(rul::evaluate(test_scores, test, best.threshold, params)));
  } else {
    out["feature_pipeline"] =
        nlohmann::ordered_json::parse(rul::metrics_json(rul::run_feature_pipeline(corpus, split, params, options, audit)));
  }
  out["baseline"] = nlohmann::ordered_json::parse(rul::metrics_json(rul::run_baseline(corpus, split, params, options, audit)));

  const std::string text = out.dump(2) + "\n";
  if (f.out.empty()) {
    std::cout << text;
  } else {
    nrsim::write_atomic(f.out, text);
    std::cout << "wrote " << f.out << '\n';
  }
  return 0;
}

struct gen_flags {
  std::string out;
  int n = 100;
  std::uint64_t seed = 1;
  nrsim::rul::synthetic_params params;
};

int run_gen_cmd(const gen_flags& f) {
  const auto corpus = nrsim::rul::gen_synthetic_corpus(f.n, f.params, f.seed);
  std::ostringstream text;
  nrsim::rul::write_corpus_csv(text, corpus);
  nrsim::write_atomic(f.out, text.str());
  std::cout << "wrote " << f.out << " (" << corpus.size() << " series)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nrsim: 5G NR RAN latency and RUL feasibility simulator"};
  app.require_subcommand(0, 1);

  run_flags rf;
  app.add_option("--config", rf.config, "key = value campaign file");
  app.add_option("--arch", rf.arch, "architecture preset 1-4, or a comma list to sweep");
  app.add_option("--n-ues", rf.n_ues, "number of UEs, or a comma list");
  app.add_option("--bandwidth-mhz", rf.bandwidth_mhz, "channel bandwidth in MHz, or a comma list");
  app.add_option("--scs-khz", rf.scs_khz, "subcarrier spacing 30/60/120, or a comma list");
  app.add_option("--mod-order", rf.mod_order, "modulation order 4/64/256, or a comma list");
  app.add_option("--t-cn-ms", rf.t_cn_ms, "core network delay in ms");
  app.add_option("--seed", rf.seed, "first replication seed");
  app.add_option("--replications", rf.replications, "replications per configuration");
  app.add_option("--out-dir", rf.out_dir, "output directory");
  app.add_option("--figure", rf.figure, "plot preset: fig2, fig3 or fig5");
  app.add_option("--policy", rf.policy, "data scheduling policy: fifo or rr");

  rul_flags uf;
  auto* rul_cmd = app.add_subcommand("rul", "evaluate RUL cost and advance on a corpus");
  rul_cmd->add_option("--corpus", uf.corpus, "corpus CSV")->required();
  rul_cmd->add_option("--scores", uf.scores, "per-sample score CSV; replaces the feature pipeline");
  rul_cmd->add_option("--margin", uf.margin, "margin m in samples")->check(CLI::NonNegativeNumber);
  rul_cmd->add_option("--c-fp", uf.c_fp, "false positive cost")->check(CLI::NonNegativeNumber);
  rul_cmd->add_option("--seed", uf.seed, "fold split seed");
  rul_cmd->add_flag("--exclude-fault-sample", uf.exclude_fault_sample, "score only pre-fault samples");
  rul_cmd->add_option("--out", uf.out, "metrics JSON path (stdout when omitted)");

  gen_flags gf;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "write a synthetic RUL corpus");
  gen_cmd->add_option("--out", gf.out, "corpus CSV path")->required();
  gen_cmd->add_option("--series", gf.n, "number of series")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gf.seed, "generator seed");
  gen_cmd->add_option("--length", gf.params.length, "samples per series");
  gen_cmd->add_option("--dt-ms", gf.params.dt_ms, "sample period in ms");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*rul_cmd) return run_rul_cmd(uf);
    if (*gen_cmd) return run_gen_cmd(gf);
    return run_campaign_cmd(rf);
  } catch (const nrsim::invariant_violation& e) {
    std::cerr << "nrsim: invariant violation: " << e.what() << '\n';
    return 2;
  } catch (const nrsim::config_error& e) {
    std::cerr << "nrsim: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "nrsim: " << e.what() << '\n';
    return 1;
  }
}
