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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failing criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nrsim/campaign.hpp"
#include "nrsim/channel.hpp"
#include "nrsim/e2e.hpp"
#include "nrsim/phy.hpp"
#include "nrsim/rul.hpp"
#include "nrsim/scheduler.hpp"
#include "nrsim/sim.hpp"

using namespace nrsim;

namespace {

constexpr int replications = 20;

struct outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

sim_report run(double bw_mhz, int scs, int m, int n, double t_cn = 0.0) {
  sim_config c;
  c.radio.bandwidth_hz = bw_mhz * 1e6;
  c.radio.num = numerology::from_scs_khz(scs);
  c.radio.mod_order = m;
  c.t_cn_ms = t_cn;
  c.traffic.n_ues = n;
  return run_campaign(c, consecutive_seeds(1, replications), worker_count_from_env());
}

outcome criterion1() {
  outcome o;
  o.require(n_rb(5e6, numerology::from_scs_khz(30)) == 13, "n_rb(5 MHz, 30 kHz) != 13");
  o.require(n_rb(100e6, numerology::from_scs_khz(120)) == 69, "n_rb(100 MHz, 120 kHz) != 69");
  o.require(tb_bytes_per_rb(256, 4) == 48, "tb_bytes_per_rb(256, 4) != 48");
  o.require(rbs_for_pdu(104, 256) == 3, "rbs_for_pdu(104, 256) != 3");
  o.require(rbs_for_pdu(73, 256) == 2, "rbs_for_pdu(73, 256) != 2");
  if (o.pass) o.detail = "13 / 69 RBs, 48 B per RB, 3 and 2 RBs per PDU";
  return o;
}

outcome criterion2() {
  outcome o;
  o.require(control_capacity(13) == 6, "control_capacity(13) != 6");
  o.require(control_capacity(69) == 34, "control_capacity(69) != 34");
  radio_config rc;
  const int rbs = rbs_for_pdu(pdu_bytes(rc.ul_payload_bytes, rc), rc.mod_order);
  auto granted = [&](int n) {
    mac_scheduler s(n, 13);
    for (int ue = 0; ue < n; ++ue) s.push_uplink({ue, ue, 0, rbs});
    const int periods = (n + s.capacity() - 1) / s.capacity();
    for (int k = 0; k < periods; ++k) s.admit_control(k);
    return static_cast<int>(s.schedule_uplink(periods - 1).size());
  };
  const int g13 = granted(13), g14 = granted(14);
  o.require(g13 == 13, "13 uplink PDUs -> " + std::to_string(g13) + " grants");
  o.require(g14 == 13, "14 uplink PDUs -> " + std::to_string(g14) + " grants in the first period");
  if (o.pass) o.detail = "control 6 / 34 UEs, 13 uplink PDUs per period at 5 MHz";
  return o;
}

outcome criterion3() {
  outcome o;
  const double m1 = run(5, 30, 256, 1).mean_t_5g_nr_ms;
  const double m50 = run(5, 30, 256, 50).mean_t_5g_nr_ms;
  o.require(std::abs(m1 - 6.0) <= 1.5, "N=1 mean " + fmt("%.3f", m1) + " ms outside 6 +- 1.5");
  o.require(std::abs(m50 - 27.0) <= 4.0, "N=50 mean " + fmt("%.3f", m50) + " ms outside 27 +- 4");
  if (o.pass) o.detail = "N=1 " + fmt("%.3f", m1) + " ms, N=50 " + fmt("%.3f", m50) + " ms";
  return o;
}

outcome criterion4() {
  outcome o;
  std::map<int, double> mean;
  for (int n : figure_n_grid()) mean[n] = run(100, 120, 256, n).mean_t_5g_nr_ms;
  for (int n : figure_n_grid()) {
    if (n <= 30 && (mean[n] < 4.0 || mean[n] > 6.0)) {
      o.require(false, "N=" + std::to_string(n) + " mean " + fmt("%.3f", mean[n]) + " ms outside [4, 6]");
    }
  }
  const double step = mean[35] - mean[30];
  o.require(step >= 0.5, "N=30->35 step " + fmt("%.3f", step) + " ms < 0.5");
  o.require(std::abs(mean[50] - 8.5) <= 1.5, "N=50 mean " + fmt("%.3f", mean[50]) + " ms outside 8.5 +- 1.5");
  if (o.pass) o.detail = "N<=30 in [4, 6] ms, step " + fmt("%.3f", step) + " ms, N=50 " + fmt("%.3f", mean[50]) + " ms";
  return o;
}

outcome criterion5() {
  outcome o;
  const double m1 = run(5, 30, 256, 1).mean_t_5g_nr_ms;
  const double m5 = run(5, 30, 256, 5).mean_t_5g_nr_ms;
  const double m10 = run(5, 30, 256, 10).mean_t_5g_nr_ms;
  o.require(std::abs(m5 - m1) < 0.5, "|N=5 - N=1| = " + fmt("%.3f", std::abs(m5 - m1)) + " ms");
  const double step = m10 - m5;
  o.require(step >= 1.5 && step <= 4.5, "N=5->10 step " + fmt("%.3f", step) + " ms outside [1.5, 4.5]");
  if (o.pass) o.detail = "|N=5 - N=1| " + fmt("%.3f", std::abs(m5 - m1)) + " ms, N=5->10 " + fmt("%.3f", step) + " ms";
  return o;
}

outcome criterion6() {
  outcome o;
  const double minislot = numerology::from_scs_khz(60).minislot_duration_ms();
  double worst = 0;
  for (int n : figure_n_grid()) {
    const double d = std::abs(run(20, 60, 64, n).mean_t_5g_nr_ms - run(20, 60, 256, n).mean_t_5g_nr_ms);
    worst = std::max(worst, d);
    o.require(d < minislot, "20 MHz N=" + std::to_string(n) + " |M64 - M256| " + fmt("%.3f", d) + " ms");
  }
  std::string gaps;
  for (int n : {30, 35, 40, 45, 50}) {
    const auto a = run(5, 30, 64, n);
    const auto b = run(5, 30, 256, n);
    const double gap = (a.mean_t_5g_nr_ms - a.ci90_halfwidth_ms) - (b.mean_t_5g_nr_ms + b.ci90_halfwidth_ms);
    gaps += (gaps.empty() ? "" : ", ") + fmt("%.3f", a.mean_t_5g_nr_ms - b.mean_t_5g_nr_ms);
    o.require(gap > 0, "5 MHz N=" + std::to_string(n) + " M64 " + fmt("%.3f", a.mean_t_5g_nr_ms) + " vs M256 " +
                           fmt("%.3f", b.mean_t_5g_nr_ms) + " ms, intervals overlap");
  }
  if (o.pass) o.detail = "20 MHz max gap " + fmt("%.3f", worst) + " ms; 5 MHz M64-M256: " + gaps + " ms";
  return o;
}

outcome criterion7() {
  outcome o;
  const auto p = calibrated_params(0.01);
  gilbert_elliott_channel ch(p, rng_stream::derive(2024, "acceptance-channel"));
  const int n = 1'000'000;
  long errors = 0, bad = 0;
  for (int i = 0; i < n; ++i) {
    bad += ch.state() == ge_state::bad;
    errors += !ch.transmit();
  }
  const double rate = static_cast<double>(errors) / n;
  const double occ = static_cast<double>(bad) / n;
  // Standard error of a two-state chain occupancy: lag-one correlation 1 - u - v.
  const double rho = 1.0 - p.u - p.v;
  const double pb = steady_state(p).bad;
  const double se = std::sqrt(pb * (1 - pb) / n * (1 + rho) / (1 - rho));
  o.require(std::abs(rate - 0.01) <= 0.0003, "error rate " + fmt("%.5f", rate) + " outside 0.0100 +- 0.0003");
  o.require(std::abs(occ - pb) <= 3 * se, "bad-state occupancy " + fmt("%.5f", occ) + " vs " + fmt("%.5f", pb));
  if (o.pass) o.detail = "error rate " + fmt("%.5f", rate) + ", occupancy " + fmt("%.5f", occ) + " (pi_B " + fmt("%.5f", pb) + ")";
  return o;
}

// Independent summation of the cost definition, one-based q, fault last.
void brute(const std::vector<std::uint8_t>& pred, int len, int m, long& fp, long& fn) {
  for (int q = 1; q <= len; ++q) {
    const bool fault = q >= len - m;
    const bool p = pred[static_cast<std::size_t>(q - 1)] != 0;
    if (fault && !p) fn += m - len + q;
    if (!fault && p) ++fp;
  }
}

rul::series plain_series(int len) {
  rul::series s;
  s.id = "a";
  s.channels = rul::corpus_channels;
  s.features.setZero(len, 6);
  for (int i = 0; i < len; ++i) s.t_ms.push_back(100.0 * i);
  s.fault_index = len - 1;
  return s;
}

outcome criterion8() {
  outcome o;
  long vectors = 0, mismatches = 0;
  for (int len = 1; len <= 12; ++len) {
    for (int m = 0; m < len; ++m) {
      const std::vector<rul::labeled_series> set = {rul::label_with_margin(plain_series(len), m)};
      for (std::uint32_t mask = 0; mask < (1u << len); ++mask) {
        std::vector<rul::prediction> p(1, rul::prediction(static_cast<std::size_t>(len)));
        for (int i = 0; i < len; ++i) p[0][static_cast<std::size_t>(i)] = (mask >> i) & 1;
        const auto c = rul::cost(p, set, {0.2, m});
        long fp = 0, fn = 0;
        brute(p[0], len, m, fp, fn);
        ++vectors;
        if (c.false_positives != fp || c.fn_cost != fn) ++mismatches;
      }
    }
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " of " + std::to_string(vectors) + " cost mismatches");

  std::mt19937_64 gen(8);
  long searches = 0, threshold_mismatches = 0;
  for (int trial = 0; trial < 20000; ++trial) {
    const int k = 1 + static_cast<int>(gen() % 3);
    const int m = static_cast<int>(gen() % 6);
    std::vector<rul::labeled_series> set;
    std::vector<std::vector<double>> scores;
    for (int j = 0; j < k; ++j) {
      const int len = m + 1 + static_cast<int>(gen() % static_cast<std::uint64_t>(12 - m));
      set.push_back(rul::label_with_margin(plain_series(len), m));
      std::vector<double> sc;
      for (int i = 0; i < len; ++i) sc.push_back(static_cast<double>(gen() % 10) / 10.0);
      scores.push_back(sc);
    }
    std::vector<double> grid = {std::numeric_limits<double>::infinity()};
    for (const auto& sc : scores) grid.insert(grid.end(), sc.begin(), sc.end());
    std::sort(grid.begin(), grid.end(), std::greater<>());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double best_t = 0, best_c = std::numeric_limits<double>::infinity();
    for (double t : grid) {
      long fp = 0, fn = 0;
      for (std::size_t j = 0; j < set.size(); ++j) {
        std::vector<std::uint8_t> bits;
        for (double v : scores[j]) bits.push_back(v >= t ? 1 : 0);
        brute(bits, set[j].data.size(), m, fp, fn);
      }
      const double total = 0.2 * static_cast<double>(fp) + static_cast<double>(fn);
      if (total < best_c) best_c = total, best_t = t;
    }
    const auto r = rul::optimize_threshold(scores, set, {0.2, m});
    ++searches;
    if (r.threshold != best_t || r.cost.total() != best_c) ++threshold_mismatches;
  }
  o.require(threshold_mismatches == 0,
            std::to_string(threshold_mismatches) + " of " + std::to_string(searches) + " threshold mismatches");
  if (o.pass) {
    o.detail = std::to_string(vectors) + " prediction vectors and " + std::to_string(searches) + " threshold searches agree";
  }
  return o;
}

outcome criterion9() {
  outcome o;
  campaign_spec spec;
  spec.fig = figure::fig5;
  spec.replications = replications;
  const auto results = run_points(spec, worker_count_from_env());
  std::map<std::pair<int, int>, double> rtt;
  for (const auto& r : results) {
    rtt[{r.point.arch, r.point.config.traffic.n_ues}] =
        compose_rtt(r.report, spec.server, &architecture(r.point.arch)).rtt_ms();
  }
  auto feasible = [&](int a, int n, double adv) { return feasibility(rtt[{a, n}], adv, "").outcome == verdict::feasible; };
  auto tag = [&](int a, int n) { return "arch " + std::to_string(a) + " N=" + std::to_string(n) + " R=" + fmt("%.1f", rtt[{a, n}]) + " ms"; };
  for (int a = 1; a <= 4; ++a) {
    for (int n : {1, 5, 10}) o.require(feasible(a, n, 0.27), tag(a, n) + " not FEASIBLE vs m=5");
  }
  for (int a : {3, 4}) {
    for (int n : {15, 20}) o.require(feasible(a, n, 0.27), tag(a, n) + " not FEASIBLE vs m=5");
  }
  for (int a = 1; a <= 4; ++a) {
    for (int n : figure_n_grid()) {
      if (n < 25) continue;
      o.require(!feasible(a, n, 0.27), tag(a, n) + " still FEASIBLE vs m=5");
      o.require(feasible(a, n, 0.80), tag(a, n) + " not FEASIBLE vs m=10");
    }
  }
  if (o.pass) o.detail = "verdict pattern reproduced over 4 architectures x 11 N values";
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

outcome criterion10() {
  outcome o;
  const auto dir = std::filesystem::temp_directory_path() / "nrsim_acceptance_determinism";
  std::filesystem::remove_all(dir);
  campaign_spec spec;
  spec.arch = {1, 2, 3, 4};
  spec.n_ues = {1, 10, 25};
  spec.replications = 5;
  spec.base.traffic.sim_time_s = 2.0;
  spec.write_transactions = true;
  spec.write_grant_log = true;
  spec.seed = 7;
  std::ostringstream log;
  spec.out_dir = dir / "first";
  const auto a = run_and_write(spec, 1, log);
  spec.out_dir = dir / "second";
  const auto b = run_and_write(spec, worker_count_from_env(), log);
  o.require(a.size() == b.size() && !a.empty(), "different file sets");
  std::size_t bytes = 0;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    const auto x = slurp(a[i]);
    bytes += x.size();
    o.require(x == slurp(b[i]), a[i].filename().string() + " differs");
  }
  std::filesystem::remove_all(dir);
  if (o.pass) o.detail = std::to_string(a.size()) + " files, " + std::to_string(bytes) + " bytes identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::function<outcome()>> criteria = {criterion1, criterion2, criterion3, criterion4, criterion5,
                                                           criterion6, criterion7, criterion8, criterion9, criterion10};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += o.pass ? 0 : 1;
    std::printf("criterion %2zu %s (%.2f s): %s\n", i + 1, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
