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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "nrsim/campaign.hpp"
#include "nrsim/error.hpp"

using namespace nrsim;

namespace {

kv_config parse(const std::string& text) {
  std::istringstream in(text);
  return kv_config::parse(in, "test.cfg");
}

std::string error_of(const std::string& text) {
  try {
    build_campaign(parse(text));
  } catch (const config_error& e) {
    return e.what();
  }
  return {};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("config grammar") {
  const auto kv = parse("# comment\n\nradio.scs_khz = 60   # trailing\ntraffic.n_ues=4\n");
  CHECK(kv.entries().at("radio.scs_khz").value == "60");
  CHECK(kv.entries().at("radio.scs_khz").line == 3);
  const auto spec = build_campaign(kv);
  CHECK(spec.base.radio.num.scs_khz() == 60);
  CHECK(spec.base.traffic.n_ues == 4);
}

TEST_CASE("config errors carry the line number") {
  CHECK(error_of("traffic.n_ues = 3\nradio.mod_order = 12x\n").rfind("test.cfg:2: radio.mod_order", 0) == 0);
  CHECK(error_of("traffic.n_ues = 3\nnot a pair\n").rfind("test.cfg:2:", 0) == 0);
  CHECK(error_of("radio.bogus = 1\n").find("test.cfg:1: radio.bogus: unknown key") == 0);
  CHECK(error_of("a.b = 1\na.b = 2\n").find("duplicate") != std::string::npos);
  CHECK(error_of("radio.scs_khz = 15\n").rfind("test.cfg:1:", 0) == 0);
  CHECK(error_of("arch.id = 7\n").rfind("test.cfg:1: arch.id", 0) == 0);
  CHECK(error_of("sweep.arch = 1,9\n").rfind("test.cfg:1: sweep.arch", 0) == 0);
  CHECK(error_of("traffic.p_dl = 2\n").find("p_dl") != std::string::npos);
  CHECK(error_of("arch.id = 1\nradio.bandwidth_mhz = 20\n").find("conflicts") != std::string::npos);
}

TEST_CASE("every configuration key is accepted") {
  const std::string all =
      "radio.bandwidth_mhz = 20\nradio.scs_khz = 60\nradio.mod_order = 64\nradio.header_bytes = 72\n"
      "radio.ul_payload_bytes = 32\nradio.dl_payload_bytes = 1\nradio.t_p_gnb_symbols = 7\nradio.t_p_ue_symbols = 7\n"
      "traffic.n_ues = 3\ntraffic.ul_period_ms = 50\ntraffic.p_dl = 0.2\ntraffic.sim_time_s = 1\n"
      "traffic.replications = 3\nchannel.g = 1\nchannel.b = 0\nchannel.v = 0.4\nchannel.target_pe = 0.02\n"
      "sched.policy = rr\nsched.control_pattern = groups\nsched.pusch_minislots = 2\nsched.pdsch_minislots = 2\n"
      "server.anchors = 1:1,10:5,50:50\nserver.t_a_ms = 100\narch.t_cn_ms = 3\nsweep.n_ues = 1,2\n"
      "advance.m5 = 0.3\nfeasibility.slack_ms = 5\ncampaign.seed = 9\ncampaign.out_dir = x\n"
      "campaign.figure = none\ncampaign.transactions = true\ncampaign.grant_log = false\n";
  const auto spec = build_campaign(parse(all));
  CHECK(spec.base.radio.mod_order == 64);
  CHECK(spec.base.channel.u == doctest::Approx(calibrate_u(0.02, 1, 0, 0.4)));
  CHECK(spec.base.sched.policy == sched_policy::round_robin);
  CHECK(spec.base.sched.pattern == control_pattern::fixed_groups);
  CHECK(spec.server.anchors.size() == 3);
  CHECK(spec.advances.size() == 1);
  CHECK(spec.replications == 3);
  CHECK(spec.seed == 9);
  CHECK(spec.write_transactions);
  CHECK(enumerate_points(spec).size() == 2);
}

TEST_CASE("sweep enumeration order") {
  const auto spec = build_campaign(parse("sweep.n_ues = 1,5\nsweep.mod_order = 64,256\n"));
  const auto pts = enumerate_points(spec);
  REQUIRE(pts.size() == 4);
  CHECK(pts[0].config.traffic.n_ues == 1);
  CHECK(pts[0].config.radio.mod_order == 64);
  CHECK(pts[1].config.radio.mod_order == 256);
  CHECK(pts[2].config.traffic.n_ues == 5);
}

TEST_CASE("figure presets") {
  campaign_spec spec;
  spec.fig = figure::fig2;
  const auto fig2 = enumerate_points(spec);
  CHECK(fig2.size() == 3 * figure_n_grid().size());
  for (const auto& p : fig2) {
    CHECK(p.config.radio.mod_order == 256);
    CHECK(p.config.t_cn_ms == 0.0);
  }
  spec.fig = figure::fig3;
  CHECK(enumerate_points(spec).size() == 4 * figure_n_grid().size());
  spec.fig = figure::fig5;
  const auto fig5 = enumerate_points(spec);
  CHECK(fig5.size() == 4 * figure_n_grid().size());
  CHECK(fig5.back().arch == 4);
  CHECK(figure_n_grid() == std::vector<int>{1, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50});
}

TEST_CASE("plot data") {
  campaign_spec spec;
  spec.replications = 2;
  spec.base.traffic.sim_time_s = 1.0;
  spec.fig = figure::fig2;
  spec.n_ues = {1, 5};
  const auto results = run_points(spec, 2);
  const auto csv = emit_plot_data(results, figure::fig2, spec);
  std::istringstream in(csv);
  std::string line;
  int rows = 0;
  std::set<std::string> series;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("figure,", 0) == 0) continue;
    ++rows;
    series.insert(line.substr(0, line.find(',', 5)));
  }
  CHECK(rows == 6);
  CHECK(series.size() == 3);
  CHECK_THROWS_AS(emit_plot_data({}, figure::fig2, spec), config_error);

  auto partial = results;
  partial.pop_back();
  try {
    emit_plot_data(partial, figure::fig2, spec);
    FAIL("missing coverage not reported");
  } catch (const config_error& e) {
    CHECK(std::string(e.what()).find("B=100MHz SCS=120kHz M=256 N=5") != std::string::npos);
  }
}

TEST_CASE("fig5 plot data stacks three components") {
  campaign_spec spec;
  spec.replications = 2;
  spec.base.traffic.sim_time_s = 1.0;
  spec.fig = figure::fig5;
  spec.n_ues = {10};
  const auto csv = emit_plot_data(run_points(spec, 2), figure::fig5, spec);
  for (int a = 1; a <= 4; ++a) {
    for (const char* comp : {"t_5g_nr", "t_p_s", "t_a"}) {
      CHECK(csv.find("fig5," + std::to_string(a) + ",10," + comp + ",") != std::string::npos);
    }
  }
}

TEST_CASE("outputs are written atomically and reproducibly") {
  const auto dir = std::filesystem::temp_directory_path() / "nrsim_campaign_test";
  std::filesystem::remove_all(dir);
  auto spec = build_campaign(parse("arch.id = 4\ntraffic.n_ues = 10\ncampaign.seed = 7\ntraffic.replications = 3\n"
                                   "traffic.sim_time_s = 1\ncampaign.transactions = true\ncampaign.grant_log = true\n"));
  spec.out_dir = dir / "a";
  std::ostringstream log;
  const auto first = run_and_write(spec, 2, log);
  spec.out_dir = dir / "b";
  const auto second = run_and_write(spec, 3, log);
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    CHECK(first[i].filename() == second[i].filename());
    CHECK(slurp(first[i]) == slurp(second[i]));
    CHECK_FALSE(std::filesystem::exists(first[i].string() + ".tmp"));
  }
  const auto feas = slurp(dir / "a" / "feasibility.csv");
  CHECK(feas.rfind("# nrsim seeds=7..9", 0) == 0);
  std::filesystem::remove_all(dir);
}
