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

#include "nrsim/e2e.hpp"

#include <array>
#include <cmath>

#include "nrsim/error.hpp"

namespace nrsim {
namespace {

constexpr std::array<architecture_preset, 4> presets{{
    {1, 5e6, 30, 256, 7.0},
    {2, 5e6, 30, 256, 2.0},
    {3, 100e6, 120, 64, 2.0},
    {4, 100e6, 120, 64, 1.0},
}};

}  // namespace

sim_config architecture_preset::apply(sim_config base) const {
  base.radio.bandwidth_hz = bandwidth_hz;
  base.radio.num = numerology::from_scs_khz(scs_khz);
  base.radio.mod_order = mod_order;
  base.t_cn_ms = t_cn_ms;
  return base;
}

std::span<const architecture_preset> architecture_presets() { return presets; }

const architecture_preset& architecture(int id) {
  if (id < 1 || id > static_cast<int>(presets.size())) {
    throw config_error("unknown architecture " + std::to_string(id) + " (expected 1-4)");
  }
  return presets[static_cast<std::size_t>(id - 1)];
}

void server_model::validate() const {
  if (anchors.size() < 2) throw config_error("server model needs at least two anchors");
  for (std::size_t i = 1; i < anchors.size(); ++i) {
    if (!(anchors[i].first > anchors[i - 1].first) || !(anchors[i].second > anchors[i - 1].second)) {
      throw config_error("server anchors must increase in both UEs and time");
    }
  }
  if (!(t_a_ms >= 0)) throw config_error("actuation time must be non-negative");
}

double t_p_s_ms(int n_ues, const server_model& server) {
  server.validate();
  const double n = n_ues;
  const auto& a = server.anchors;
  if (n < a.front().first || n > a.back().first) {
    throw config_error("no server processing time for " + std::to_string(n_ues) + " UEs (table covers " +
                       std::to_string(a.front().first) + " to " + std::to_string(a.back().first) + ")");
  }
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (n <= a[i].first) {
      const double w = (n - a[i - 1].first) / (a[i].first - a[i - 1].first);
      return a[i - 1].second + w * (a[i].second - a[i - 1].second);
    }
  }
  return a.back().second;
}

rtt_breakdown compose_rtt(const sim_report& report, const server_model& server, const architecture_preset* preset) {
  if (preset && preset->apply(report.config).hash() != report.config_hash) {
    throw config_error("report was not produced with architecture " + std::to_string(preset->id) + " settings");
  }
  rtt_breakdown r;
  r.n_ues = report.config.traffic.n_ues;
  r.t_5g_nr_ms = report.mean_t_5g_nr_ms;
  r.t_p_s_ms = t_p_s_ms(r.n_ues, server);
  r.t_a_ms = server.t_a_ms;
  r.ci90_ms = report.ci90_halfwidth_ms;
  return r;
}

const char* to_string(verdict v) { return v == verdict::feasible ? "FEASIBLE" : "INFEASIBLE"; }

feasibility_result feasibility(double rtt_ms, double mean_advance_s, std::string margin_label,
                               double required_slack_ms) {
  feasibility_result f;
  f.slack_ms = mean_advance_s * 1000.0 - rtt_ms;
  // Tolerance for the s -> ms conversion so that R == a stays infeasible.
  f.outcome = f.slack_ms > required_slack_ms + 1e-9 ? verdict::feasible : verdict::infeasible;
  f.margin_label = std::move(margin_label);
  return f;
}

}  // namespace nrsim
