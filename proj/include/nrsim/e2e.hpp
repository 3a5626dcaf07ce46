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

#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nrsim/sim.hpp"

namespace nrsim {

/// Deployment option: radio settings of the serving gNB plus the fixed
/// core-network traversal delay.
struct architecture_preset {
  int id = 1;
  double bandwidth_hz = 5e6;
  int scs_khz = 30;
  int mod_order = 256;
  double t_cn_ms = 7.0;

  /// Copy of `base` with this preset's radio settings and T_CN.
  sim_config apply(sim_config base) const;
};

std::span<const architecture_preset> architecture_presets();
/// Throws config_error for ids other than 1..4.
const architecture_preset& architecture(int id);

/// Application-side delays: DL pipeline processing vs. number of UEs, and the
/// actuation time.
struct server_model {
  std::vector<std::pair<double, double>> anchors = {{1.0, 1.2}, {50.0, 119.2}};  // (n_ues, ms)
  double t_a_ms = 200.0;

  void validate() const;
};

/// Piecewise-linear interpolation over the anchor table; no extrapolation.
double t_p_s_ms(int n_ues, const server_model& server);

struct rtt_breakdown {
  int n_ues = 0;
  double t_5g_nr_ms = 0.0;
  double t_p_s_ms = 0.0;
  double t_a_ms = 0.0;
  double ci90_ms = 0.0;

  double rtt_ms() const { return t_p_s_ms + t_5g_nr_ms + t_a_ms; }
};

/// R = T_P_S + T_5G_NR + T_A. When `preset` is given, the report must have
/// been produced with that preset's radio settings and T_CN.
rtt_breakdown compose_rtt(const sim_report& report, const server_model& server,
                          const architecture_preset* preset = nullptr);

enum class verdict { feasible, infeasible };

const char* to_string(verdict v);

struct feasibility_result {
  verdict outcome = verdict::infeasible;
  double slack_ms = 0.0;  // advance minus RTT
  std::string margin_label;
};

/// FEASIBLE when the advance exceeds the RTT by more than required_slack_ms.
feasibility_result feasibility(double rtt_ms, double mean_advance_s, std::string margin_label,
                               double required_slack_ms = 0.0);

}  // namespace nrsim
