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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nrsim/channel.hpp"
#include "nrsim/phy.hpp"
#include "nrsim/scheduler.hpp"

namespace nrsim {

struct traffic_config {
  int n_ues = 1;
  double ul_period_ms = 100.0;
  double p_dl = 0.10;
  double sim_time_s = 10.0;
  int n_replications = 20;

  void validate() const;
};

/// PHY PDU processing times, in OFDM symbols.
struct processing_config {
  int gnb_symbols = 7;
  int ue_symbols = 7;
};

struct sim_config {
  radio_config radio;
  traffic_config traffic;
  gilbert_elliott_params channel = calibrated_params(0.01);
  double t_cn_ms = 0.0;
  processing_config processing;
  scheduler_config sched;

  void validate() const;
  /// Stable key=value rendering of every parameter that affects results.
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// One uplink sample and, when the server answered, its downlink command.
/// All times are ticks (OFDM symbols) from the start of the replication.
struct transaction {
  int replication = 0;
  int ue = 0;
  tick_t ul_gen = 0;
  tick_t ul_ready = 0;
  tick_t ul_control = -1;
  tick_t ul_delivery = -1;
  tick_t server_in = -1;
  bool dl_issued = false;
  tick_t dl_gen = -1;
  tick_t dl_ready = -1;
  tick_t dl_control = -1;
  tick_t dl_delivery = -1;
  tick_t done = -1;
  int ul_attempts = 0;
  int dl_attempts = 0;

  // Delay decomposition, filled in once the transaction completes.
  tick_t t_ran_ul = 0;
  tick_t t_ran_dl = 0;
  tick_t t_cn_total = 0;
  tick_t t_p_gnb = 0;
  tick_t t_p_ue = 0;

  bool complete = false;

  /// Sum of the decomposition terms: the full-loop T_5G_NR, or the one-way
  /// UE-to-server latency when no command was issued.
  tick_t network_delay() const { return t_p_ue + t_ran_ul + t_p_gnb + t_cn_total + t_ran_dl; }
  /// Same quantity measured directly from the timestamps.
  tick_t elapsed() const { return (dl_issued ? done : server_in) - ul_gen; }
};

struct replication_result {
  int replication = 0;
  std::uint64_t seed = 0;
  double symbol_ms = 0.0;
  std::vector<transaction> transactions;  // complete transactions only
  std::size_t discarded = 0;              // truncated by the end of the run
  std::vector<grant_record> grants;       // when sched.record_grants is set
};

replication_result run_replication(const sim_config& config, std::uint64_t seed, int replication = 0);

struct scope_stats {
  std::size_t full_loop_count = 0;
  std::size_t ul_only_count = 0;
  double full_loop_mean_ms = 0.0;
  double ul_only_mean_ms = 0.0;
  /// No transaction in the set received a command.
  bool full_loop_empty() const { return full_loop_count == 0; }
};

/// Splits a replication into full-loop (command issued) and uplink-only
/// transactions and averages each group.
scope_stats rtt_stat_scope(const replication_result& result);

struct sim_report {
  sim_config config;
  std::uint64_t config_hash = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> replication_means_ms;  // indexed like seeds; NaN when excluded
  std::vector<int> excluded;                 // replications with no full-loop transaction
  double mean_t_5g_nr_ms = 0.0;
  double mean_rtt_ms = 0.0;  // radio-network RTT, identical to mean_t_5g_nr_ms
  double ci90_halfwidth_ms = 0.0;
  double mean_t_ran_ul_ms = 0.0;
  double mean_t_ran_dl_ms = 0.0;
  double mean_ul_one_way_ms = 0.0;
  std::size_t transaction_count = 0;
  std::size_t full_loop_count = 0;
};

/// Runs one replication per seed (on up to `workers` threads) and merges the
/// results by replication index.
sim_report run_campaign(const sim_config& config, const std::vector<std::uint64_t>& seeds, int workers = 1,
                        std::vector<replication_result>* keep = nullptr);

/// Seeds base, base + 1, ... for n replications.
std::vector<std::uint64_t> consecutive_seeds(std::uint64_t base, int n);

/// NRSIM_THREADS when set and positive, else the hardware concurrency.
int worker_count_from_env();

std::string transactions_csv(const std::vector<replication_result>& results);
std::string report_json(const sim_report& report);

}  // namespace nrsim
