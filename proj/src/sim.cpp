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

#include "nrsim/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include "json.hpp"
#include <sstream>
#include <thread>

#include "nrsim/error.hpp"
#include "nrsim/rng.hpp"
#include "nrsim/stats.hpp"

namespace nrsim {
namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_ms(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace

void traffic_config::validate() const {
  if (n_ues < 1) throw config_error("traffic.n_ues must be at least 1");
  if (!(ul_period_ms > 0)) throw config_error("traffic.ul_period_ms must be positive");
  if (!(p_dl >= 0.0 && p_dl <= 1.0)) throw config_error("traffic.p_dl must lie in [0, 1]");
  if (!(sim_time_s > 0)) throw config_error("traffic.sim_time_s must be positive");
  if (n_replications < 1) throw config_error("traffic.replications must be at least 1");
}

void sim_config::validate() const {
  nrsim::validate(radio);
  traffic.validate();
  channel.validate();
  if (!(t_cn_ms >= 0)) throw config_error("t_cn_ms must be non-negative");
  if (processing.gnb_symbols < 0 || processing.ue_symbols < 0) {
    throw config_error("processing times must be non-negative");
  }
  srp_layout::make(n_rb(radio), sched.pusch_minislots, sched.pdsch_minislots);
  if (control_capacity(n_rb(radio)) < 1) throw config_error("bandwidth leaves no room for control signalling");
}

std::string sim_config::canonical() const {
  std::ostringstream out;
  out << "radio.bandwidth_hz=" << fmt_double(radio.bandwidth_hz) << '\n'
      << "radio.scs_khz=" << radio.num.scs_khz() << '\n'
      << "radio.mod_order=" << radio.mod_order << '\n'
      << "radio.header_bytes=" << radio.header_bytes << '\n'
      << "radio.ul_payload_bytes=" << radio.ul_payload_bytes << '\n'
      << "radio.dl_payload_bytes=" << radio.dl_payload_bytes << '\n'
      << "traffic.n_ues=" << traffic.n_ues << '\n'
      << "traffic.ul_period_ms=" << fmt_double(traffic.ul_period_ms) << '\n'
      << "traffic.p_dl=" << fmt_double(traffic.p_dl) << '\n'
      << "traffic.sim_time_s=" << fmt_double(traffic.sim_time_s) << '\n'
      << "channel.g=" << fmt_double(channel.g) << '\n'
      << "channel.b=" << fmt_double(channel.b) << '\n'
      << "channel.u=" << fmt_double(channel.u) << '\n'
      << "channel.v=" << fmt_double(channel.v) << '\n'
      << "core.t_cn_ms=" << fmt_double(t_cn_ms) << '\n'
      << "proc.gnb_symbols=" << processing.gnb_symbols << '\n'
      << "proc.ue_symbols=" << processing.ue_symbols << '\n'
      << "sched.policy=" << to_string(sched.policy) << '\n'
      << "sched.control_pattern=" << to_string(sched.pattern) << '\n'
      << "sched.pusch_minislots=" << sched.pusch_minislots << '\n'
      << "sched.pdsch_minislots=" << sched.pdsch_minislots << '\n';
  return out.str();
}

std::uint64_t sim_config::hash() const { return fnv1a(canonical()); }

replication_result run_replication(const sim_config& config, std::uint64_t seed, int replication) {
  config.validate();
  const auto& num = config.radio.num;
  const int rbs = n_rb(config.radio);
  const int ul_rbs = rbs_for_pdu(pdu_bytes(config.radio.ul_payload_bytes, config.radio), config.radio.mod_order);
  const int dl_rbs = rbs_for_pdu(pdu_bytes(config.radio.dl_payload_bytes, config.radio), config.radio.mod_order);
  const int n_ues = config.traffic.n_ues;

  const tick_t horizon = num.ticks_from_ms(config.traffic.sim_time_s * 1000.0);
  const tick_t period = std::max<tick_t>(1, num.ticks_from_ms(config.traffic.ul_period_ms));
  const tick_t t_cn = num.ticks_from_ms(config.t_cn_ms);
  const tick_t p_gnb = config.processing.gnb_symbols;
  const tick_t p_ue = config.processing.ue_symbols;

  auto traffic = rng_stream::derive(seed, "traffic-offsets");
  auto commands = rng_stream::derive(seed, "p-dl");
  std::vector<gilbert_elliott_channel> ul_channels;
  std::vector<gilbert_elliott_channel> dl_channels;
  std::vector<tick_t> next_gen(n_ues);
  for (int ue = 0; ue < n_ues; ++ue) {
    ul_channels.emplace_back(config.channel, rng_stream::derive(seed, "ul-channel", ue));
    dl_channels.emplace_back(config.channel, rng_stream::derive(seed, "dl-channel", ue));
    next_gen[ue] = static_cast<tick_t>(std::floor(traffic.uniform() * static_cast<double>(period)));
  }

  scheduler_config sched = config.sched;
  mac_scheduler scheduler(n_ues, rbs, sched);
  const link_oracle link = [&](int ue, link_direction direction) {
    return (direction == link_direction::uplink ? ul_channels : dl_channels)[ue].transmit();
  };

  std::vector<transaction> all;
  for (std::int64_t k = 0;; ++k) {
    const tick_t start = k * srp_ticks;
    if (start >= horizon) break;

    for (int ue = 0; ue < n_ues; ++ue) {
      while (next_gen[ue] < horizon && next_gen[ue] + p_ue <= start) {
        transaction t;
        t.replication = replication;
        t.ue = ue;
        t.ul_gen = next_gen[ue];
        t.ul_ready = next_gen[ue] + p_ue;
        scheduler.push_uplink({static_cast<std::int64_t>(all.size()), ue, t.ul_ready, ul_rbs});
        all.push_back(t);
        next_gen[ue] += period;
      }
    }

    for (const auto& d : scheduler.run_srp(k, link)) {
      auto& t = all[static_cast<std::size_t>(d.id)];
      if (d.direction == link_direction::uplink) {
        t.ul_control = d.control_tick;
        t.ul_delivery = d.delivered;
        t.ul_attempts = d.attempts;
        t.server_in = d.delivered + p_gnb + t_cn;
        t.dl_issued = commands.bernoulli(config.traffic.p_dl);
        if (t.dl_issued) {
          t.dl_gen = t.server_in;
          t.dl_ready = t.server_in + t_cn + p_gnb;
          scheduler.push_downlink({d.id, t.ue, t.dl_ready, dl_rbs});
        }
      } else {
        t.dl_control = d.control_tick;
        t.dl_delivery = d.delivered;
        t.dl_attempts = d.attempts;
        t.done = d.delivered + p_ue;
      }
    }
  }

  replication_result result;
  // Samples generated too late to reach the gNB before the horizon.
  for (int ue = 0; ue < n_ues; ++ue) {
    for (; next_gen[ue] < horizon; next_gen[ue] += period) ++result.discarded;
  }
  result.replication = replication;
  result.seed = seed;
  result.symbol_ms = num.symbol_duration_ms();
  if (sched.record_grants) result.grants = scheduler.grant_log();

  for (auto& t : all) {
    const bool ul_done = t.ul_delivery >= 0 && t.server_in <= horizon;
    const bool finished = ul_done && (!t.dl_issued || (t.done >= 0 && t.done <= horizon));
    if (!finished) {
      ++result.discarded;
      continue;
    }
    t.t_ran_ul = t.ul_delivery - t.ul_ready;
    t.t_p_ue = p_ue;
    t.t_p_gnb = p_gnb;
    t.t_cn_total = t_cn;
    if (t.dl_issued) {
      t.t_ran_dl = t.dl_delivery - t.dl_ready;
      t.t_p_ue += p_ue;
      t.t_p_gnb += p_gnb;
      t.t_cn_total += t_cn;
    }
    t.complete = true;

    if (t.ul_control < t.ul_ready || t.ul_delivery < t.ul_control ||
        (t.dl_issued && (t.dl_control < t.dl_ready || t.dl_delivery < t.dl_control))) {
      throw invariant_violation("causality broken for UE " + std::to_string(t.ue) + " at tick " +
                                std::to_string(t.ul_gen));
    }
    if (t.network_delay() != t.elapsed()) {
      throw invariant_violation("delay terms do not add up for UE " + std::to_string(t.ue) + " at tick " +
                                std::to_string(t.ul_gen));
    }
    result.transactions.push_back(t);
  }
  return result;
}

scope_stats rtt_stat_scope(const replication_result& result) {
  scope_stats s;
  double full = 0.0;
  double ul_only = 0.0;
  for (const auto& t : result.transactions) {
    const double ms = static_cast<double>(t.network_delay()) * result.symbol_ms;
    if (t.dl_issued) {
      ++s.full_loop_count;
      full += ms;
    } else {
      ++s.ul_only_count;
      ul_only += ms;
    }
  }
  if (s.full_loop_count) s.full_loop_mean_ms = full / static_cast<double>(s.full_loop_count);
  if (s.ul_only_count) s.ul_only_mean_ms = ul_only / static_cast<double>(s.ul_only_count);
  return s;
}

std::vector<std::uint64_t> consecutive_seeds(std::uint64_t base, int n) {
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(std::max(n, 0)));
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = base + i;
  return seeds;
}

int worker_count_from_env() {
  if (const char* env = std::getenv("NRSIM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

sim_report run_campaign(const sim_config& config, const std::vector<std::uint64_t>& seeds, int workers,
                        std::vector<replication_result>* keep) {
  if (seeds.size() < 2) throw config_error("a campaign needs at least two replications");
  config.validate();

  std::vector<replication_result> results(seeds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        results[i] = run_replication(config, seeds[i], static_cast<int>(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(workers, 1, static_cast<int>(seeds.size()));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  sim_report report;
  report.config = config;
  report.config_hash = config.hash();
  report.seeds = seeds;
  std::vector<double> means;
  std::vector<double> ul_means;
  std::vector<double> dl_means;
  std::vector<double> one_way;
  for (const auto& r : results) {
    const auto scope = rtt_stat_scope(r);
    report.transaction_count += r.transactions.size();
    report.full_loop_count += scope.full_loop_count;
    if (scope.ul_only_count) one_way.push_back(scope.ul_only_mean_ms);
    if (scope.full_loop_empty()) {
      report.excluded.push_back(r.replication);
      report.replication_means_ms.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    double ul = 0.0;
    double dl = 0.0;
    for (const auto& t : r.transactions) {
      if (!t.dl_issued) continue;
      ul += static_cast<double>(t.t_ran_ul);
      dl += static_cast<double>(t.t_ran_dl);
    }
    const double n = static_cast<double>(scope.full_loop_count);
    ul_means.push_back(ul / n * r.symbol_ms);
    dl_means.push_back(dl / n * r.symbol_ms);
    means.push_back(scope.full_loop_mean_ms);
    report.replication_means_ms.push_back(scope.full_loop_mean_ms);
  }
  if (means.empty()) throw invariant_violation("no replication produced a full-loop transaction");
  report.mean_t_5g_nr_ms = mean(means);
  report.mean_rtt_ms = report.mean_t_5g_nr_ms;
  report.ci90_halfwidth_ms = ci_halfwidth(means, 0.90);
  report.mean_t_ran_ul_ms = mean(ul_means);
  report.mean_t_ran_dl_ms = mean(dl_means);
  report.mean_ul_one_way_ms = mean(one_way);
  if (keep) *keep = std::move(results);
  return report;
}

std::string transactions_csv(const std::vector<replication_result>& results) {
  std::ostringstream out;
  out << "replication,ue_id,ul_gen_ms,t_ran_ul_ms,t_cn_ms,t_ran_dl_ms,t_5g_nr_ms,dl_issued\n";
  for (const auto& r : results) {
    for (const auto& t : r.transactions) {
      auto ms = [&](tick_t ticks) { return fmt_ms(static_cast<double>(ticks) * r.symbol_ms); };
      out << t.replication << ',' << t.ue << ',' << ms(t.ul_gen) << ',' << ms(t.t_ran_ul) << ',' << ms(t.t_cn_total)
          << ',' << ms(t.t_ran_dl) << ',' << ms(t.network_delay()) << ',' << (t.dl_issued ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::string report_json(const sim_report& report) {
  nlohmann::ordered_json j;
  j["config_hash"] = report.config_hash;
  j["seeds"] = report.seeds;
  j["mean_t_5g_nr_ms"] = report.mean_t_5g_nr_ms;
  j["mean_rtt_ms"] = report.mean_rtt_ms;
  j["ci90_halfwidth_ms"] = report.ci90_halfwidth_ms;
  j["mean_t_ran_ul_ms"] = report.mean_t_ran_ul_ms;
  j["mean_t_ran_dl_ms"] = report.mean_t_ran_dl_ms;
  j["mean_ul_one_way_ms"] = report.mean_ul_one_way_ms;
  auto per_rep = nlohmann::ordered_json::array();
  for (double m : report.replication_means_ms) {
    if (std::isnan(m)) {
      per_rep.push_back(nullptr);
    } else {
      per_rep.push_back(m);
    }
  }
  j["replication_means_ms"] = per_rep;
  j["excluded_replications"] = report.excluded;
  j["transaction_count"] = report.transaction_count;
  j["full_loop_count"] = report.full_loop_count;
  auto cfg = nlohmann::ordered_json::object();
  std::istringstream lines(report.config.canonical());
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  j["config"] = cfg;
  return j.dump(2) + "\n";
}

}  // namespace nrsim
