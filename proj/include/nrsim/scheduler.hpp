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
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nrsim/phy.hpp"

namespace nrsim {

enum class sched_policy { fifo, round_robin };

/// How the a-priori control pattern hands out PUCCH/PDCCH opportunities.
/// sliding_window: a window of `capacity` consecutive ue_ids that advances
/// by `capacity` every T_SRP. fixed_groups: UEs are split into
/// ceil(N / capacity) groups (ue_id mod groups) served in turn.
enum class control_pattern { sliding_window, fixed_groups };

enum class link_direction { uplink, downlink };

sched_policy parse_policy(std::string_view text);
control_pattern parse_control_pattern(std::string_view text);
const char* to_string(sched_policy policy);
const char* to_string(control_pattern pattern);

struct scheduler_config {
  sched_policy policy = sched_policy::fifo;
  control_pattern pattern = control_pattern::sliding_window;
  int pusch_minislots = 3;
  int pdsch_minislots = 1;
  bool record_grants = false;
};

/// Partition of one T_SRP into control, PUSCH and PDSCH mini-slots.
struct srp_layout {
  static constexpr int control_minislots = 4;
  int pusch_minislots = 3;
  int pdsch_minislots = 1;
  int n_rb = 1;

  static srp_layout make(int n_rb, int pusch_minislots, int pdsch_minislots);

  int first_pusch() const { return control_minislots; }
  int first_pdsch() const { return control_minislots + pusch_minislots; }
  int pusch_budget() const { return pusch_minislots * n_rb; }
  int pdsch_budget() const { return pdsch_minislots * n_rb; }
};

/// UEs whose control signalling fits in one T_SRP. Every served UE needs two
/// PUCCH/PDCCH pairs, i.e. two RBs of each control mini-slot.
int control_capacity(int n_rb);

/// Control-served UEs for T_SRP number srp_index, in pattern order.
std::vector<int> assign_control(std::int64_t srp_index, int n_ues, int capacity,
                                control_pattern pattern = control_pattern::sliding_window);

struct data_pdu {
  std::int64_t id = 0;  // caller-owned handle
  int ue = 0;
  tick_t ready = 0;     // earliest tick at which it can be requested
  int rbs = 1;
};

/// A transport block the gNB knows about: admitted through control
/// signalling, possibly already transmitted and NACKed.
struct transport_block {
  data_pdu pdu;
  link_direction direction = link_direction::uplink;
  tick_t control_tick = 0;  // end of the control region that admitted it
  tick_t first_tx_tick = -1;
  int attempts = 0;
};

struct rb_segment {
  int minislot = 0;
  int rb_start = 0;
  int rb_len = 0;
};

/// A block's RBs are packed in order over the direction's mini-slots and may
/// continue into the next mini-slot; the block completes with its last RB.
struct data_grant {
  transport_block tb;
  std::vector<rb_segment> segments;
  tick_t start_tick = 0;
  tick_t end_tick = 0;
};

struct grant_record {
  std::int64_t srp = 0;
  int minislot = 0;
  int ue = 0;
  message_kind kind = message_kind::pusch;
  int rb_start = 0;
  int rb_len = 0;
};

struct delivery {
  std::int64_t id = 0;
  int ue = 0;
  link_direction direction = link_direction::uplink;
  tick_t control_tick = 0;
  tick_t first_tx_tick = 0;
  tick_t delivered = 0;
  int attempts = 0;
};

/// Channel outcome for one transmission attempt; true means decoded.
using link_oracle = std::function<bool(int ue, link_direction direction)>;

/// Per-T_SRP gNB scheduler. Control is handled at T_SRP granularity: a UE in
/// the control pattern for a period gets its pending requests (ready at or
/// before the period start) admitted at the end of the control region, and
/// the data grants follow in the same period when the budget allows.
class mac_scheduler {
 public:
  mac_scheduler(int n_ues, int n_rb, scheduler_config config = {});

  void push_uplink(const data_pdu& pdu);
  void push_downlink(const data_pdu& pdu);

  /// Runs one full period: control, PUSCH/PDSCH grants and HARQ outcomes.
  std::vector<delivery> run_srp(std::int64_t srp_index, const link_oracle& link);

  /// Individual stages of run_srp, exposed for testing.
  std::vector<int> admit_control(std::int64_t srp_index);
  std::vector<data_grant> schedule_uplink(std::int64_t srp_index);
  std::vector<data_grant> schedule_downlink(std::int64_t srp_index);
  /// Returns the delivery on ACK; on NACK requeues the block for the next
  /// period with retransmission priority and returns nothing.
  std::optional<delivery> harq_step(const data_grant& grant, bool decoded);

  const srp_layout& layout() const { return layout_; }
  int capacity() const { return capacity_; }
  int n_ues() const { return n_ues_; }
  const std::vector<grant_record>& grant_log() const { return grants_; }
  void clear_grant_log() { grants_.clear(); }

  /// Blocks not yet delivered, admitted or not.
  std::size_t backlog() const;

 private:
  struct flow {
    std::vector<std::deque<data_pdu>> pending;  // per UE, not yet admitted
    std::vector<transport_block> admitted;      // waiting for a first grant
    std::vector<transport_block> retx;          // NACKed, waiting for a retransmission
  };

  std::vector<data_grant> schedule(flow& f, std::int64_t srp_index, link_direction direction);
  void log(std::int64_t srp, int minislot, int ue, message_kind kind, int rb_start, int rb_len);

  int n_ues_;
  int capacity_;
  srp_layout layout_;
  scheduler_config config_;
  flow ul_;
  flow dl_;
  std::vector<grant_record> grants_;
};

/// Checks a grant log for RB over-subscription, double-granted RBs and
/// half-duplex conflicts. Throws invariant_violation on the first problem.
void audit_grant_log(const std::vector<grant_record>& log, int n_rb);

/// CSV with columns srp_index,minislot,ue_id,kind,rb_start,rb_len.
std::string grant_log_csv(const std::vector<grant_record>& log);

}  // namespace nrsim
