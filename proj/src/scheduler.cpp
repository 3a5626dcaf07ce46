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

#include "nrsim/scheduler.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>

#include "nrsim/error.hpp"

namespace nrsim {

sched_policy parse_policy(std::string_view text) {
  if (text == "fifo") return sched_policy::fifo;
  if (text == "rr" || text == "round_robin") return sched_policy::round_robin;
  throw config_error("unknown scheduling policy '" + std::string(text) + "' (expected fifo or rr)");
}

control_pattern parse_control_pattern(std::string_view text) {
  if (text == "sliding") return control_pattern::sliding_window;
  if (text == "groups") return control_pattern::fixed_groups;
  throw config_error("unknown control pattern '" + std::string(text) + "' (expected sliding or groups)");
}

const char* to_string(sched_policy policy) { return policy == sched_policy::fifo ? "fifo" : "rr"; }

const char* to_string(control_pattern pattern) {
  return pattern == control_pattern::sliding_window ? "sliding" : "groups";
}

srp_layout srp_layout::make(int n_rb, int pusch_minislots, int pdsch_minislots) {
  if (n_rb < 1) throw config_error("layout needs at least one RB");
  if (pusch_minislots < 1 || pdsch_minislots < 1 ||
      pusch_minislots + pdsch_minislots != minislots_per_srp - control_minislots) {
    throw config_error("PUSCH and PDSCH mini-slots must both be positive and sum to 4");
  }
  return {pusch_minislots, pdsch_minislots, n_rb};
}

int control_capacity(int n_rb) {
  if (n_rb < 1) throw config_error("control capacity needs at least one RB");
  return n_rb / 2;
}

std::vector<int> assign_control(std::int64_t srp_index, int n_ues, int capacity, control_pattern pattern) {
  std::vector<int> served;
  if (n_ues <= 0 || capacity <= 0) return served;
  if (capacity >= n_ues) {
    served.resize(n_ues);
    for (int ue = 0; ue < n_ues; ++ue) served[ue] = ue;
    return served;
  }
  if (pattern == control_pattern::sliding_window) {
    const auto start = static_cast<int>((srp_index % n_ues) * capacity % n_ues);
    served.reserve(capacity);
    for (int k = 0; k < capacity; ++k) served.push_back((start + k) % n_ues);
    return served;
  }
  const int groups = (n_ues + capacity - 1) / capacity;
  const auto group = static_cast<int>(srp_index % groups);
  for (int ue = group; ue < n_ues; ue += groups) served.push_back(ue);
  return served;
}

mac_scheduler::mac_scheduler(int n_ues, int n_rb, scheduler_config config)
    : n_ues_(n_ues),
      capacity_(control_capacity(n_rb)),
      layout_(srp_layout::make(n_rb, config.pusch_minislots, config.pdsch_minislots)),
      config_(config) {
  if (n_ues < 1) throw config_error("need at least one UE");
  if (capacity_ < 1) throw config_error("a single RB cannot carry the two control pairs a UE needs");
  ul_.pending.resize(n_ues);
  dl_.pending.resize(n_ues);
}

void mac_scheduler::push_uplink(const data_pdu& pdu) {
  if (pdu.rbs > layout_.n_rb) throw config_error("uplink PDU larger than one mini-slot");
  ul_.pending.at(pdu.ue).push_back(pdu);
}

void mac_scheduler::push_downlink(const data_pdu& pdu) {
  if (pdu.rbs > layout_.n_rb) throw config_error("downlink PDU larger than one mini-slot");
  dl_.pending.at(pdu.ue).push_back(pdu);
}

void mac_scheduler::log(std::int64_t srp, int minislot, int ue, message_kind kind, int rb_start, int rb_len) {
  if (config_.record_grants) grants_.push_back({srp, minislot, ue, kind, rb_start, rb_len});
}

std::vector<int> mac_scheduler::admit_control(std::int64_t srp_index) {
  const tick_t start = srp_index * srp_ticks;
  const tick_t control_end = start + srp_layout::control_minislots * symbols_per_minislot;
  auto served = assign_control(srp_index, n_ues_, capacity_, config_.pattern);

  for (std::size_t pos = 0; pos < served.size(); ++pos) {
    const int ue = served[pos];
    const int rb = static_cast<int>(2 * pos);
    // Two PUCCH/PDCCH pairs on RBs [rb, rb + 2).
    log(srp_index, 0, ue, message_kind::pucch, rb, 2);
    log(srp_index, 1, ue, message_kind::pdcch, rb, 2);
    log(srp_index, 2, ue, message_kind::pucch, rb, 2);
    log(srp_index, 3, ue, message_kind::pdcch, rb, 2);

    for (auto* f : {&ul_, &dl_}) {
      auto& queue = f->pending[ue];
      const auto direction = f == &ul_ ? link_direction::uplink : link_direction::downlink;
      while (!queue.empty() && queue.front().ready <= start) {
        f->admitted.push_back({queue.front(), direction, control_end, -1, 0});
        queue.pop_front();
      }
    }
  }
  return served;
}

std::vector<data_grant> mac_scheduler::schedule(flow& f, std::int64_t srp_index, link_direction direction) {
  const bool uplink = direction == link_direction::uplink;
  const int first = uplink ? layout_.first_pusch() : layout_.first_pdsch();
  const int count = uplink ? layout_.pusch_minislots : layout_.pdsch_minislots;
  const tick_t start = srp_index * srp_ticks;
  const auto kind = uplink ? message_kind::pusch : message_kind::pdsch;

  auto by_age = [](const transport_block& a, const transport_block& b) {
    return std::tie(a.pdu.ready, a.pdu.ue, a.pdu.id) < std::tie(b.pdu.ready, b.pdu.ue, b.pdu.id);
  };
  std::stable_sort(f.retx.begin(), f.retx.end(), by_age);
  if (config_.policy == sched_policy::fifo) {
    std::stable_sort(f.admitted.begin(), f.admitted.end(), by_age);
  } else {
    const auto offset = static_cast<int>(srp_index % n_ues_);
    auto rr_key = [&](const transport_block& t) {
      return std::make_tuple((t.pdu.ue - offset + n_ues_) % n_ues_, t.pdu.ready, t.pdu.id);
    };
    std::stable_sort(f.admitted.begin(), f.admitted.end(),
                     [&](const transport_block& a, const transport_block& b) { return rr_key(a) < rr_key(b); });
  }

  // Next free RB, counted over the direction's mini-slots in order.
  int cursor = 0;
  const int budget = count * layout_.n_rb;
  std::vector<data_grant> grants;

  auto place = [&](std::vector<transport_block>& list) {
    std::vector<transport_block> left;
    for (auto& tb : list) {
      if (cursor + tb.pdu.rbs > budget) {
        left.push_back(std::move(tb));
        continue;
      }
      data_grant g;
      g.tb = std::move(tb);
      for (int remaining = g.tb.pdu.rbs; remaining > 0;) {
        const int ms = cursor / layout_.n_rb;
        const int rb = cursor % layout_.n_rb;
        const int len = std::min(remaining, layout_.n_rb - rb);
        g.segments.push_back({first + ms, rb, len});
        log(srp_index, first + ms, g.tb.pdu.ue, kind, rb, len);
        cursor += len;
        remaining -= len;
      }
      g.start_tick = start + g.segments.front().minislot * symbols_per_minislot;
      g.end_tick = start + (g.segments.back().minislot + 1) * symbols_per_minislot;
      if (g.tb.first_tx_tick < 0) g.tb.first_tx_tick = g.start_tick;
      grants.push_back(std::move(g));
    }
    list = std::move(left);
  };
  place(f.retx);
  place(f.admitted);
  return grants;
}

std::vector<data_grant> mac_scheduler::schedule_uplink(std::int64_t srp_index) {
  return schedule(ul_, srp_index, link_direction::uplink);
}

std::vector<data_grant> mac_scheduler::schedule_downlink(std::int64_t srp_index) {
  return schedule(dl_, srp_index, link_direction::downlink);
}

std::optional<delivery> mac_scheduler::harq_step(const data_grant& grant, bool decoded) {
  transport_block tb = grant.tb;
  ++tb.attempts;
  if (decoded) {
    return delivery{tb.pdu.id, tb.pdu.ue, tb.direction, tb.control_tick, tb.first_tx_tick, grant.end_tick,
                    tb.attempts};
  }
  (tb.direction == link_direction::uplink ? ul_ : dl_).retx.push_back(tb);
  return std::nullopt;
}

std::vector<delivery> mac_scheduler::run_srp(std::int64_t srp_index, const link_oracle& link) {
  admit_control(srp_index);
  auto grants = schedule_uplink(srp_index);
  auto dl_grants = schedule_downlink(srp_index);
  grants.insert(grants.end(), dl_grants.begin(), dl_grants.end());
  std::stable_sort(grants.begin(), grants.end(), [](const data_grant& a, const data_grant& b) {
    return std::tie(a.end_tick, a.tb.pdu.ue) < std::tie(b.end_tick, b.tb.pdu.ue);
  });

  std::vector<delivery> out;
  for (const auto& g : grants) {
    if (auto d = harq_step(g, link(g.tb.pdu.ue, g.tb.direction))) out.push_back(*d);
  }
  return out;
}

std::size_t mac_scheduler::backlog() const {
  std::size_t total = 0;
  for (const auto* f : {&ul_, &dl_}) {
    for (const auto& q : f->pending) total += q.size();
    total += f->admitted.size() + f->retx.size();
  }
  return total;
}

void audit_grant_log(const std::vector<grant_record>& log, int n_rb) {
  struct slot_use {
    std::vector<std::pair<int, int>> ranges;
    std::map<int, int> role;  // ue -> bit 1 transmit, bit 2 receive
  };
  std::map<std::pair<std::int64_t, int>, slot_use> slots;
  for (const auto& g : log) {
    if (g.rb_start < 0 || g.rb_len < 1 || g.rb_start + g.rb_len > n_rb) {
      throw invariant_violation("grant outside the RB grid at srp " + std::to_string(g.srp));
    }
    auto& s = slots[{g.srp, g.minislot}];
    for (auto [a, len] : s.ranges) {
      if (g.rb_start < a + len && a < g.rb_start + g.rb_len) {
        throw invariant_violation("RB granted twice at srp " + std::to_string(g.srp) + " mini-slot " +
                                  std::to_string(g.minislot));
      }
    }
    s.ranges.emplace_back(g.rb_start, g.rb_len);
    const bool tx = g.kind == message_kind::pucch || g.kind == message_kind::pusch;
    int& role = s.role[g.ue];
    role |= tx ? 1 : 2;
    if (role == 3) {
      throw invariant_violation("UE " + std::to_string(g.ue) + " transmits and receives in srp " +
                                std::to_string(g.srp) + " mini-slot " + std::to_string(g.minislot));
    }
  }
}

std::string grant_log_csv(const std::vector<grant_record>& log) {
  std::ostringstream out;
  out << "srp_index,minislot,ue_id,kind,rb_start,rb_len\n";
  for (const auto& g : log) {
    out << g.srp << ',' << g.minislot << ',' << g.ue << ',' << to_string(g.kind) << ',' << g.rb_start << ','
        << g.rb_len << '\n';
  }
  return out.str();
}

}  // namespace nrsim
