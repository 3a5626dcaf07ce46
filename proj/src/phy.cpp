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

#include "nrsim/phy.hpp"

#include <cmath>
#include <string>

#include "nrsim/error.hpp"

namespace nrsim {

numerology numerology::from_scs_khz(int scs_khz) {
  switch (scs_khz) {
    case 30:
      return {30, 1};
    case 60:
      return {60, 2};
    case 120:
      return {120, 3};
    default:
      throw config_error("unsupported subcarrier spacing " + std::to_string(scs_khz) +
                         " kHz (expected 30, 60 or 120)");
  }
}

tick_t numerology::ticks_from_ms(double ms) const {
  return static_cast<tick_t>(std::llround(ms * symbols_per_ms()));
}

const char* to_string(message_kind kind) {
  switch (kind) {
    case message_kind::pucch:
      return "PUCCH";
    case message_kind::pdcch:
      return "PDCCH";
    case message_kind::pusch:
      return "PUSCH";
    case message_kind::pdsch:
      return "PDSCH";
    case message_kind::harq_ack:
      return "HARQ_ACK";
  }
  return "?";
}

message_spec message_geometry(message_kind kind, int rb_count) {
  switch (kind) {
    case message_kind::pucch:
    case message_kind::pdcch:
      return {kind, 1, symbols_per_minislot};
    case message_kind::pusch:
    case message_kind::pdsch:
      if (rb_count < 1) throw config_error("data channel needs at least one RB");
      return {kind, rb_count, data_channel_symbols};
    case message_kind::harq_ack:
      return {kind, 1, 2};
  }
  throw config_error("unknown message kind");
}

int n_rb(double bandwidth_hz, const numerology& num) {
  if (!(bandwidth_hz > 0)) throw config_error("bandwidth must be positive");
  // Small slack so that exact ratios are not lost to rounding of B/(12*df).
  const double ratio = bandwidth_hz / (subcarriers_per_rb * num.scs_hz());
  const int rbs = static_cast<int>(std::floor(ratio + 1e-9));
  if (rbs < 1) {
    throw config_error("bandwidth " + std::to_string(bandwidth_hz) + " Hz is too small for one RB at " +
                       std::to_string(num.scs_khz()) + " kHz");
  }
  return rbs;
}

int n_rb(const radio_config& config) { return n_rb(config.bandwidth_hz, config.num); }

int bits_per_symbol(int mod_order) {
  switch (mod_order) {
    case 4:
      return 2;
    case 64:
      return 6;
    case 256:
      return 8;
    default:
      throw config_error("unsupported modulation order " + std::to_string(mod_order) +
                         " (expected 4, 64 or 256)");
  }
}

int tb_bytes_per_rb(int mod_order, int symbol_count) {
  if (symbol_count < 1) throw config_error("symbol count must be positive");
  return subcarriers_per_rb * symbol_count * bits_per_symbol(mod_order) / 8;
}

int pdu_bytes(int payload_bytes, const radio_config& config) {
  if (payload_bytes < 1) throw config_error("payload must be at least one byte");
  return payload_bytes + config.header_bytes;
}

int rbs_for_pdu(int pdu_bytes, int mod_order) {
  if (pdu_bytes < 1) throw config_error("PDU must be at least one byte");
  const int per_rb = tb_bytes_per_rb(mod_order, data_channel_symbols);
  return (pdu_bytes + per_rb - 1) / per_rb;
}

double srp_duration_ms(const numerology& num) { return minislots_per_srp * num.minislot_duration_ms(); }

void validate(const radio_config& config) {
  const int rbs = n_rb(config);
  if (config.header_bytes < 0) throw config_error("header size must be non-negative");
  for (int payload : {config.ul_payload_bytes, config.dl_payload_bytes}) {
    const int need = rbs_for_pdu(pdu_bytes(payload, config), config.mod_order);
    if (need > rbs) {
      throw config_error("a " + std::to_string(pdu_bytes(payload, config)) + " B PDU needs " + std::to_string(need) +
                         " RBs but a mini-slot only has " + std::to_string(rbs) + "; segmentation is not supported");
    }
  }
}

}  // namespace nrsim
