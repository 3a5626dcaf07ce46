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

namespace nrsim {

inline constexpr int symbols_per_slot = 14;
inline constexpr int symbols_per_minislot = 7;
inline constexpr int subcarriers_per_rb = 12;
inline constexpr int minislots_per_srp = 8;
inline constexpr int data_channel_symbols = 4;
inline constexpr int control_mod_order = 4;

/// Simulation time in OFDM symbols of the configured numerology.
using tick_t = std::int64_t;

/// NR numerology for the subcarrier spacings supported here (30, 60, 120 kHz).
class numerology {
 public:
  /// Throws config_error for any other spacing.
  static numerology from_scs_khz(int scs_khz);

  int scs_khz() const { return scs_khz_; }
  int mu() const { return mu_; }
  double scs_hz() const { return scs_khz_ * 1e3; }

  double slot_duration_ms() const { return 1.0 / (1 << mu_); }
  double symbol_duration_ms() const { return slot_duration_ms() / symbols_per_slot; }
  double minislot_duration_ms() const { return symbol_duration_ms() * symbols_per_minislot; }
  int symbols_per_ms() const { return symbols_per_slot << mu_; }

  /// Nearest whole number of symbols to a duration in milliseconds.
  tick_t ticks_from_ms(double ms) const;
  double ms_from_ticks(tick_t ticks) const { return static_cast<double>(ticks) * symbol_duration_ms(); }

  friend bool operator==(const numerology&, const numerology&) = default;

 private:
  numerology(int scs_khz, int mu) : scs_khz_(scs_khz), mu_(mu) {}

  int scs_khz_;
  int mu_;
};

enum class message_kind { pucch, pdcch, pusch, pdsch, harq_ack };

const char* to_string(message_kind kind);

struct message_spec {
  message_kind kind;
  int rb_count;
  int symbol_count;
};

/// Time/frequency footprint of a message. rb_count is only honoured for
/// PUSCH/PDSCH; control messages always occupy a single RB.
message_spec message_geometry(message_kind kind, int rb_count = 1);

struct radio_config {
  double bandwidth_hz = 5e6;
  numerology num = numerology::from_scs_khz(30);
  int mod_order = 256;
  int header_bytes = 72;
  int ul_payload_bytes = 32;
  int dl_payload_bytes = 1;
};

int n_rb(double bandwidth_hz, const numerology& num);
int n_rb(const radio_config& config);

int bits_per_symbol(int mod_order);
int tb_bytes_per_rb(int mod_order, int symbol_count = data_channel_symbols);
int pdu_bytes(int payload_bytes, const radio_config& config);
int rbs_for_pdu(int pdu_bytes, int mod_order);

double srp_duration_ms(const numerology& num);
inline constexpr tick_t srp_ticks = minislots_per_srp * symbols_per_minislot;

/// Rejects configurations with no usable RB or with PDUs that would not fit
/// in a single mini-slot across the full grid.
void validate(const radio_config& config);

}  // namespace nrsim
