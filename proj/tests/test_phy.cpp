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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "nrsim/error.hpp"
#include "nrsim/phy.hpp"
#include "nrsim/rng.hpp"
#include "nrsim/stats.hpp"

using namespace nrsim;

namespace {

// Independent oracles: integer arithmetic only.
int oracle_n_rb(long long bandwidth_hz, int scs_khz) { return static_cast<int>(bandwidth_hz / (12LL * scs_khz * 1000)); }

int oracle_tb_bytes(int bits, int symbols) { return 12 * symbols * bits / 8; }

int oracle_rbs(int bytes, int per_rb) { return (bytes + per_rb - 1) / per_rb; }

}  // namespace

TEST_CASE("n_rb published values") {
  CHECK(n_rb(5e6, numerology::from_scs_khz(30)) == 13);
  CHECK(n_rb(100e6, numerology::from_scs_khz(120)) == 69);
  CHECK(n_rb(20e6, numerology::from_scs_khz(60)) == 27);
  CHECK_THROWS_AS(n_rb(0.3e6, numerology::from_scs_khz(30)), config_error);
}

TEST_CASE("numerology rejects unsupported spacing") {
  CHECK_THROWS_AS(numerology::from_scs_khz(15), config_error);
  CHECK_THROWS_AS(numerology::from_scs_khz(240), config_error);
  CHECK(numerology::from_scs_khz(120).mu() == 3);
}

TEST_CASE("n_rb bracket and monotonicity over a grid") {
  for (int scs : {30, 60, 120}) {
    const auto num = numerology::from_scs_khz(scs);
    int prev = 0;
    for (long long bw = 2'000'000; bw <= 200'000'000; bw += 250'000) {
      const int n = n_rb(static_cast<double>(bw), num);
      const long long rb_hz = 12LL * scs * 1000;
      CHECK(n == oracle_n_rb(bw, scs));
      CHECK(rb_hz * n <= bw);
      CHECK(bw < rb_hz * (n + 1));
      CHECK(n >= prev);
      prev = n;
    }
  }
  for (double bw : {20e6, 50e6, 100e6}) {
    CHECK(n_rb(bw, numerology::from_scs_khz(30)) >= n_rb(bw, numerology::from_scs_khz(60)));
    CHECK(n_rb(bw, numerology::from_scs_khz(60)) >= n_rb(bw, numerology::from_scs_khz(120)));
  }
}

TEST_CASE("transport block bytes per RB") {
  CHECK(tb_bytes_per_rb(256) == 48);
  CHECK(tb_bytes_per_rb(64) == 36);
  CHECK(tb_bytes_per_rb(4) == 12);
  CHECK_THROWS_AS(tb_bytes_per_rb(16), config_error);
  int prev = 0;
  for (int m : {4, 64, 256}) {
    CHECK(tb_bytes_per_rb(m) > prev);
    prev = tb_bytes_per_rb(m);
    CHECK(tb_bytes_per_rb(m, 8) == 2 * tb_bytes_per_rb(m, 4));
    CHECK(tb_bytes_per_rb(m) == oracle_tb_bytes(bits_per_symbol(m), 4));
  }
}

TEST_CASE("PDU sizes and RB counts") {
  radio_config rc;
  CHECK(pdu_bytes(32, rc) == 104);
  CHECK(pdu_bytes(1, rc) == 73);
  CHECK_THROWS_AS(pdu_bytes(0, rc), config_error);
  CHECK(rbs_for_pdu(104, 256) == 3);
  CHECK(rbs_for_pdu(73, 256) == 2);
  CHECK(rbs_for_pdu(104, 64) == 3);
  CHECK(rbs_for_pdu(48, 256) == 1);
}

TEST_CASE("rbs_for_pdu brackets the PDU size") {
  for (int m : {4, 64, 256}) {
    const int per_rb = tb_bytes_per_rb(m);
    for (int bytes = 1; bytes <= 2000; ++bytes) {
      const int r = rbs_for_pdu(bytes, m);
      CHECK(r == oracle_rbs(bytes, per_rb));
      CHECK(r * per_rb >= bytes);
      CHECK((r - 1) * per_rb < bytes);
    }
  }
}

TEST_CASE("scheduling period duration") {
  CHECK(srp_duration_ms(numerology::from_scs_khz(30)) == doctest::Approx(2.0));
  CHECK(srp_duration_ms(numerology::from_scs_khz(60)) == doctest::Approx(1.0));
  CHECK(srp_duration_ms(numerology::from_scs_khz(120)) == doctest::Approx(0.5));
  CHECK(srp_ticks == 56);
  CHECK(numerology::from_scs_khz(30).ticks_from_ms(2.0) == srp_ticks);
}

TEST_CASE("oversized PDU is rejected") {
  radio_config rc;
  rc.ul_payload_bytes = 13 * 48;  // 696 B needs 15 RBs on a 13 RB grid
  CHECK_THROWS_AS(validate(rc), config_error);
  rc.ul_payload_bytes = 32;
  CHECK_NOTHROW(validate(rc));
}

TEST_CASE("control messages use QPSK") {
  CHECK(message_geometry(message_kind::pucch).rb_count == 1);
  CHECK(message_geometry(message_kind::pusch, 3).symbol_count == data_channel_symbols);
}

TEST_CASE("rng streams are reproducible and separated") {
  auto a = rng_stream::derive(7, "ul", 3);
  auto b = rng_stream::derive(7, "ul", 3);
  auto c = rng_stream::derive(7, "dl", 3);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    differs |= x != c.uniform();
  }
  CHECK(differs);
}

TEST_CASE("Student-t interval matches the closed form") {
  // Two values: half-width = t_{0.95,1} * s / sqrt(2) with s = |a-b|/sqrt(2).
  const std::vector<double> xs = {1.0, 3.0};
  CHECK(ci_halfwidth(xs) == doctest::Approx(6.313751514675 * 1.0).epsilon(1e-9));
  CHECK(student_t_quantile(0.95, 19) == doctest::Approx(1.729132812).epsilon(1e-8));
  const std::vector<double> same(20, 4.2);
  CHECK(ci_halfwidth(same) == 0.0);
  CHECK(mean(same) == doctest::Approx(4.2));
}
