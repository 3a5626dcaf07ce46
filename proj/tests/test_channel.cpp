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

#include "doctest.h"
#include "nrsim/channel.hpp"
#include "nrsim/error.hpp"

using namespace nrsim;

TEST_CASE("steady state") {
  const auto cal = calibrated_params(0.01);
  CHECK(steady_state(cal).bad == doctest::Approx(0.01).epsilon(1e-12));
  const auto sym = steady_state({1.0, 0.0, 0.3, 0.3});
  CHECK(sym.good == doctest::Approx(0.5));
  CHECK(sym.bad == doctest::Approx(0.5));
  const auto absorbing = steady_state({1.0, 0.0, 0.0, 0.4});
  CHECK(absorbing.good == 1.0);
  CHECK(absorbing.bad == 0.0);
  for (double u : {0.0, 0.001, 0.2, 0.7, 1.0}) {
    for (double v : {0.05, 0.5, 1.0}) {
      const auto s = steady_state({1.0, 0.0, u, v});
      CHECK(s.good + s.bad == 1.0);
    }
  }
}

TEST_CASE("error rate") {
  CHECK(error_rate({1.0, 0.0, 0.5 * 0.01 / 0.99, 0.5}) == doctest::Approx(0.01));
  CHECK(error_rate({0.9, 0.9, 0.13, 0.4}) == doctest::Approx(0.1));
  CHECK(error_rate({0.99, 0.5, 0.1, 0.9}) == doctest::Approx(0.059));
}

TEST_CASE("calibration") {
  CHECK(calibrate_u(0.01, 1.0, 0.0, 0.5) == doctest::Approx(0.00505051).epsilon(1e-6));
  CHECK(calibrate_u(0.25, 0.75, 0.0, 0.5) == 0.0);
  CHECK_THROWS_AS(calibrate_u(0.01, 0.95, 0.0, 0.5), config_error);
  CHECK_THROWS_AS(calibrate_u(1.0, 1.0, 0.0, 0.5), config_error);
  // calibrate then evaluate recovers the target; evaluate then calibrate recovers u.
  for (double g : {1.0, 0.995}) {
    for (double b : {0.0, 0.3}) {
      for (double v : {0.1, 0.5, 0.9}) {
        for (double u : {0.001, 0.01, 0.05}) {
          const double pe = error_rate({g, b, u, v});
          CHECK(std::abs(calibrate_u(pe, g, b, v) - u) <= 1e-12 * u);
        }
      }
    }
  }
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((gilbert_elliott_params{1.2, 0.0, 0.1, 0.1}.validate()), config_error);
  CHECK_THROWS_AS((gilbert_elliott_params{1.0, 0.0, 0.0, 0.0}.validate()), config_error);
}

TEST_CASE("degenerate states") {
  rng_stream s(3);
  const gilbert_elliott_params p{1.0, 0.0, 0.3, 0.3};
  for (int i = 0; i < 1000; ++i) {
    CHECK(sample(ge_state::good, p, s).success);
    CHECK_FALSE(sample(ge_state::bad, p, s).success);
  }
}

TEST_CASE("Monte-Carlo error frequency and occupancy") {
  const auto p = calibrated_params(0.01);
  gilbert_elliott_channel ch(p, rng_stream::derive(11, "mc"));
  const int n = 1'000'000;
  int errors = 0, bad = 0;
  for (int i = 0; i < n; ++i) {
    bad += ch.state() == ge_state::bad;
    errors += !ch.transmit();
  }
  // Bursty chain: the effective sample size is reduced by (1 + rho)/(1 - rho)
  // with rho = 1 - u - v the lag-one state correlation.
  const double rho = 1.0 - p.u - p.v;
  const double pb = steady_state(p).bad;
  const double se = std::sqrt(pb * (1 - pb) / n * (1 + rho) / (1 - rho));
  CHECK(std::abs(static_cast<double>(bad) / n - pb) < 3 * se);
  CHECK(std::abs(static_cast<double>(errors) / n - error_rate(p)) < 3 * se);
  CHECK(1.0 - static_cast<double>(errors) / n == doctest::Approx(0.99).epsilon(0.002));
}

TEST_CASE("channel determinism") {
  const auto p = calibrated_params(0.2);
  gilbert_elliott_channel a(p, rng_stream::derive(5, "x"));
  gilbert_elliott_channel b(p, rng_stream::derive(5, "x"));
  for (int i = 0; i < 10000; ++i) CHECK(a.transmit() == b.transmit());
}
