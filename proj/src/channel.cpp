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

#include "nrsim/channel.hpp"

#include <string>

#include "nrsim/error.hpp"

namespace nrsim {
namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void gilbert_elliott_params::validate() const {
  if (!is_probability(g) || !is_probability(b) || !is_probability(u) || !is_probability(v)) {
    throw config_error("Gilbert-Elliot parameters must lie in [0, 1]");
  }
  if (!(u + v > 0.0)) throw config_error("Gilbert-Elliot chain needs u + v > 0 for a steady state");
}

steady_state_probs steady_state(const gilbert_elliott_params& params) {
  params.validate();
  const double bad = params.u / (params.u + params.v);
  return {1.0 - bad, bad};
}

double error_rate(const gilbert_elliott_params& params) {
  const auto pi = steady_state(params);
  return (1.0 - params.g) * pi.good + (1.0 - params.b) * pi.bad;
}

double calibrate_u(double target_pe, double g, double b, double v) {
  const double floor_pe = 1.0 - g;
  const double ceil_pe = 1.0 - b;
  if (!(v > 0.0 && v <= 1.0)) throw config_error("calibration needs v in (0, 1]");
  if (!(target_pe >= floor_pe && target_pe < ceil_pe)) {
    throw config_error("target error rate " + std::to_string(target_pe) + " outside achievable range [" +
                       std::to_string(floor_pe) + ", " + std::to_string(ceil_pe) + ")");
  }
  const double u = v * (target_pe - floor_pe) / (ceil_pe - target_pe);
  if (u > 1.0) throw config_error("target error rate needs u > 1; raise v");
  return u;
}

gilbert_elliott_params calibrated_params(double target_pe, double g, double b, double v) {
  return {g, b, calibrate_u(target_pe, g, b, v), v};
}

ge_sample sample(ge_state state, const gilbert_elliott_params& params, rng_stream& stream) {
  const bool good = state == ge_state::good;
  const bool success = stream.uniform() < (good ? params.g : params.b);
  const double leave = good ? params.u : params.v;
  const bool flip = stream.uniform() < leave;
  const ge_state next = flip ? (good ? ge_state::bad : ge_state::good) : state;
  return {success, next};
}

gilbert_elliott_channel::gilbert_elliott_channel(const gilbert_elliott_params& params, rng_stream stream)
    : params_(params), stream_(std::move(stream)), state_(ge_state::good) {
  const auto pi = steady_state(params_);
  state_ = stream_.uniform() < pi.bad ? ge_state::bad : ge_state::good;
}

gilbert_elliott_channel::gilbert_elliott_channel(const gilbert_elliott_params& params, rng_stream stream,
                                                 ge_state initial)
    : params_(params), stream_(std::move(stream)), state_(initial) {
  params_.validate();
}

bool gilbert_elliott_channel::transmit() {
  const auto [success, next] = sample(state_, params_, stream_);
  state_ = next;
  return success;
}

}  // namespace nrsim
