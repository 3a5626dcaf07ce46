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

#include "nrsim/rng.hpp"

namespace nrsim {

/// Two-state Markov error process. g and b are the probabilities of correct
/// reception in the good and bad states; u is P(G->B) and v is P(B->G).
struct gilbert_elliott_params {
  double g = 1.0;
  double b = 0.0;
  double u = 0.0;
  double v = 0.5;

  /// Throws config_error unless every field is a probability and u + v > 0.
  void validate() const;
};

struct steady_state_probs {
  double good;
  double bad;
};

steady_state_probs steady_state(const gilbert_elliott_params& params);

/// Long-run probability that a transmission is lost.
double error_rate(const gilbert_elliott_params& params);

/// Solves for the G->B transition probability that yields target_pe given
/// g, b and v. Valid for (1 - g) <= target_pe < (1 - b).
double calibrate_u(double target_pe, double g, double b, double v);

gilbert_elliott_params calibrated_params(double target_pe, double g = 1.0, double b = 0.0, double v = 0.5);

enum class ge_state { good, bad };

struct ge_sample {
  bool success;
  ge_state next;
};

/// One transmission on the chain: the first draw decides success in the
/// current state, the second decides the state transition.
ge_sample sample(ge_state state, const gilbert_elliott_params& params, rng_stream& stream);

/// A channel instance owned by one link of one replication. It advances once
/// per transmission attempt, independently of elapsed time.
class gilbert_elliott_channel {
 public:
  /// Initial state is drawn from the stationary distribution (one draw).
  gilbert_elliott_channel(const gilbert_elliott_params& params, rng_stream stream);
  gilbert_elliott_channel(const gilbert_elliott_params& params, rng_stream stream, ge_state initial);

  bool transmit();
  ge_state state() const { return state_; }
  const gilbert_elliott_params& params() const { return params_; }

 private:
  gilbert_elliott_params params_;
  rng_stream stream_;
  ge_state state_;
};

}  // namespace nrsim
