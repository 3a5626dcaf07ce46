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

#include "nrsim/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "nrsim/error.hpp"

namespace nrsim {

double mean(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_stddev(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  // Shifted by the first value so identical inputs give exactly zero.
  const double shift = xs.front();
  double sum = 0.0, ss = 0.0;
  for (double x : xs) sum += x - shift;
  const double mu = sum / static_cast<double>(xs.size());
  for (double x : xs) ss += (x - shift - mu) * (x - shift - mu);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double student_t_quantile(double prob, int dof) {
  if (dof < 1) throw config_error("Student-t needs at least one degree of freedom");
  return boost::math::quantile(boost::math::students_t(dof), prob);
}

double ci_halfwidth(std::span<const double> xs, double level) {
  if (xs.size() < 2) return 0.0;
  const double s = sample_stddev(xs);
  if (s == 0.0) return 0.0;
  const double t = student_t_quantile(0.5 + level / 2.0, static_cast<int>(xs.size()) - 1);
  return t * s / std::sqrt(static_cast<double>(xs.size()));
}

}  // namespace nrsim
