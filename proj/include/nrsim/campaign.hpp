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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nrsim/e2e.hpp"
#include "nrsim/sim.hpp"

namespace nrsim {

/// Flat `key = value` file. '#' starts a comment; blank lines are ignored.
/// Keys remember their line so later validation can point at it.
class kv_config {
 public:
  struct entry {
    std::string value;
    int line = 0;
  };

  static kv_config parse(std::istream& in, const std::string& source = "config");
  static kv_config load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value);
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  const std::map<std::string, entry>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

 private:
  std::string source_ = "config";
  std::map<std::string, entry> entries_;
};

enum class figure { none, fig2, fig3, fig5 };

figure parse_figure(const std::string& text);
const char* to_string(figure f);

/// One simulated configuration of a campaign. arch is 0 when the point is
/// not tied to an architecture preset.
struct campaign_point {
  sim_config config;
  int arch = 0;
};

struct campaign_spec {
  sim_config base;
  // Sweep axes; an empty axis keeps the base value. Enumerated as a
  // cartesian product with the first axis outermost.
  std::vector<int> n_ues;
  std::vector<double> bandwidth_mhz;
  std::vector<int> scs_khz;
  std::vector<int> mod_order;
  std::vector<int> arch;

  std::uint64_t seed = 1;
  int replications = 20;
  std::filesystem::path out_dir = "out";
  figure fig = figure::none;
  bool write_transactions = false;
  bool write_grant_log = false;

  server_model server;
  std::vector<std::pair<std::string, double>> advances = {{"m5", 0.27}, {"m10", 0.80}};
  double slack_ms = 0.0;
};

/// Builds a campaign from configuration keys (radio.*, traffic.*, channel.*,
/// sched.*, server.*, arch.*, sweep.*, advance.*, campaign.*). Throws
/// config_error naming the offending line.
campaign_spec build_campaign(const kv_config& kv);

/// Grid of N values used by the figure sweeps: 1, 5, 10, ..., 50.
std::vector<int> figure_n_grid();

/// Points of a campaign; the figure presets replace the sweep axes.
std::vector<campaign_point> enumerate_points(const campaign_spec& spec);

struct point_result {
  campaign_point point;
  sim_report report;
  std::vector<replication_result> replications;  // kept only when requested
};

std::vector<point_result> run_points(const campaign_spec& spec, int workers);

/// Long-format plot data for one figure. Throws config_error listing the
/// configurations the result set is missing.
std::string emit_plot_data(const std::vector<point_result>& results, figure fig,
                           const campaign_spec& spec);

std::string summary_csv(const std::vector<point_result>& results, const campaign_spec& spec);
std::string feasibility_csv(const std::vector<point_result>& results, const campaign_spec& spec);
std::string reports_json(const std::vector<point_result>& results);

/// Writes through a temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Runs a full campaign and writes every output file; returns the paths written.
std::vector<std::filesystem::path> run_and_write(const campaign_spec& spec, int workers, std::ostream& log);

}  // namespace nrsim
