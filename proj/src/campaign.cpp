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

#include "nrsim/campaign.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "nrsim/error.hpp"

namespace nrsim {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

class reader {
 public:
  explicit reader(const kv_config& kv) : kv_(kv) {}

  [[noreturn]] void fail(const std::string& key, const std::string& why) const {
    const auto it = kv_.entries().find(key);
    const int line = it == kv_.entries().end() ? 0 : it->second.line;
    const std::string where = line > 0 ? kv_.source() + ":" + std::to_string(line) : std::string("command line");
    throw config_error(where + ": " + key + ": " + why);
  }

  const std::string* raw(const std::string& key) {
    used_.insert(key);
    const auto it = kv_.entries().find(key);
    return it == kv_.entries().end() ? nullptr : &it->second.value;
  }

  template <typename T>
  bool get(const std::string& key, T& out) {
    const auto* v = raw(key);
    if (!v) return false;
    out = convert<T>(key, *v);
    return true;
  }

  template <typename T>
  bool get_list(const std::string& key, std::vector<T>& out) {
    const auto* v = raw(key);
    if (!v) return false;
    out.clear();
    std::istringstream in(*v);
    for (std::string item; std::getline(in, item, ',');) {
      item = trim(item);
      if (item.empty()) fail(key, "empty list element");
      out.push_back(convert<T>(key, item));
    }
    if (out.empty()) fail(key, "empty list");
    return true;
  }

  void mark_used(const std::string& key) { used_.insert(key); }

  void reject_unknown() const {
    for (const auto& [key, e] : kv_.entries()) {
      if (!used_.count(key)) fail(key, "unknown key");
    }
  }

  template <typename T>
  T convert(const std::string& key, const std::string& text) const {
    std::istringstream in(text);
    T value{};
    if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1" || text == "yes") return true;
      if (text == "false" || text == "0" || text == "no") return false;
      fail(key, "'" + text + "' is not a boolean");
    } else {
      in >> value;
      if (in.fail() || !in.eof()) fail(key, "'" + text + "' is not a valid number");
      return value;
    }
  }

 private:
  const kv_config& kv_;
  std::set<std::string> used_;
};

const std::vector<std::pair<double, int>> fig2_pairs = {{5.0, 30}, {20.0, 60}, {100.0, 120}};
const std::vector<std::pair<double, int>> fig3_pairs = {{5.0, 30}, {20.0, 60}};

std::string series_label(const sim_config& c, bool with_m) {
  std::ostringstream s;
  s << "B=" << c.radio.bandwidth_hz / 1e6 << "MHz SCS=" << c.radio.num.scs_khz() << "kHz";
  if (with_m) s << " M=" << c.radio.mod_order;
  return s.str();
}

std::string seeds_header(const campaign_spec& spec) {
  std::ostringstream s;
  s << "# nrsim seeds=" << spec.seed << ".." << spec.seed + static_cast<std::uint64_t>(spec.replications) - 1
    << " replications=" << spec.replications << "\n";
  return s.str();
}

const point_result* find_point(const std::vector<point_result>& results, double bw_mhz, int scs, int m, double t_cn,
                               int n) {
  for (const auto& r : results) {
    const auto& c = r.point.config;
    if (std::abs(c.radio.bandwidth_hz - bw_mhz * 1e6) < 1.0 && c.radio.num.scs_khz() == scs &&
        c.radio.mod_order == m && std::abs(c.t_cn_ms - t_cn) < 1e-9 && c.traffic.n_ues == n) {
      return &r;
    }
  }
  return nullptr;
}

}  // namespace

kv_config kv_config::parse(std::istream& in, const std::string& source) {
  kv_config kv;
  kv.source_ = source;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw config_error(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw config_error(source + ":" + std::to_string(line_no) + ": missing key");
    if (value.empty()) throw config_error(source + ":" + std::to_string(line_no) + ": " + key + ": missing value");
    if (kv.entries_.count(key)) {
      throw config_error(source + ":" + std::to_string(line_no) + ": " + key + ": duplicate key (first on line " +
                         std::to_string(kv.entries_[key].line) + ")");
    }
    kv.entries_[key] = {value, line_no};
  }
  return kv;
}

kv_config kv_config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path.string());
  return parse(in, path.string());
}

void kv_config::set(const std::string& key, std::string value) { entries_[key] = {std::move(value), 0}; }

figure parse_figure(const std::string& text) {
  if (text == "none" || text.empty()) return figure::none;
  if (text == "fig2") return figure::fig2;
  if (text == "fig3") return figure::fig3;
  if (text == "fig5") return figure::fig5;
  throw config_error("unknown figure '" + text + "' (expected fig2, fig3 or fig5)");
}

const char* to_string(figure f) {
  switch (f) {
    case figure::fig2:
      return "fig2";
    case figure::fig3:
      return "fig3";
    case figure::fig5:
      return "fig5";
    case figure::none:
      break;
  }
  return "none";
}

campaign_spec build_campaign(const kv_config& kv) {
  reader r(kv);
  campaign_spec spec;
  auto& c = spec.base;

  int base_arch = 0;
  if (r.get("arch.id", base_arch)) {
    try {
      c = architecture(base_arch).apply(c);
    } catch (const config_error& e) {
      r.fail("arch.id", e.what());
    }
    for (const char* key : {"radio.bandwidth_mhz", "radio.scs_khz", "radio.mod_order"}) {
      if (kv.has(key)) r.fail(key, "conflicts with arch.id; presets fix the radio settings");
    }
  }

  double bw_mhz = c.radio.bandwidth_hz / 1e6;
  if (r.get("radio.bandwidth_mhz", bw_mhz)) c.radio.bandwidth_hz = bw_mhz * 1e6;
  int scs = c.radio.num.scs_khz();
  if (r.get("radio.scs_khz", scs)) {
    try {
      c.radio.num = numerology::from_scs_khz(scs);
    } catch (const config_error& e) {
      r.fail("radio.scs_khz", e.what());
    }
  }
  r.get("radio.mod_order", c.radio.mod_order);
  r.get("radio.header_bytes", c.radio.header_bytes);
  r.get("radio.ul_payload_bytes", c.radio.ul_payload_bytes);
  r.get("radio.dl_payload_bytes", c.radio.dl_payload_bytes);
  r.get("radio.t_p_gnb_symbols", c.processing.gnb_symbols);
  r.get("radio.t_p_ue_symbols", c.processing.ue_symbols);
  r.get("arch.t_cn_ms", c.t_cn_ms);

  r.get("traffic.n_ues", c.traffic.n_ues);
  r.get("traffic.ul_period_ms", c.traffic.ul_period_ms);
  r.get("traffic.p_dl", c.traffic.p_dl);
  r.get("traffic.sim_time_s", c.traffic.sim_time_s);
  if (r.get("traffic.replications", c.traffic.n_replications)) spec.replications = c.traffic.n_replications;

  double g = 1.0, b = 0.0, v = 0.5, target = 0.01;
  r.get("channel.g", g);
  r.get("channel.b", b);
  r.get("channel.v", v);
  r.get("channel.target_pe", target);
  try {
    c.channel = calibrated_params(target, g, b, v);
  } catch (const config_error& e) {
    r.fail(kv.has("channel.target_pe") ? "channel.target_pe" : "channel.v", e.what());
  }

  std::string text;
  if (r.get("sched.policy", text)) {
    try {
      c.sched.policy = parse_policy(text);
    } catch (const config_error& e) {
      r.fail("sched.policy", e.what());
    }
  }
  if (r.get("sched.control_pattern", text)) {
    try {
      c.sched.pattern = parse_control_pattern(text);
    } catch (const config_error& e) {
      r.fail("sched.control_pattern", e.what());
    }
  }
  r.get("sched.pusch_minislots", c.sched.pusch_minislots);
  r.get("sched.pdsch_minislots", c.sched.pdsch_minislots);

  if (r.get("server.anchors", text)) {
    spec.server.anchors.clear();
    std::istringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
      const auto colon = item.find(':');
      if (colon == std::string::npos) r.fail("server.anchors", "expected n:ms pairs separated by commas");
      spec.server.anchors.emplace_back(r.convert<double>("server.anchors", trim(item.substr(0, colon))),
                                       r.convert<double>("server.anchors", trim(item.substr(colon + 1))));
    }
  }
  r.get("server.t_a_ms", spec.server.t_a_ms);
  try {
    spec.server.validate();
  } catch (const config_error& e) {
    r.fail("server.anchors", e.what());
  }

  r.get_list("sweep.n_ues", spec.n_ues);
  r.get_list("sweep.bandwidth_mhz", spec.bandwidth_mhz);
  r.get_list("sweep.scs_khz", spec.scs_khz);
  r.get_list("sweep.mod_order", spec.mod_order);
  if (r.get_list("sweep.arch", spec.arch)) {
    for (int a : spec.arch) {
      if (a < 1 || a > 4) r.fail("sweep.arch", "unknown architecture " + std::to_string(a));
    }
    for (const char* key : {"sweep.bandwidth_mhz", "sweep.scs_khz", "sweep.mod_order", "arch.id"}) {
      if (kv.has(key)) r.fail(key, "cannot be combined with sweep.arch");
    }
  }
  if (base_arch && spec.arch.empty()) spec.arch = {base_arch};

  std::vector<std::pair<std::string, double>> advances;
  for (const auto& [key, e] : kv.entries()) {
    if (key.rfind("advance.", 0) == 0) {
      r.mark_used(key);
      const double s = r.convert<double>(key, e.value);
      if (!(s > 0)) r.fail(key, "advance must be positive");
      advances.emplace_back(key.substr(8), s);
    }
  }
  if (!advances.empty()) {
    std::stable_sort(advances.begin(), advances.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    spec.advances = advances;
  }
  r.get("feasibility.slack_ms", spec.slack_ms);

  r.get("campaign.seed", spec.seed);
  std::string out_dir;
  if (r.get("campaign.out_dir", out_dir)) spec.out_dir = out_dir;
  if (r.get("campaign.figure", text)) {
    try {
      spec.fig = parse_figure(text);
    } catch (const config_error& e) {
      r.fail("campaign.figure", e.what());
    }
  }
  r.get("campaign.transactions", spec.write_transactions);
  r.get("campaign.grant_log", spec.write_grant_log);
  r.reject_unknown();

  if (spec.replications < 2) r.fail("traffic.replications", "a campaign needs at least two replications");
  c.traffic.n_replications = spec.replications;
  try {
    for (const auto& p : enumerate_points(spec)) p.config.validate();
  } catch (const config_error& e) {
    throw config_error(kv.source() + ": " + e.what());
  }
  return spec;
}

std::vector<int> figure_n_grid() {
  std::vector<int> n = {1};
  for (int k = 5; k <= 50; k += 5) n.push_back(k);
  return n;
}

std::vector<campaign_point> enumerate_points(const campaign_spec& spec) {
  std::vector<campaign_point> points;
  const auto n_list = spec.n_ues.empty() ? (spec.fig == figure::none ? std::vector<int>{spec.base.traffic.n_ues}
                                                                     : figure_n_grid())
                                         : spec.n_ues;
  auto with_radio = [&](double bw_mhz, int scs, int m, double t_cn, int n) {
    sim_config c = spec.base;
    c.radio.bandwidth_hz = bw_mhz * 1e6;
    c.radio.num = numerology::from_scs_khz(scs);
    c.radio.mod_order = m;
    c.t_cn_ms = t_cn;
    c.traffic.n_ues = n;
    return c;
  };

  switch (spec.fig) {
    case figure::fig2:
      for (const auto& [bw, scs] : fig2_pairs) {
        for (int n : n_list) points.push_back({with_radio(bw, scs, 256, 0.0, n), 0});
      }
      return points;
    case figure::fig3:
      for (const auto& [bw, scs] : fig3_pairs) {
        for (int m : {64, 256}) {
          for (int n : n_list) points.push_back({with_radio(bw, scs, m, 0.0, n), 0});
        }
      }
      return points;
    case figure::fig5:
      for (const auto& preset : architecture_presets()) {
        for (int n : n_list) {
          sim_config c = preset.apply(spec.base);
          c.traffic.n_ues = n;
          points.push_back({c, preset.id});
        }
      }
      return points;
    case figure::none:
      break;
  }

  auto or_base = [](const auto& axis, auto base) {
    using T = std::decay_t<decltype(base)>;
    return axis.empty() ? std::vector<T>{base} : std::vector<T>(axis.begin(), axis.end());
  };
  const auto bws = or_base(spec.bandwidth_mhz, spec.base.radio.bandwidth_hz / 1e6);
  const auto scss = or_base(spec.scs_khz, spec.base.radio.num.scs_khz());
  const auto ms = or_base(spec.mod_order, spec.base.radio.mod_order);
  const auto archs = or_base(spec.arch, 0);
  for (int n : n_list) {
    for (double bw : bws) {
      for (int scs : scss) {
        for (int m : ms) {
          for (int a : archs) {
            if (a > 0) {
              sim_config c = architecture(a).apply(spec.base);
              c.traffic.n_ues = n;
              points.push_back({c, a});
            } else {
              points.push_back({with_radio(bw, scs, m, spec.base.t_cn_ms, n), 0});
            }
          }
        }
      }
    }
  }
  return points;
}

std::vector<point_result> run_points(const campaign_spec& spec, int workers) {
  const auto seeds = consecutive_seeds(spec.seed, spec.replications);
  const bool keep = spec.write_transactions || spec.write_grant_log;
  std::vector<point_result> out;
  for (auto p : enumerate_points(spec)) {
    p.config.sched.record_grants = spec.write_grant_log;
    point_result r;
    r.point = p;
    r.report = run_campaign(p.config, seeds, workers, keep ? &r.replications : nullptr);
    out.push_back(std::move(r));
  }
  return out;
}

std::string emit_plot_data(const std::vector<point_result>& results, figure fig, const campaign_spec& spec) {
  if (results.empty()) throw config_error("no reports to plot");
  if (fig == figure::none) throw config_error("no figure selected");
  const auto n_list = spec.n_ues.empty() ? figure_n_grid() : spec.n_ues;

  std::ostringstream out;
  std::vector<std::string> missing;
  out << seeds_header(spec);
  if (fig == figure::fig5) {
    out << "figure,arch,n_ues,component,value_ms,ci90_ms,config_hash\n";
    for (const auto& preset : architecture_presets()) {
      for (int n : n_list) {
        const auto* r = find_point(results, preset.bandwidth_hz / 1e6, preset.scs_khz, preset.mod_order, preset.t_cn_ms, n);
        if (!r) {
          missing.push_back("arch=" + std::to_string(preset.id) + " N=" + std::to_string(n));
          continue;
        }
        const auto rtt = compose_rtt(r->report, spec.server, &preset);
        const auto h = hex(r->report.config_hash);
        out << "fig5," << preset.id << ',' << n << ",t_5g_nr," << num(rtt.t_5g_nr_ms) << ',' << num(rtt.ci90_ms)
            << ',' << h << '\n';
        out << "fig5," << preset.id << ',' << n << ",t_p_s," << num(rtt.t_p_s_ms) << ",0.000000," << h << '\n';
        out << "fig5," << preset.id << ',' << n << ",t_a," << num(rtt.t_a_ms) << ",0.000000," << h << '\n';
      }
    }
  } else {
    const bool fig3 = fig == figure::fig3;
    out << "figure,series,bandwidth_mhz,scs_khz,mod_order,n_ues,mean_ms,ci90_ms,config_hash\n";
    std::vector<std::tuple<double, int, int>> series;
    for (const auto& [bw, scs] : fig3 ? fig3_pairs : fig2_pairs) {
      if (fig3) {
        series.emplace_back(bw, scs, 64);
        series.emplace_back(bw, scs, 256);
      } else {
        series.emplace_back(bw, scs, 256);
      }
    }
    for (const auto& [bw, scs, m] : series) {
      for (int n : n_list) {
        const auto* r = find_point(results, bw, scs, m, 0.0, n);
        std::ostringstream id;
        id << "B=" << bw << "MHz SCS=" << scs << "kHz M=" << m << " N=" << n;
        if (!r) {
          missing.push_back(id.str());
          continue;
        }
        out << to_string(fig) << ',' << series_label(r->point.config, fig3) << ',' << bw << ',' << scs << ',' << m
            << ',' << n << ',' << num(r->report.mean_t_5g_nr_ms) << ',' << num(r->report.ci90_halfwidth_ms) << ','
            << hex(r->report.config_hash) << '\n';
      }
    }
  }
  if (!missing.empty()) {
    std::string msg = std::string(to_string(fig)) + " is missing " + std::to_string(missing.size()) + " configuration(s):";
    for (const auto& m : missing) msg += "\n  " + m;
    throw config_error(msg);
  }
  return out.str();
}

std::string summary_csv(const std::vector<point_result>& results, const campaign_spec& spec) {
  std::ostringstream out;
  out << seeds_header(spec);
  out << "arch,n_ues,bandwidth_mhz,scs_khz,mod_order,t_cn_ms,policy,mean_t_5g_nr_ms,ci90_ms,mean_t_ran_ul_ms,"
         "mean_t_ran_dl_ms,full_loop_count,excluded_replications,config_hash\n";
  for (const auto& r : results) {
    const auto& c = r.point.config;
    out << r.point.arch << ',' << c.traffic.n_ues << ',' << c.radio.bandwidth_hz / 1e6 << ',' << c.radio.num.scs_khz()
        << ',' << c.radio.mod_order << ',' << num(c.t_cn_ms) << ',' << to_string(c.sched.policy) << ','
        << num(r.report.mean_t_5g_nr_ms) << ',' << num(r.report.ci90_halfwidth_ms) << ','
        << num(r.report.mean_t_ran_ul_ms) << ',' << num(r.report.mean_t_ran_dl_ms) << ','
        << r.report.full_loop_count << ',' << r.report.excluded.size() << ',' << hex(r.report.config_hash) << '\n';
  }
  return out.str();
}

std::string feasibility_csv(const std::vector<point_result>& results, const campaign_spec& spec) {
  std::ostringstream out;
  out << seeds_header(spec);
  out << "arch,n_ues,t_5g_nr_ms,t_p_s_ms,t_a_ms,rtt_ms,ci90_ms,advance_s,verdict,margin,slack_ms,config_hash\n";
  for (const auto& r : results) {
    if (r.point.arch == 0) continue;
    const auto rtt = compose_rtt(r.report, spec.server, &architecture(r.point.arch));
    for (const auto& [label, advance] : spec.advances) {
      const auto f = feasibility(rtt.rtt_ms(), advance, label, spec.slack_ms);
      out << r.point.arch << ',' << rtt.n_ues << ',' << num(rtt.t_5g_nr_ms) << ',' << num(rtt.t_p_s_ms) << ','
          << num(rtt.t_a_ms) << ',' << num(rtt.rtt_ms()) << ',' << num(rtt.ci90_ms) << ',' << num(advance) << ','
          << to_string(f.outcome) << ',' << label << ',' << num(f.slack_ms) << ',' << hex(r.report.config_hash)
          << '\n';
    }
  }
  return out.str();
}

std::string reports_json(const std::vector<point_result>& results) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    auto j = nlohmann::ordered_json::parse(report_json(r.report));
    j["arch"] = r.point.arch;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw config_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::filesystem::path> run_and_write(const campaign_spec& spec, int workers, std::ostream& log) {
  const auto results = run_points(spec, workers);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const auto path = spec.out_dir / name;
    write_atomic(path, content);
    written.push_back(path);
  };
  emit("summary.csv", summary_csv(results, spec));
  emit("reports.json", reports_json(results));
  if (std::any_of(results.begin(), results.end(), [](const auto& r) { return r.point.arch > 0; })) {
    emit("feasibility.csv", feasibility_csv(results, spec));
  }
  if (spec.fig != figure::none) emit(std::string(to_string(spec.fig)) + ".csv", emit_plot_data(results, spec.fig, spec));
  if (spec.write_transactions) {
    std::string all = seeds_header(spec);
    for (std::size_t i = 0; i < results.size(); ++i) {
      std::string body = transactions_csv(results[i].replications);
      if (i > 0) body.erase(0, body.find('\n') + 1);
      all += body;
    }
    emit("transactions.csv", all);
  }
  if (spec.write_grant_log) {
    std::string all;
    for (const auto& r : results) {
      for (const auto& rep : r.replications) {
        std::string body = grant_log_csv(rep.grants);
        if (!all.empty()) body.erase(0, body.find('\n') + 1);
        all += body;
      }
    }
    emit("grant_log.csv", all);
  }

  log << std::left << std::setw(5) << "arch" << std::setw(6) << "N" << std::setw(9) << "B[MHz]" << std::setw(9)
      << "SCS[kHz]" << std::setw(5) << "M" << std::setw(8) << "T_CN" << std::setw(14) << "T_5G_NR[ms]"
      << "CI90[ms]\n";
  for (const auto& r : results) {
    const auto& c = r.point.config;
    log << std::left << std::setw(5) << r.point.arch << std::setw(6) << c.traffic.n_ues << std::setw(9)
        << c.radio.bandwidth_hz / 1e6 << std::setw(9) << c.radio.num.scs_khz() << std::setw(5) << c.radio.mod_order
        << std::setw(8) << c.t_cn_ms << std::setw(14) << num(r.report.mean_t_5g_nr_ms)
        << num(r.report.ci90_halfwidth_ms) << '\n';
  }
  return written;
}

}  // namespace nrsim
