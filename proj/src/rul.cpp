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

#include "nrsim/rul.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "nrsim/error.hpp"
#include "nrsim/rng.hpp"

namespace nrsim::rul {
namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& text, int line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw config_error("line " + std::to_string(line_no) + ": '" + text + "' is not a number");
  }
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// Box-Muller on the portable uniform stream.
double gaussian(rng_stream& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<std::vector<double>> column_scores(std::span<const series> set, int column) {
  std::vector<std::vector<double>> out;
  out.reserve(set.size());
  for (const auto& s : set) {
    const Eigen::VectorXd col = s.features.col(column);
    out.emplace_back(col.data(), col.data() + col.size());
  }
  return out;
}

template <typename T>
std::vector<T> pick(std::span<const T> items, const std::vector<int>& indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(items[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

double series::dt_s() const {
  if (t_ms.size() < 2) return 0.0;
  return (t_ms[1] - t_ms[0]) / 1000.0;
}

int series::column(std::string_view name) const {
  const auto it = std::find(channels.begin(), channels.end(), name);
  if (it == channels.end()) throw config_error("series " + id + " has no channel '" + std::string(name) + "'");
  return static_cast<int>(it - channels.begin());
}

void series::validate() const {
  const auto n = static_cast<Eigen::Index>(t_ms.size());
  if (n == 0) throw config_error("series " + id + " is empty");
  if (features.rows() != n || features.cols() != static_cast<Eigen::Index>(channels.size())) {
    throw config_error("series " + id + " has mismatched feature shape");
  }
  if (fault_index < 0 || fault_index >= size()) throw config_error("series " + id + " fault index out of range");
  if (n >= 2) {
    const double step = t_ms[1] - t_ms[0];
    if (!(step > 0)) throw config_error("series " + id + " timestamps must increase");
    for (std::size_t i = 1; i < t_ms.size(); ++i) {
      const double d = t_ms[i] - t_ms[i - 1];
      if (std::abs(d - step) > 1e-6 * std::max(1.0, step)) {
        throw config_error("series " + id + " is not regularly sampled");
      }
    }
  }
}

labeled_series label_with_margin(const series& s, int margin, bool include_fault_sample) {
  s.validate();
  if (margin < 0) throw config_error("margin must be non-negative");
  if (margin > s.fault_index) {
    throw config_error("series " + s.id + " has only " + std::to_string(s.fault_index) +
                       " samples before the fault, margin " + std::to_string(margin) + " needs more");
  }
  labeled_series out{s, margin, std::vector<std::uint8_t>(static_cast<std::size_t>(s.size()), 0)};
  const int first = include_fault_sample ? s.fault_index - margin : s.fault_index - margin + 1;
  for (int i = std::max(first, 0); i <= s.fault_index; ++i) out.labels[static_cast<std::size_t>(i)] = 1;
  return out;
}

std::int64_t fn_cost(int index, int fault_index, int margin) {
  // m - |S_k| + q with q = index + 1 and |S_k| = fault_index + 1.
  return static_cast<std::int64_t>(margin) - fault_index + index;
}

cost_breakdown cost(std::span<const prediction> predictions, std::span<const labeled_series> set,
                    const cost_params& params) {
  if (!(params.c_fp > 0)) throw config_error("false-positive cost must be positive");
  if (predictions.size() != set.size()) throw config_error("one prediction vector is needed per series");
  cost_breakdown c;
  c.c_fp = params.c_fp;
  for (std::size_t k = 0; k < set.size(); ++k) {
    const auto& ls = set[k];
    const auto& p = predictions[k];
    if (p.size() != ls.labels.size()) throw config_error("predictions misaligned with series " + ls.data.id);
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] && !ls.labels[i]) {
        ++c.false_positives;
      } else if (!p[i] && ls.labels[i]) {
        ++c.false_negatives;
        c.fn_cost += fn_cost(static_cast<int>(i), ls.data.fault_index, params.margin);
      }
    }
  }
  return c;
}

std::optional<int> first_detection(const prediction& predicted, const labeled_series& ls) {
  for (std::size_t i = 0; i < ls.labels.size() && i < predicted.size(); ++i) {
    if (ls.labels[i] && predicted[i]) return static_cast<int>(i);
  }
  return std::nullopt;
}

double advance_s(int detection_index, const series& s) {
  if (detection_index < 0 || detection_index > s.fault_index) {
    throw config_error("detection after the fault has no advance");
  }
  return (s.fault_index - detection_index) * s.dt_s();
}

std::optional<double> mean_advance(std::span<const double> advances) {
  if (advances.empty()) return std::nullopt;
  return std::accumulate(advances.begin(), advances.end(), 0.0) / static_cast<double>(advances.size());
}

prediction binarize(std::span<const double> scores, double threshold) {
  prediction p(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) p[i] = scores[i] >= threshold ? 1 : 0;
  return p;
}

threshold_result optimize_threshold(std::span<const std::vector<double>> scores, std::span<const labeled_series> set,
                                    const cost_params& params) {
  if (set.empty()) throw config_error("threshold search needs at least one series");
  if (scores.size() != set.size()) throw config_error("one score vector is needed per series");

  struct item {
    double score;
    bool fault;
    std::int64_t fn;
  };
  std::vector<item> items;
  cost_breakdown running;
  running.c_fp = params.c_fp;
  for (std::size_t k = 0; k < set.size(); ++k) {
    const auto& ls = set[k];
    if (scores[k].size() != ls.labels.size()) throw config_error("scores misaligned with series " + ls.data.id);
    for (std::size_t i = 0; i < ls.labels.size(); ++i) {
      const double s = scores[k][i];
      if (std::isnan(s)) throw config_error("NaN score in series " + ls.data.id);
      const bool fault = ls.labels[i] != 0;
      const auto fn = fault ? fn_cost(static_cast<int>(i), ls.data.fault_index, params.margin) : 0;
      items.push_back({s, fault, fn});
      if (fault) {
        ++running.false_negatives;
        running.fn_cost += fn;
      }
    }
  }
  std::sort(items.begin(), items.end(), [](const item& a, const item& b) { return a.score > b.score; });

  threshold_result best{std::numeric_limits<double>::infinity(), running};
  for (std::size_t i = 0; i < items.size();) {
    const double level = items[i].score;
    for (; i < items.size() && items[i].score == level; ++i) {
      if (items[i].fault) {
        --running.false_negatives;
        running.fn_cost -= items[i].fn;
      } else {
        ++running.false_positives;
      }
    }
    if (running.total() < best.cost.total()) best = {level, running};
  }
  return best;
}

std::vector<double> raw_scores(const series& s, int channel) {
  std::vector<double> out(static_cast<std::size_t>(s.size()));
  for (int i = 0; i < s.size(); ++i) out[static_cast<std::size_t>(i)] = std::abs(s.features(i, channel));
  return out;
}

prediction baseline_detect(const series& s, int channel, double raw_threshold) {
  return binarize(raw_scores(s, channel), raw_threshold);
}

series preprocess(const series& s, std::span<const int> window_lengths, std::span<const std::string> channels) {
  s.validate();
  std::vector<int> cols;
  if (channels.empty()) {
    cols.resize(s.channels.size());
    std::iota(cols.begin(), cols.end(), 0);
  } else {
    for (const auto& name : channels) cols.push_back(s.column(name));
  }
  for (int w : window_lengths) {
    if (w < 2 || w > s.size()) throw config_error("window length " + std::to_string(w) + " out of range");
  }

  const Eigen::Index n = s.features.rows();
  const auto extra = static_cast<Eigen::Index>(cols.size() * (4 * window_lengths.size() + 1));
  series out = s;
  out.features.conservativeResize(n, s.features.cols() + extra);
  Eigen::Index next = s.features.cols();

  for (int c : cols) {
    const Eigen::VectorXd x = s.features.col(c);
    const std::string& name = s.channels[static_cast<std::size_t>(c)];
    for (int w : window_lengths) {
      for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::Index from = std::max<Eigen::Index>(0, t - w + 1);
        const auto win = x.segment(from, t - from + 1);
        const double mu = win.mean();
        out.features(t, next) = mu;
        out.features(t, next + 1) = win.maxCoeff();
        out.features(t, next + 2) = win.minCoeff();
        out.features(t, next + 3) = std::sqrt((win.array() - mu).square().mean());
      }
      const std::string suffix = std::to_string(w);
      out.channels.push_back(name + "_mean" + suffix);
      out.channels.push_back(name + "_max" + suffix);
      out.channels.push_back(name + "_min" + suffix);
      out.channels.push_back(name + "_std" + suffix);
      next += 4;
    }
    out.features(0, next) = 0.0;
    for (Eigen::Index t = 1; t < n; ++t) out.features(t, next) = x(t) - x(t - 1);
    out.channels.push_back(name + "_diff");
    ++next;
  }
  return out;
}

context_means context_means::fit(std::span<const series> training, const context_grid& grid) {
  if (grid.position_bins < 1 || grid.orientation_bins < 1) throw config_error("context grid needs positive bins");
  context_means cm;
  cm.grid_ = grid;
  bool any = false;
  for (const auto& s : training) {
    if (s.size() == 0) continue;
    const auto xs = s.features.col(s.column("x"));
    const auto ys = s.features.col(s.column("y"));
    if (!any) {
      cm.x_min_ = xs.minCoeff();
      cm.x_max_ = xs.maxCoeff();
      cm.y_min_ = ys.minCoeff();
      cm.y_max_ = ys.maxCoeff();
      any = true;
    } else {
      cm.x_min_ = std::min(cm.x_min_, xs.minCoeff());
      cm.x_max_ = std::max(cm.x_max_, xs.maxCoeff());
      cm.y_min_ = std::min(cm.y_min_, ys.minCoeff());
      cm.y_max_ = std::max(cm.y_max_, ys.maxCoeff());
    }
  }
  if (!any) throw config_error("context table needs at least one training sample");

  std::map<long, std::pair<Eigen::Vector3d, long>> acc;
  Eigen::Vector3d total = Eigen::Vector3d::Zero();
  long count = 0;
  for (const auto& s : training) {
    const int ax = s.column("ax"), x = s.column("x"), y = s.column("y"), yaw = s.column("yaw");
    for (int i = 0; i < s.size(); ++i) {
      const Eigen::Vector3d a = s.features.row(i).segment<3>(ax).transpose();
      auto& slot = acc[cm.key(s.features(i, x), s.features(i, y), s.features(i, yaw))];
      if (slot.second == 0) slot.first.setZero();
      slot.first += a;
      ++slot.second;
      total += a;
      ++count;
    }
  }
  cm.global_ = total / static_cast<double>(count);
  for (const auto& [k, v] : acc) cm.means_.emplace_back(k, v.first / static_cast<double>(v.second));
  return cm;
}

long context_means::key(double x, double y, double yaw) const {
  auto bin = [](double v, double lo, double hi, int bins) {
    if (!(hi > lo)) return 0;
    const int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
    return std::clamp(b, 0, bins - 1);
  };
  const double wrapped = std::remainder(yaw, 2.0 * std::numbers::pi);  // [-pi, pi]
  const int ix = bin(x, x_min_, x_max_, grid_.position_bins);
  const int iy = bin(y, y_min_, y_max_, grid_.position_bins);
  const int io = bin(wrapped, -std::numbers::pi, std::numbers::pi, grid_.orientation_bins);
  return (static_cast<long>(ix) * grid_.position_bins + iy) * grid_.orientation_bins + io;
}

series context_means::apply(const series& s) const {
  series out = s;
  const int ax = s.column("ax"), x = s.column("x"), y = s.column("y"), yaw = s.column("yaw");
  for (int i = 0; i < s.size(); ++i) {
    const long k = key(s.features(i, x), s.features(i, y), s.features(i, yaw));
    const auto it = std::lower_bound(means_.begin(), means_.end(), k,
                                     [](const auto& entry, long value) { return entry.first < value; });
    const Eigen::Vector3d& m = (it != means_.end() && it->first == k) ? it->second : global_;
    out.features.row(i).segment<3>(ax) -= m.transpose();
  }
  return out;
}

standardizer standardizer::fit(std::span<const series> training) {
  if (training.empty()) throw config_error("standardization needs training data");
  const Eigen::Index cols = training.front().features.cols();
  Eigen::Index rows = 0;
  for (const auto& s : training) {
    if (s.features.cols() != cols) throw config_error("training series disagree on feature count");
    rows += s.features.rows();
  }
  Eigen::MatrixXd all(rows, cols);
  Eigen::Index r = 0;
  for (const auto& s : training) {
    all.middleRows(r, s.features.rows()) = s.features;
    r += s.features.rows();
  }
  standardizer st;
  st.mean = all.colwise().mean();
  st.stddev = ((all.rowwise() - st.mean).array().square().colwise().mean()).sqrt();
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double scale = std::max(1.0, std::abs(st.mean(c)));
    (st.stddev(c) > 1e-12 * scale ? st.kept : st.dropped).push_back(static_cast<int>(c));
  }
  return st;
}

Eigen::MatrixXd standardizer::apply(const Eigen::MatrixXd& features) const {
  Eigen::MatrixXd out(features.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) {
    const int c = kept[j];
    out.col(static_cast<Eigen::Index>(j)) = (features.col(c).array() - mean(c)) / stddev(c);
  }
  return out;
}

series standardizer::apply(const series& s) const {
  series out = s;
  out.features = apply(s.features);
  out.channels.clear();
  for (int c : kept) out.channels.push_back(s.channels[static_cast<std::size_t>(c)]);
  return out;
}

class_weight_pair class_weights(std::span<const labeled_series> corpus) {
  double fault = 0, total = 0;
  for (const auto& ls : corpus) {
    for (auto l : ls.labels) fault += l ? 1 : 0;
    total += static_cast<double>(ls.labels.size());
  }
  const double non_fault = total - fault;
  if (fault == 0 || non_fault == 0) throw config_error("class weights need both classes present");
  return {total / (2.0 * non_fault), total / (2.0 * fault)};
}

std::vector<series> gen_synthetic_corpus(int n_series, const synthetic_params& p, std::uint64_t seed) {
  if (p.length <= p.transient_samples || p.length < 2) throw config_error("series too short for the transient");
  if (!(p.dt_ms > 0)) throw config_error("sampling interval must be positive");
  std::vector<series> corpus;
  corpus.reserve(static_cast<std::size_t>(std::max(n_series, 0)));
  for (int k = 0; k < n_series; ++k) {
    auto rng = rng_stream::derive(seed, "synthetic-series", static_cast<std::uint64_t>(k));
    series s;
    s.id = "s" + std::to_string(k);
    s.channels = corpus_channels;
    s.features.setZero(p.length, static_cast<Eigen::Index>(s.channels.size()));
    s.fault_index = p.length - 1;
    // Laps of a 20 m x 10 m rectangle; the heading sets a context-dependent
    // mean acceleration, which differencing should remove.
    const double speed = 1.0 + 0.5 * rng.uniform();
    double pos = 60.0 * rng.uniform();
    Eigen::Vector3d ar = Eigen::Vector3d::Zero();
    for (int i = 0; i < p.length; ++i) {
      s.t_ms.push_back(i * p.dt_ms);
      pos = std::fmod(pos + speed * p.dt_ms / 1000.0, 60.0);
      double x, y, yaw;
      if (pos < 20) {
        x = pos, y = 0, yaw = 0;
      } else if (pos < 30) {
        x = 20, y = pos - 20, yaw = std::numbers::pi / 2;
      } else if (pos < 50) {
        x = 50 - pos, y = 10, yaw = -std::numbers::pi;
      } else {
        x = 0, y = 60 - pos, yaw = -std::numbers::pi / 2;
      }
      for (int a = 0; a < 3; ++a) ar(a) = p.ar_coeff * ar(a) + p.noise * gaussian(rng);
      Eigen::Vector3d acc = ar;
      acc(0) += 0.8 * std::cos(yaw);
      acc(1) += 0.8 * std::sin(yaw);
      acc(2) += 9.81;
      if (rng.uniform() < p.glitch_rate) acc(0) += (rng.uniform() < 0.5 ? -1.0 : 1.0) * p.glitch_amplitude;
      const int into = i - (s.fault_index - p.transient_samples);
      if (into > 0) {
        const double r = static_cast<double>(into) / p.transient_samples;
        acc(0) += p.transient_amplitude * r * r;
      }
      s.features.row(i) << acc(0), acc(1), acc(2), x, y, yaw;
    }
    corpus.push_back(std::move(s));
  }
  return corpus;
}

fold_split split_folds(int n_series, std::uint64_t seed, std::array<double, 4> ratios) {
  const double sum = ratios[0] + ratios[1] + ratios[2] + ratios[3];
  if (!(sum > 0) || std::any_of(ratios.begin(), ratios.end(), [](double r) { return r < 0; })) {
    throw config_error("fold ratios must be non-negative with a positive sum");
  }
  std::vector<int> idx(static_cast<std::size_t>(std::max(n_series, 0)));
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = rng_stream::derive(seed, "folds");
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.next_u64() % i);
    std::swap(idx[i - 1], idx[j]);
  }
  fold_split split;
  std::array<std::vector<int>*, 4> folds{&split.train, &split.dl_validation, &split.threshold_validation,
                                         &split.test};
  std::size_t begin = 0;
  double cumulative = 0.0;
  for (std::size_t f = 0; f < 4; ++f) {
    cumulative += ratios[f];
    const auto end = f == 3 ? idx.size()
                            : static_cast<std::size_t>(std::llround(cumulative / sum * static_cast<double>(idx.size())));
    folds[f]->assign(idx.begin() + static_cast<long>(begin), idx.begin() + static_cast<long>(end));
    std::sort(folds[f]->begin(), folds[f]->end());
    begin = end;
  }
  return split;
}

leakage_audit::leakage_audit(const fold_split& split) : test_(split.test) {}

void leakage_audit::touch_for_fit(std::span<const int> indices, std::string_view purpose) {
  for (int i : indices) {
    if (std::binary_search(test_.begin(), test_.end(), i)) {
      tripped_ = true;
      throw invariant_violation("test series " + std::to_string(i) + " used for " + std::string(purpose));
    }
  }
}

evaluation evaluate(std::span<const std::vector<double>> scores, std::span<const labeled_series> set, double threshold,
                    const cost_params& params, std::string score_name) {
  if (scores.size() != set.size()) throw config_error("one score vector is needed per series");
  evaluation e;
  e.score_name = std::move(score_name);
  e.threshold = threshold;
  std::vector<prediction> preds;
  std::vector<double> advances;
  for (std::size_t k = 0; k < set.size(); ++k) {
    preds.push_back(binarize(scores[k], threshold));
    const auto first = first_detection(preds.back(), set[k]);
    e.first_detections.push_back(first);
    if (first) advances.push_back(advance_s(*first, set[k].data));
  }
  e.cost = cost(preds, set, params);
  e.mean_advance_s = mean_advance(advances);
  return e;
}

evaluation run_feature_pipeline(std::span<const series> corpus, const fold_split& split, const cost_params& params,
                                const pipeline_options& options, leakage_audit& audit) {
  audit.touch_for_fit(split.train, "context means and standardization");
  const auto train = pick(corpus, split.train);
  const auto ctx = context_means::fit(train, options.grid);

  auto transform = [&](const series& s) { return preprocess(ctx.apply(s), options.windows); };
  std::vector<series> train_features;
  for (const auto& s : train) train_features.push_back(transform(s));
  const auto st = standardizer::fit(train_features);

  auto prepared = [&](const std::vector<int>& indices) {
    std::vector<labeled_series> out;
    for (int i : indices) {
      out.push_back(label_with_margin(st.apply(transform(corpus[static_cast<std::size_t>(i)])), params.margin,
                                      options.include_fault_sample));
    }
    return out;
  };

  audit.touch_for_fit(split.threshold_validation, "feature and threshold selection");
  const auto validation = prepared(split.threshold_validation);
  if (validation.empty()) throw config_error("threshold-validation fold is empty");
  std::vector<series> val_series;
  for (const auto& ls : validation) val_series.push_back(ls.data);

  int best_col = 0;
  threshold_result best;
  bool have = false;
  for (int c = 0; c < static_cast<int>(st.kept.size()); ++c) {
    const auto r = optimize_threshold(column_scores(val_series, c), validation, params);
    if (!have || r.cost.total() < best.cost.total()) {
      best = r;
      best_col = c;
      have = true;
    }
  }
  if (!have) throw config_error("no usable feature after standardization");

  const auto test = prepared(split.test);
  std::vector<series> test_series;
  for (const auto& ls : test) test_series.push_back(ls.data);
  const std::string name = val_series.front().channels[static_cast<std::size_t>(best_col)];
  return evaluate(column_scores(test_series, best_col), test, best.threshold, params, name);
}

evaluation run_baseline(std::span<const series> corpus, const fold_split& split, const cost_params& params,
                        const pipeline_options& options, leakage_audit& audit) {
  auto prepared = [&](const std::vector<int>& indices, std::vector<std::vector<double>>& scores) {
    std::vector<labeled_series> out;
    for (int i : indices) {
      const auto& s = corpus[static_cast<std::size_t>(i)];
      scores.push_back(raw_scores(s, s.column(options.baseline_channel)));
      out.push_back(label_with_margin(s, params.margin, options.include_fault_sample));
    }
    return out;
  };
  audit.touch_for_fit(split.threshold_validation, "baseline threshold");
  std::vector<std::vector<double>> val_scores;
  const auto validation = prepared(split.threshold_validation, val_scores);
  const auto best = optimize_threshold(val_scores, validation, params);

  std::vector<std::vector<double>> test_scores;
  const auto test = prepared(split.test, test_scores);
  return evaluate(test_scores, test, best.threshold, params, "|" + options.baseline_channel + "|");
}

std::vector<series> read_corpus_csv(std::istream& in) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) throw config_error("corpus file is empty");
  const std::string header = "series_id,t_ms,ax,ay,az,x,y,yaw,is_fault";
  if (strip_cr(line) != header) throw config_error("line 1: expected header '" + header + "'");

  std::vector<series> corpus;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::array<double, 6>>> rows;
  std::vector<int> faults;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 9) throw config_error("line " + std::to_string(line_no) + ": expected 9 fields");
    auto [it, fresh] = index.emplace(f[0], corpus.size());
    if (fresh) {
      corpus.emplace_back();
      corpus.back().id = f[0];
      corpus.back().channels = corpus_channels;
      rows.emplace_back();
      faults.push_back(-1);
    }
    const std::size_t k = it->second;
    auto& s = corpus[k];
    const double t = parse_number(f[1], line_no);
    if (!s.t_ms.empty() && !(t > s.t_ms.back())) {
      throw config_error("line " + std::to_string(line_no) + ": timestamps must increase within a series");
    }
    s.t_ms.push_back(t);
    std::array<double, 6> r{};
    for (std::size_t c = 0; c < 6; ++c) r[c] = parse_number(f[2 + c], line_no);
    rows[k].push_back(r);
    if (parse_number(f[8], line_no) != 0.0) {
      if (faults[k] >= 0) throw config_error("line " + std::to_string(line_no) + ": second fault in series " + f[0]);
      faults[k] = static_cast<int>(s.t_ms.size()) - 1;
    }
  }
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    auto& s = corpus[k];
    if (faults[k] < 0) throw config_error("series " + s.id + " has no fault row");
    s.fault_index = faults[k];
    s.features.resize(static_cast<Eigen::Index>(rows[k].size()), 6);
    for (std::size_t i = 0; i < rows[k].size(); ++i) {
      for (std::size_t c = 0; c < 6; ++c) s.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[k][i][c];
    }
    s.validate();
  }
  return corpus;
}

void write_corpus_csv(std::ostream& out, std::span<const series> corpus) {
  out << "series_id,t_ms,ax,ay,az,x,y,yaw,is_fault\n";
  char buf[64];
  for (const auto& s : corpus) {
    for (int i = 0; i < s.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.3f", s.t_ms[static_cast<std::size_t>(i)]);
      out << s.id << ',' << buf;
      for (const char* name : {"ax", "ay", "az", "x", "y", "yaw"}) {
        std::snprintf(buf, sizeof buf, "%.17g", s.features(i, s.column(name)));
        out << ',' << buf;
      }
      out << ',' << (i == s.fault_index ? 1 : 0) << '\n';
    }
  }
}

std::vector<std::vector<double>> read_scores_csv(std::istream& in, std::span<const series> corpus) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line) || strip_cr(line) != "series_id,t_ms,score") {
    throw config_error("line 1: expected header 'series_id,t_ms,score'");
  }
  std::map<std::string, std::vector<std::pair<double, double>>> by_id;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw config_error("line " + std::to_string(line_no) + ": expected 3 fields");
    by_id[f[0]].emplace_back(parse_number(f[1], line_no), parse_number(f[2], line_no));
  }
  std::vector<std::vector<double>> out;
  for (const auto& s : corpus) {
    const auto it = by_id.find(s.id);
    if (it == by_id.end() || it->second.size() != s.t_ms.size()) {
      throw config_error("scores for series " + s.id + " do not match its sample count");
    }
    std::vector<double> scores;
    for (std::size_t i = 0; i < s.t_ms.size(); ++i) {
      if (std::abs(it->second[i].first - s.t_ms[i]) > 1e-6 * std::max(1.0, std::abs(s.t_ms[i]))) {
        throw config_error("scores for series " + s.id + " are misaligned at sample " + std::to_string(i));
      }
      scores.push_back(it->second[i].second);
    }
    out.push_back(std::move(scores));
  }
  return out;
}

std::string metrics_json(const evaluation& eval) {
  nlohmann::ordered_json j;
  j["score"] = eval.score_name;
  if (std::isinf(eval.threshold)) {
    j["threshold"] = nullptr;
  } else {
    j["threshold"] = eval.threshold;
  }
  j["cost"] = eval.cost.total();
  j["false_positives"] = eval.cost.false_positives;
  j["false_negatives"] = eval.cost.false_negatives;
  j["fn_cost"] = eval.cost.fn_cost;
  if (eval.mean_advance_s) {
    j["mean_advance_s"] = *eval.mean_advance_s;
  } else {
    j["mean_advance_s"] = nullptr;
  }
  auto det = nlohmann::ordered_json::array();
  for (const auto& d : eval.first_detections) {
    if (d) {
      det.push_back(*d);
    } else {
      det.push_back(nullptr);
    }
  }
  j["first_detections"] = det;
  return j.dump(2) + "\n";
}

}  // namespace nrsim::rul
