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

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nrsim::rul {

/// Channels of a recorded session, in corpus-file order.
inline const std::vector<std::string> corpus_channels = {"ax", "ay", "az", "x", "y", "yaw"};

/// One recorded session: regularly sampled feature rows and the row the
/// recording script tagged as the fault.
struct series {
  std::string id;
  std::vector<double> t_ms;
  Eigen::MatrixXd features;  // rows are samples, columns follow `channels`
  std::vector<std::string> channels;
  int fault_index = 0;  // zero-based row

  int size() const { return static_cast<int>(t_ms.size()); }
  double dt_s() const;
  int column(std::string_view name) const;
  /// Throws std::invalid_argument on shape, spacing or fault-index problems.
  void validate() const;
};

struct labeled_series {
  series data;
  int margin = 0;
  std::vector<std::uint8_t> labels;  // 1 = Fault
};

/// Labels the fault row and the `margin` rows before it as Fault. With
/// include_fault_sample = false only `margin` rows (ending at the fault) are.
labeled_series label_with_margin(const series& s, int margin, bool include_fault_sample = true);

struct cost_params {
  double c_fp = 0.2;
  int margin = 5;
};

/// False-negative cost of row `index`: m - |S| + q with q one-based and |S|
/// taken as the one-based fault position.
std::int64_t fn_cost(int index, int fault_index, int margin);

struct cost_breakdown {
  std::int64_t false_positives = 0;
  std::int64_t false_negatives = 0;
  std::int64_t fn_cost = 0;  // integer sum of false-negative costs
  double c_fp = 0.2;

  double total() const { return c_fp * static_cast<double>(false_positives) + static_cast<double>(fn_cost); }
};

using prediction = std::vector<std::uint8_t>;

cost_breakdown cost(std::span<const prediction> predictions, std::span<const labeled_series> set,
                    const cost_params& params);

/// First row labeled Fault that is also predicted Fault.
std::optional<int> first_detection(const prediction& predicted, const labeled_series& ls);

/// Time between a detection at row `detection_index` and the fault, seconds.
double advance_s(int detection_index, const series& s);

/// Mean of the per-series advances; empty input has no mean.
std::optional<double> mean_advance(std::span<const double> advances);

struct threshold_result {
  double threshold = 0.0;  // +inf means "never predict Fault"
  cost_breakdown cost;
};

/// Binarises scores with `score >= threshold`.
prediction binarize(std::span<const double> scores, double threshold);

/// Exhaustive sweep over every distinct score and +inf; ties go to the
/// larger threshold.
threshold_result optimize_threshold(std::span<const std::vector<double>> scores, std::span<const labeled_series> set,
                                    const cost_params& params);

/// |value| of one raw channel, the baseline detector's score.
std::vector<double> raw_scores(const series& s, int channel);
prediction baseline_detect(const series& s, int channel, double raw_threshold);

/// Appends trailing-window mean/max/min/std for every window length and the
/// first difference, for each listed channel (all channels when empty).
series preprocess(const series& s, std::span<const int> window_lengths, std::span<const std::string> channels = {});

struct context_grid {
  int position_bins = 8;     // per axis over the training x/y range
  int orientation_bins = 8;  // over [-pi, pi)
};

/// Mean acceleration per (position cell, orientation bin), fitted on
/// training series only.
class context_means {
 public:
  static context_means fit(std::span<const series> training, const context_grid& grid = {});

  /// Subtracts the context mean from ax/ay/az; unseen contexts use the
  /// global training mean.
  series apply(const series& s) const;

  std::size_t context_count() const { return means_.size(); }

 private:
  long key(double x, double y, double yaw) const;

  context_grid grid_;
  double x_min_ = 0, x_max_ = 0, y_min_ = 0, y_max_ = 0;
  std::vector<std::pair<long, Eigen::Vector3d>> means_;  // sorted by key
  Eigen::Vector3d global_ = Eigen::Vector3d::Zero();
};

/// Z-scoring with statistics from the training rows. Constant columns are
/// dropped and listed in `dropped`.
struct standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd stddev;
  std::vector<int> kept;
  std::vector<int> dropped;

  static standardizer fit(std::span<const series> training);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
  series apply(const series& s) const;
};

struct class_weight_pair {
  double non_fault = 1.0;
  double fault = 1.0;
};

/// weight_c = total / (2 * count_c).
class_weight_pair class_weights(std::span<const labeled_series> corpus);

struct synthetic_params {
  int length = 200;
  double dt_ms = 50.0;
  int transient_samples = 8;       // pre-fault ramp length
  double transient_amplitude = 3.0;
  double noise = 0.3;              // AR(1) innovation std
  double ar_coeff = 0.9;
  double glitch_rate = 0.01;       // isolated raw spikes per sample
  double glitch_amplitude = 5.0;
};

/// Deterministic synthetic sessions with the fault on the last row.
std::vector<series> gen_synthetic_corpus(int n_series, const synthetic_params& params, std::uint64_t seed);

struct fold_split {
  std::vector<int> train;
  std::vector<int> dl_validation;
  std::vector<int> threshold_validation;
  std::vector<int> test;
};

fold_split split_folds(int n_series, std::uint64_t seed, std::array<double, 4> ratios = {0.50, 0.15, 0.15, 0.20});

/// Guards fitted statistics against test-fold leakage.
class leakage_audit {
 public:
  explicit leakage_audit(const fold_split& split);

  /// Records indices used for fitting; trips and throws if any is a test index.
  void touch_for_fit(std::span<const int> indices, std::string_view purpose);
  bool tripped() const { return tripped_; }

 private:
  std::vector<int> test_;
  bool tripped_ = false;
};

struct evaluation {
  std::string score_name;
  double threshold = 0.0;
  cost_breakdown cost;
  std::optional<double> mean_advance_s;
  std::vector<std::optional<int>> first_detections;
};

/// Applies a fixed threshold to test scores and computes cost and advance.
evaluation evaluate(std::span<const std::vector<double>> scores, std::span<const labeled_series> set, double threshold,
                    const cost_params& params, std::string score_name = "score");

struct pipeline_options {
  std::vector<int> windows = {3, 5, 10};
  context_grid grid;
  std::string baseline_channel = "ax";
  bool include_fault_sample = true;
};

/// Differencing, feature creation and standardisation fitted on the training
/// fold; the feature and threshold are picked on the threshold-validation
/// fold; cost and advance are reported on the test fold.
evaluation run_feature_pipeline(std::span<const series> corpus, const fold_split& split, const cost_params& params,
                                const pipeline_options& options, leakage_audit& audit);

/// Raw-channel threshold detector calibrated on the threshold-validation fold.
evaluation run_baseline(std::span<const series> corpus, const fold_split& split, const cost_params& params,
                        const pipeline_options& options, leakage_audit& audit);

/// CSV columns series_id,t_ms,ax,ay,az,x,y,yaw,is_fault.
std::vector<series> read_corpus_csv(std::istream& in);
void write_corpus_csv(std::ostream& out, std::span<const series> corpus);

/// CSV columns series_id,t_ms,score; rows must align with the corpus.
std::vector<std::vector<double>> read_scores_csv(std::istream& in, std::span<const series> corpus);

std::string metrics_json(const evaluation& eval);

}  // namespace nrsim::rul
