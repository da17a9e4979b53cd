// Copyright 2026 The tfdl authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "tfdl/types.hpp"

namespace tfdl {

/// Temporal intersection-over-union of two intervals given as (start, dur).
double tiou(double start_a, double dur_a, double start_b, double dur_b);
inline double tiou(const ProposalInterval& a, const ProposalInterval& b) {
  return tiou(a.start_s, a.dur_s, b.start_s, b.dur_s);
}
inline double tiou(const ProposalInterval& a, const ForgerySegment& b) {
  return tiou(a.start_s, a.dur_s, b.start_s, b.dur_s);
}

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

/// Equal error rate over fake scores (label 1 = fake). Sweeps every distinct
/// threshold and linearly interpolates between the two ROC points bracketing
/// the FPR = FNR crossing. Throws when only one class is present.
EerResult eer(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

/// AUC via the Mann-Whitney rank statistic; ties count half.
double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

struct ConfusionMetrics {
  double fpr = 0.0;
  double fnr = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Confusion metrics with predict-fake iff score > threshold.
ConfusionMetrics confusion_metrics(const std::vector<double>& scores,
                                   const std::vector<std::uint8_t>& labels, double threshold);

/// One clip's proposals and ground truths for localization evaluation.
struct ClipEval {
  std::string id;
  std::vector<ProposalInterval> proposals;
  std::vector<ForgerySegment> gts;
};

/// Corpus-pooled average precision at one TIoU threshold. Proposals are
/// ranked by score (ties: earlier start, then clip id); each proposal greedily
/// matches the best-TIoU unmatched ground truth of its own clip; AP is the
/// area under the interpolated precision envelope. With no ground truths the
/// result is 1 when there are no proposals, otherwise 0.
double average_precision(std::span<const ClipEval> clips, double tiou_threshold);

/// The 10-point threshold grid 0.50, 0.55, ..., 0.95.
const std::vector<double>& tiou_grid();

/// Mean of average_precision over the grid.
double mean_ap(std::span<const ClipEval> clips);

/// Keeps the top-N proposals per clip, computes recall at every grid
/// threshold (micro-averaged over all ground truths), and returns the mean.
double average_recall_at_n(std::span<const ClipEval> clips, int top_n);

struct PfdReport {
  double eer = 0.0;
  double eer_threshold = 0.0;
  double auc = 0.0;
  double operating_threshold = 0.5;
  double fpr = 0.0;
  double fnr = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  std::string to_json() const;
};

struct TflReport {
  std::map<double, double> ap_at;    // reporting thresholds {0.5, 0.75, 0.9, 0.95}
  double map_score = 0.0;            // mean AP over the 10-point grid
  std::map<int, double> ar_at_n;     // N in {1, 2, 5, 10, 20}

  std::string to_json() const;
};

PfdReport evaluate_pfd(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                       double operating_threshold = 0.5);

TflReport evaluate_tfl(std::span<const ClipEval> clips);

}  // namespace tfdl
