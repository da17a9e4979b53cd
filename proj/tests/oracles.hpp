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
//
// Brute-force reference implementations used only by tests. These share no
// matching or sweeping logic with the library: precision/recall points are
// recomputed from scratch at every rank and integrated directly, EER scans an
// explicit threshold list, AUC counts pairs.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include "tfdl/metrics.hpp"
#include "tfdl/types.hpp"

namespace oracles {

inline double interval_iou(double s1, double d1, double s2, double d2) {
  const double lo = std::max(s1, s2);
  const double hi = std::min(s1 + d1, s2 + d2);
  const double inter = hi > lo ? hi - lo : 0.0;
  return inter / (d1 + d2 - inter);
}

struct FlatProposal {
  std::size_t clip;
  tfdl::ProposalInterval p;
  std::string id;
};

inline std::vector<FlatProposal> ranked_proposals(std::span<const tfdl::ClipEval> clips) {
  std::vector<FlatProposal> flat;
  for (std::size_t c = 0; c < clips.size(); ++c)
    for (const auto& p : clips[c].proposals) flat.push_back({c, p, clips[c].id});
  std::stable_sort(flat.begin(), flat.end(), [](const FlatProposal& a, const FlatProposal& b) {
    return std::make_tuple(-a.p.score, a.p.start_s, a.id, a.p.dur_s) <
           std::make_tuple(-b.p.score, b.p.start_s, b.id, b.p.dur_s);
  });
  return flat;
}

/// Greedy decision sequence, recomputed painstakingly per rank.
inline std::vector<bool> match_flags(const std::vector<FlatProposal>& flat,
                                     std::span<const tfdl::ClipEval> clips, double threshold) {
  std::vector<std::vector<bool>> taken(clips.size());
  for (std::size_t c = 0; c < clips.size(); ++c) taken[c].assign(clips[c].gts.size(), false);
  std::vector<bool> is_tp(flat.size(), false);
  for (std::size_t r = 0; r < flat.size(); ++r) {
    const auto& gts = clips[flat[r].clip].gts;
    double best = 0.0;
    int best_g = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[flat[r].clip][g]) continue;
      const double v =
          interval_iou(flat[r].p.start_s, flat[r].p.dur_s, gts[g].start_s, gts[g].dur_s);
      if (v > best) {
        best = v;
        best_g = static_cast<int>(g);
      }
    }
    if (best_g >= 0 && best >= threshold) {
      is_tp[r] = true;
      taken[flat[r].clip][static_cast<std::size_t>(best_g)] = true;
    }
  }
  return is_tp;
}

/// AP by explicit all-point interpolation: for each achieved recall level,
/// the precision is the maximum precision at any rank whose recall reaches
/// that level.
inline double average_precision(std::span<const tfdl::ClipEval> clips, double threshold) {
  std::size_t total_gts = 0, total_props = 0;
  for (const auto& c : clips) {
    total_gts += c.gts.size();
    total_props += c.proposals.size();
  }
  if (total_gts == 0) return total_props == 0 ? 1.0 : 0.0;
  if (total_props == 0) return 0.0;

  const auto flat = ranked_proposals(clips);
  const auto is_tp = match_flags(flat, clips, threshold);

  std::vector<double> precisions, recalls;
  for (std::size_t r = 0; r < flat.size(); ++r) {
    std::size_t tp = 0;
    for (std::size_t k = 0; k <= r; ++k) tp += is_tp[k] ? 1 : 0;
    precisions.push_back(static_cast<double>(tp) / static_cast<double>(r + 1));
    recalls.push_back(static_cast<double>(tp) / static_cast<double>(total_gts));
  }

  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t r = 0; r < flat.size(); ++r) {
    if (!is_tp[r]) continue;
    double best_precision = 0.0;
    for (std::size_t k = 0; k < flat.size(); ++k)
      if (recalls[k] >= recalls[r]) best_precision = std::max(best_precision, precisions[k]);
    ap += (recalls[r] - prev_recall) * best_precision;
    prev_recall = recalls[r];
  }
  return ap;
}

inline double mean_ap(std::span<const tfdl::ClipEval> clips) {
  double total = 0.0;
  int count = 0;
  for (int i = 50; i <= 95; i += 5) {
    total += oracles::average_precision(clips, i / 100.0);
    ++count;
  }
  return total / count;
}

inline double average_recall_at_n(std::span<const tfdl::ClipEval> clips, int top_n) {
  std::size_t total_gts = 0;
  for (const auto& c : clips) total_gts += c.gts.size();
  if (total_gts == 0) return 1.0;
  if (top_n <= 0) return 0.0;

  double recall_sum = 0.0;
  int thresholds = 0;
  for (int i = 50; i <= 95; i += 5) {
    const double t = i / 100.0;
    std::size_t matched = 0;
    for (const auto& c : clips) {
      tfdl::ClipEval trimmed = c;
      std::stable_sort(trimmed.proposals.begin(), trimmed.proposals.end(),
                       [](const tfdl::ProposalInterval& a, const tfdl::ProposalInterval& b) {
                         return std::make_tuple(-a.score, a.start_s, a.dur_s) <
                                std::make_tuple(-b.score, b.start_s, b.dur_s);
                       });
      if (trimmed.proposals.size() > static_cast<std::size_t>(top_n))
        trimmed.proposals.resize(static_cast<std::size_t>(top_n));
      const tfdl::ClipEval one[] = {trimmed};
      const auto flat = ranked_proposals(one);
      const auto is_tp = match_flags(flat, one, t);
      for (bool f : is_tp) matched += f ? 1 : 0;
    }
    recall_sum += static_cast<double>(matched) / static_cast<double>(total_gts);
    ++thresholds;
  }
  return recall_sum / thresholds;
}

/// EER by exhaustive sweep over candidate thresholds with explicit
/// interpolation of the (FPR, FNR) polyline.
inline std::pair<double, double> eer(const std::vector<double>& scores,
                                     const std::vector<std::uint8_t>& labels) {
  std::vector<double> candidates = scores;
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  candidates.insert(candidates.begin(), candidates.front() - 1.0);

  std::size_t n_fake = 0, n_real = 0;
  for (auto l : labels) (l ? n_fake : n_real)++;

  auto rates = [&](double th) {
    std::size_t fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (labels[i] && !(scores[i] > th)) ++fn;
      if (!labels[i] && scores[i] > th) ++fp;
    }
    return std::make_pair(static_cast<double>(fp) / n_real, static_cast<double>(fn) / n_fake);
  };

  double prev_th = candidates.front();
  auto [prev_fpr, prev_fnr] = rates(prev_th);
  for (double th : candidates) {
    auto [fpr, fnr] = rates(th);
    if (fnr == fpr) return {fpr, th};
    if (fnr > fpr) {
      const double denom = (fnr - prev_fnr) - (fpr - prev_fpr);
      const double t = (prev_fpr - prev_fnr) / denom;
      return {prev_fpr + t * (fpr - prev_fpr), prev_th + t * (th - prev_th)};
    }
    prev_th = th;
    prev_fpr = fpr;
    prev_fnr = fnr;
  }
  return {1.0, candidates.back()};
}

/// AUC by explicit concordant-pair counting (ties half).
inline double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  double concordant = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j]) continue;
      ++pairs;
      if (scores[i] > scores[j])
        concordant += 1.0;
      else if (scores[i] == scores[j])
        concordant += 0.5;
    }
  }
  return concordant / static_cast<double>(pairs);
}

/// Plain triple-loop matrix product for projection references.
inline tfdl::Mat naive_matmul(const tfdl::Mat& a, const tfdl::Mat& b) {
  tfdl::Mat out = tfdl::Mat::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(k, j);
  return out;
}

}  // namespace oracles
