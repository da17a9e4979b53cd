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

#include "tfdl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

namespace tfdl {

using nlohmann::json;

double tiou(double start_a, double dur_a, double start_b, double dur_b) {
  if (dur_a <= 0.0 || dur_b <= 0.0) throw Error("tiou: non-positive duration");
  const double inter =
      std::max(0.0, std::min(start_a + dur_a, start_b + dur_b) - std::max(start_a, start_b));
  const double uni = dur_a + dur_b - inter;
  return inter / uni;
}

namespace {

struct RocPoint {
  double threshold;
  double fpr;
  double fnr;
};

std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                 const std::vector<std::uint8_t>& labels) {
  std::size_t n_fake = 0, n_real = 0;
  for (auto l : labels) (l ? n_fake : n_real)++;
  if (n_fake == 0 || n_real == 0)
    throw Error("eer: both classes must be present");

  std::vector<double> thresholds = scores;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  // Sentinel below every score: everything predicted fake.
  thresholds.insert(thresholds.begin(), thresholds.front() - 1.0);

  std::vector<RocPoint> points;
  points.reserve(thresholds.size());
  for (double th : thresholds) {
    std::size_t fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      const bool predicted_fake = scores[i] > th;
      if (labels[i] && !predicted_fake) ++fn;
      if (!labels[i] && predicted_fake) ++fp;
    }
    points.push_back({th, static_cast<double>(fp) / n_real, static_cast<double>(fn) / n_fake});
  }
  return points;
}

}  // namespace

EerResult eer(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw Error("eer: scores/labels size mismatch or empty");
  const auto points = roc_points(scores, labels);

  // FNR - FPR runs from -1 at the sentinel to +1 past the top score; find the
  // first sign change and interpolate linearly inside that segment.
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double diff = points[i].fnr - points[i].fpr;
    if (diff == 0.0) return {points[i].fpr, points[i].threshold};
    if (diff > 0.0) {
      const auto& a = points[i - 1];
      const auto& b = points[i];
      const double denom = (b.fnr - a.fnr) - (b.fpr - a.fpr);
      const double t = (a.fpr - a.fnr) / denom;
      return {a.fpr + t * (b.fpr - a.fpr), a.threshold + t * (b.threshold - a.threshold)};
    }
  }
  // Unreachable: FNR hits 1 and FPR hits 0 at the top threshold.
  return {1.0, points.back().threshold};
}

double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw Error("auc: scores/labels size mismatch or empty");
  std::size_t n_fake = 0, n_real = 0;
  for (auto l : labels) (l ? n_fake : n_real)++;
  if (n_fake == 0 || n_real == 0) throw Error("auc: both classes must be present");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mann-Whitney with average ranks over tie groups.
  double fake_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
    for (std::size_t k = i; k <= j; ++k)
      if (labels[order[k]]) fake_rank_sum += avg_rank;
    i = j + 1;
  }
  const double u = fake_rank_sum - static_cast<double>(n_fake) * (n_fake + 1) / 2.0;
  return u / (static_cast<double>(n_fake) * static_cast<double>(n_real));
}

ConfusionMetrics confusion_metrics(const std::vector<double>& scores,
                                   const std::vector<std::uint8_t>& labels, double threshold) {
  if (scores.size() != labels.size() || scores.empty())
    throw Error("confusion_metrics: scores/labels size mismatch or empty");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted_fake = scores[i] > threshold;
    if (labels[i])
      (predicted_fake ? tp : fn)++;
    else
      (predicted_fake ? fp : tn)++;
  }
  ConfusionMetrics m;
  m.fpr = (fp + tn) ? static_cast<double>(fp) / (fp + tn) : 0.0;
  m.fnr = (tp + fn) ? static_cast<double>(fn) / (tp + fn) : 0.0;
  m.precision = (tp + fp) ? static_cast<double>(tp) / (tp + fp) : 0.0;
  m.recall = (tp + fn) ? static_cast<double>(tp) / (tp + fn) : 0.0;
  m.f1 = (m.precision + m.recall > 0.0) ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                        : 0.0;
  return m;
}

namespace {

struct RankedProposal {
  std::size_t clip;
  ProposalInterval interval;
};

bool rank_before(const RankedProposal& a, const std::string& id_a, const RankedProposal& b,
                 const std::string& id_b) {
  if (a.interval.score != b.interval.score) return a.interval.score > b.interval.score;
  if (a.interval.start_s != b.interval.start_s) return a.interval.start_s < b.interval.start_s;
  if (id_a != id_b) return id_a < id_b;
  return a.interval.dur_s < b.interval.dur_s;
}

/// Greedy highest-rank-first matching; returns per-proposal TP flags.
std::vector<bool> greedy_match(const std::vector<RankedProposal>& ranked,
                               std::span<const ClipEval> clips, double threshold,
                               std::vector<std::vector<bool>>& gt_used) {
  std::vector<bool> tp(ranked.size(), false);
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& clip = clips[ranked[r].clip];
    int best = -1;
    double best_tiou = 0.0;
    for (std::size_t g = 0; g < clip.gts.size(); ++g) {
      if (gt_used[ranked[r].clip][g]) continue;
      const double v = tiou(ranked[r].interval, clip.gts[g]);
      if (v > best_tiou) {
        best_tiou = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0 && best_tiou >= threshold) {
      tp[r] = true;
      gt_used[ranked[r].clip][static_cast<std::size_t>(best)] = true;
    }
  }
  return tp;
}

}  // namespace

double average_precision(std::span<const ClipEval> clips, double tiou_threshold) {
  std::size_t total_gts = 0, total_props = 0;
  for (const auto& c : clips) {
    total_gts += c.gts.size();
    total_props += c.proposals.size();
  }
  if (total_gts == 0) return total_props == 0 ? 1.0 : 0.0;
  if (total_props == 0) return 0.0;

  std::vector<RankedProposal> ranked;
  ranked.reserve(total_props);
  for (std::size_t ci = 0; ci < clips.size(); ++ci)
    for (const auto& p : clips[ci].proposals) ranked.push_back({ci, p});
  std::sort(ranked.begin(), ranked.end(), [&](const RankedProposal& a, const RankedProposal& b) {
    return rank_before(a, clips[a.clip].id, b, clips[b.clip].id);
  });

  std::vector<std::vector<bool>> gt_used(clips.size());
  for (std::size_t ci = 0; ci < clips.size(); ++ci)
    gt_used[ci].assign(clips[ci].gts.size(), false);
  const auto tp = greedy_match(ranked, clips, tiou_threshold, gt_used);

  // Precision envelope, integrated over the recall steps at each TP.
  std::vector<double> precision(ranked.size());
  std::size_t tp_cum = 0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    if (tp[r]) ++tp_cum;
    precision[r] = static_cast<double>(tp_cum) / static_cast<double>(r + 1);
  }
  double envelope = 0.0;
  double ap = 0.0;
  for (std::size_t r = ranked.size(); r-- > 0;) {
    envelope = std::max(envelope, precision[r]);
    if (tp[r]) ap += envelope / static_cast<double>(total_gts);
  }
  return ap;
}

const std::vector<double>& tiou_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    for (int i = 50; i <= 95; i += 5) g.push_back(i / 100.0);
    return g;
  }();
  return grid;
}

double mean_ap(std::span<const ClipEval> clips) {
  double total = 0.0;
  for (double t : tiou_grid()) total += average_precision(clips, t);
  return total / static_cast<double>(tiou_grid().size());
}

double average_recall_at_n(std::span<const ClipEval> clips, int top_n) {
  std::size_t total_gts = 0;
  for (const auto& c : clips) total_gts += c.gts.size();
  if (total_gts == 0) return 1.0;  // nothing to recall
  if (top_n <= 0) return 0.0;

  // Top-N proposals per clip under the same deterministic ranking.
  std::vector<ClipEval> trimmed(clips.begin(), clips.end());
  for (auto& c : trimmed) {
    std::sort(c.proposals.begin(), c.proposals.end(),
              [&](const ProposalInterval& a, const ProposalInterval& b) {
                if (a.score != b.score) return a.score > b.score;
                if (a.start_s != b.start_s) return a.start_s < b.start_s;
                return a.dur_s < b.dur_s;
              });
    if (c.proposals.size() > static_cast<std::size_t>(top_n))
      c.proposals.resize(static_cast<std::size_t>(top_n));
  }

  double recall_sum = 0.0;
  for (double t : tiou_grid()) {
    std::size_t matched = 0;
    for (const auto& c : trimmed) {
      std::vector<RankedProposal> ranked;
      for (const auto& p : c.proposals) ranked.push_back({0, p});
      std::vector<std::vector<bool>> used(1);
      used[0].assign(c.gts.size(), false);
      const ClipEval single[] = {c};
      const auto tp = greedy_match(ranked, single, t, used);
      for (bool flag : tp) matched += flag ? 1 : 0;
    }
    recall_sum += static_cast<double>(matched) / static_cast<double>(total_gts);
  }
  return recall_sum / static_cast<double>(tiou_grid().size());
}

PfdReport evaluate_pfd(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                       double operating_threshold) {
  PfdReport report;
  const auto e = eer(scores, labels);
  report.eer = e.eer;
  report.eer_threshold = e.threshold;
  report.auc = auc(scores, labels);
  report.operating_threshold = operating_threshold;
  const auto cm = confusion_metrics(scores, labels, operating_threshold);
  report.fpr = cm.fpr;
  report.fnr = cm.fnr;
  report.precision = cm.precision;
  report.recall = cm.recall;
  report.f1 = cm.f1;
  return report;
}

TflReport evaluate_tfl(std::span<const ClipEval> clips) {
  TflReport report;
  for (double t : {0.5, 0.75, 0.9, 0.95}) report.ap_at[t] = average_precision(clips, t);
  report.map_score = mean_ap(clips);
  for (int n : {1, 2, 5, 10, 20}) report.ar_at_n[n] = average_recall_at_n(clips, n);
  return report;
}

std::string PfdReport::to_json() const {
  json j{{"eer", eer},
         {"eer_threshold", eer_threshold},
         {"auc", auc},
         {"operating_threshold", operating_threshold},
         {"fpr", fpr},
         {"fnr", fnr},
         {"precision", precision},
         {"recall", recall},
         {"f1", f1}};
  return j.dump(2);
}

std::string TflReport::to_json() const {
  json ap = json::object();
  for (const auto& [t, v] : ap_at) {
    char key[16];
    std::snprintf(key, sizeof(key), "%.2f", t);
    ap[key] = v;
  }
  json ar = json::object();
  for (const auto& [n, v] : ar_at_n) ar[std::to_string(n)] = v;
  json grid = json::array();
  for (double t : tiou_grid()) grid.push_back(t);
  json j{{"ap_at", ap}, {"map", map_score}, {"ar_at_n", ar}, {"map_tiou_grid", grid}};
  return j.dump(2);
}

}  // namespace tfdl
