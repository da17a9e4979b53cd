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

#include "tfdl/prn.hpp"

#include <algorithm>
#include <cmath>

#include "tfdl/metrics.hpp"
#include "tfdl/rng.hpp"

namespace tfdl {

void PrnConfig::validate() const {
  if (d_prime < 1 || head_hidden < 1) throw Error("prn config: bad widths");
  if (theta_f <= 0.0 || theta_f >= 1.0) throw Error("prn config: theta_f outside (0, 1)");
  if (theta_p <= 0.0 || theta_p >= 1.0) throw Error("prn config: theta_p outside (0, 1)");
  if (lambda_r < 0.0) throw Error("prn config: negative lambda_r");
}

std::vector<ProposalInterval> extract_coarse_proposals(const std::vector<double>& frame_scores,
                                                       double theta_f, double frame_period_s) {
  if (theta_f <= 0.0 || theta_f >= 1.0)
    throw Error("extract_coarse_proposals: theta_f outside (0, 1)");
  std::vector<ProposalInterval> proposals;
  const int frames = static_cast<int>(frame_scores.size());
  int t = 0;
  while (t < frames) {
    if (!(frame_scores[static_cast<std::size_t>(t)] > theta_f)) {
      ++t;
      continue;
    }
    int end = t;
    double score_sum = frame_scores[static_cast<std::size_t>(t)];
    while (end + 1 < frames && frame_scores[static_cast<std::size_t>(end + 1)] > theta_f) {
      ++end;
      score_sum += frame_scores[static_cast<std::size_t>(end)];
    }
    const int run = end - t + 1;
    proposals.push_back({t * frame_period_s, run * frame_period_s, score_sum / run});
    t = end + 1;
  }
  return proposals;
}

std::vector<TypedProposal> match_and_type(const std::vector<ProposalInterval>& proposals,
                                          const std::vector<ForgerySegment>& gts) {
  std::vector<TypedProposal> typed;
  typed.reserve(proposals.size());
  for (const auto& p : proposals) {
    TypedProposal tp;
    tp.interval = p;
    int best = -1;
    double best_tiou = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double v = tiou(p.start_s, p.dur_s, gts[g].start_s, gts[g].dur_s);
      if (v > best_tiou) {
        best_tiou = v;
        best = static_cast<int>(g);
      }
    }
    tp.tiou = best_tiou;
    if (best_tiou > kTiouComplete)
      tp.type = ProposalType::kMostlyComplete;
    else if (best_tiou >= kTiouIncomplete)
      tp.type = ProposalType::kIncomplete;
    else
      tp.type = ProposalType::kNegative;
    if (best >= 0 && best_tiou >= kTiouIncomplete) {
      tp.matched_gt = gts[static_cast<std::size_t>(best)];
      tp.offset_labels = encode_offsets(*tp.matched_gt, p);
    }
    typed.push_back(std::move(tp));
  }
  return typed;
}

std::pair<double, double> encode_offsets(const ForgerySegment& gt, const ProposalInterval& p) {
  if (gt.dur_s <= 0.0 || p.dur_s <= 0.0) throw Error("encode_offsets: non-positive duration");
  const double r_d = std::log(gt.dur_s / p.dur_s);
  const double r_s = (gt.start_s - p.start_s) / gt.dur_s;
  return {r_s, r_d};
}

ProposalInterval decode_offsets(const ProposalInterval& p, double r_s, double r_d,
                                double clip_duration_s) {
  if (!std::isfinite(r_s) || !std::isfinite(r_d)) throw Error("decode_offsets: non-finite offsets");
  ProposalInterval out;
  out.dur_s = p.dur_s * std::exp(r_d);
  out.start_s = p.start_s + r_s * out.dur_s;
  out.score = p.score;
  if (out.start_s < 0.0) out.start_s = 0.0;
  if (clip_duration_s > 0.0 && out.start_s + out.dur_s > clip_duration_s) {
    out.dur_s = std::max(clip_duration_s - out.start_s, 1e-6);
    if (out.start_s + out.dur_s > clip_duration_s)
      out.start_s = std::max(0.0, clip_duration_s - out.dur_s);
  }
  return out;
}

PrnModel::PrnModel(const PrnConfig& cfg, int feature_width, std::uint64_t seed)
    : cfg_(cfg), feature_width_(feature_width) {
  cfg_.validate();
  if (feature_width < 1) throw Error("PrnModel: feature width must be positive");
  Rng rng(derive_seed(seed, 0x70726eULL));
  block1_ = nn::RegionResidualBlock::create(params_, "pool.block0", feature_width, cfg_.d_prime,
                                            rng);
  block2_ = nn::RegionResidualBlock::create(params_, "pool.block1", cfg_.d_prime, cfg_.d_prime,
                                            rng);
  verify_hidden_ = nn::Linear::create(params_, "verify.hidden", cfg_.d_prime, cfg_.head_hidden,
                                      rng);
  verify_out_ = nn::Linear::create(params_, "verify.out", cfg_.head_hidden, 1, rng);
  regress_hidden_ = nn::Linear::create(params_, "regress.hidden", cfg_.d_prime, cfg_.head_hidden,
                                       rng);
  regress_out_ = nn::Linear::create(params_, "regress.out", cfg_.head_hidden, 2, rng);
}

ad::Var PrnModel::pool_region(const ad::Var& f_ba, const ProposalInterval& proposal,
                              double frame_period_s) const {
  if (f_ba.cols() != feature_width_)
    throw Error("pool_region: feature width mismatch");
  const int frames = static_cast<int>(f_ba.rows());
  const int first = static_cast<int>(std::floor(proposal.start_s / frame_period_s + 1e-9));
  int last = static_cast<int>(std::ceil(proposal.end_s() / frame_period_s - 1e-9));
  if (first < 0 || first >= frames || proposal.start_s < 0.0)
    throw Error("pool_region: proposal outside feature range");
  last = std::min(last, frames);
  const int count = std::max(1, last - first);
  if (first + count > frames) throw Error("pool_region: proposal outside feature range");

  // (length x D) -> (D x length) conv layout over time.
  ad::Var region = ad::transpose(ad::slice_rows(f_ba, first, count));
  region = block1_.apply(region, count);
  region = block2_.apply(region, count);
  return ad::transpose(ad::max_over_cols(region));  // 1 x D'
}

ad::Var PrnModel::pool_regions(const ad::Var& f_ba, const std::vector<ProposalInterval>& proposals,
                               double frame_period_s) const {
  if (proposals.empty()) throw Error("pool_regions: no proposals");
  std::vector<ad::Var> parts;
  parts.reserve(proposals.size());
  for (const auto& p : proposals) parts.push_back(pool_region(f_ba, p, frame_period_s));
  return ad::vstack(parts);
}

ad::Var PrnModel::verification_head(const ad::Var& region_features) const {
  return ad::sigmoid(verify_out_(ad::selu(verify_hidden_(region_features))));
}

ad::Var PrnModel::regression_head(const ad::Var& region_features) const {
  return regress_out_(ad::selu(regress_hidden_(region_features)));
}

std::vector<int> sample_verification_set(const std::vector<TypedProposal>& typed,
                                         std::uint64_t seed) {
  std::vector<int> positives, negatives;
  for (std::size_t i = 0; i < typed.size(); ++i) {
    if (typed[i].type == ProposalType::kMostlyComplete)
      positives.push_back(static_cast<int>(i));
    else if (typed[i].type == ProposalType::kNegative)
      negatives.push_back(static_cast<int>(i));
  }
  if (!positives.empty() && negatives.size() > positives.size()) {
    // Fisher-Yates prefix of size |positives|.
    Rng rng(seed);
    for (std::size_t i = 0; i < positives.size(); ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(
                  rng.uniform_int(0, static_cast<int>(negatives.size() - i) - 1));
      std::swap(negatives[i], negatives[j]);
    }
    negatives.resize(positives.size());
  }
  std::vector<int> out = positives;
  out.insert(out.end(), negatives.begin(), negatives.end());
  std::sort(out.begin(), out.end());
  return out;
}

ad::Var verification_loss(const ad::Var& confidences, const std::vector<TypedProposal>& typed,
                          std::uint64_t seed) {
  if (confidences.rows() != static_cast<Eigen::Index>(typed.size()) || confidences.cols() != 1)
    throw Error("verification_loss: confidences must be H x 1 matching typed proposals");
  const auto indices = sample_verification_set(typed, seed);
  if (indices.empty()) return ad::constant_scalar(0.0);
  std::vector<double> targets;
  targets.reserve(indices.size());
  for (int i : indices)
    targets.push_back(typed[static_cast<std::size_t>(i)].type == ProposalType::kMostlyComplete
                          ? 1.0
                          : 0.0);
  return ad::bce_mean(ad::gather_rows(confidences, indices), targets);
}

ad::Var regression_loss(const ad::Var& predicted_offsets,
                        const std::vector<TypedProposal>& typed) {
  if (predicted_offsets.rows() != static_cast<Eigen::Index>(typed.size()) ||
      predicted_offsets.cols() != 2)
    throw Error("regression_loss: predictions must be H x 2 matching typed proposals");
  std::vector<int> regression_set;
  for (std::size_t i = 0; i < typed.size(); ++i)
    if (typed[i].offset_labels) regression_set.push_back(static_cast<int>(i));
  if (regression_set.empty()) return ad::constant_scalar(0.0);

  Mat labels(static_cast<Eigen::Index>(regression_set.size()), 2);
  for (std::size_t i = 0; i < regression_set.size(); ++i) {
    const auto& off = *typed[static_cast<std::size_t>(regression_set[i])].offset_labels;
    labels(static_cast<Eigen::Index>(i), 0) = off.first;
    labels(static_cast<Eigen::Index>(i), 1) = off.second;
  }
  const ad::Var residuals =
      ad::sub(ad::gather_rows(predicted_offsets, regression_set), ad::constant(labels));
  // sum of per-component smooth-L1, averaged over the proposal count
  return ad::scale(ad::sum(ad::smooth_l1(residuals)),
                   1.0 / static_cast<double>(regression_set.size()));
}

ad::Var prn_loss(const ad::Var& l_v, const ad::Var& l_reg, double lambda_r) {
  return ad::add(l_v, ad::scale(l_reg, lambda_r));
}

}  // namespace tfdl
