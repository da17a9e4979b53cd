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

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "tfdl/ad.hpp"
#include "tfdl/nn.hpp"
#include "tfdl/types.hpp"

namespace tfdl {

struct PrnConfig {
  int d_prime = 64;      // TRoI feature width
  int head_hidden = 64;  // MLP hidden width for both heads
  double lambda_r = 0.15;
  double theta_f = 0.5;  // frame-score threshold for coarse proposals
  double theta_p = 0.5;  // verification confidence threshold at inference

  void validate() const;
};

enum class ProposalType { kMostlyComplete, kIncomplete, kNegative };

/// TIoU thresholds from the proposal-typing rule: mostly complete above 0.7
/// (strict), incomplete in [0.4, 0.7).
inline constexpr double kTiouComplete = 0.7;
inline constexpr double kTiouIncomplete = 0.4;

struct TypedProposal {
  ProposalInterval interval;
  std::optional<ForgerySegment> matched_gt;  // present iff tiou >= 0.4
  double tiou = 0.0;                         // best TIoU against any ground truth
  ProposalType type = ProposalType::kNegative;
  std::optional<std::pair<double, double>> offset_labels;  // (r_s, r_d), iff matched_gt
};

/// Maximal runs of frames with score strictly above theta_f become intervals;
/// each proposal's provisional score is the mean frame score over its run.
std::vector<ProposalInterval> extract_coarse_proposals(const std::vector<double>& frame_scores,
                                                       double theta_f,
                                                       double frame_period_s = kFramePeriodS);

/// Matches every proposal to the ground truth of maximal TIoU and applies the
/// typing rule. Offset labels (and matched_gt) are filled when TIoU >= 0.4.
std::vector<TypedProposal> match_and_type(const std::vector<ProposalInterval>& proposals,
                                          const std::vector<ForgerySegment>& gts);

/// r_d = log(d / d_proposal), r_s = (s - s_proposal) / d, with d and s from
/// the ground truth.
std::pair<double, double> encode_offsets(const ForgerySegment& gt, const ProposalInterval& p);

/// d_hat = d_proposal * exp(r_d); s_hat = s_proposal + r_s * d_hat; then the
/// interval is clamped into [0, clip_duration_s]. Inverse of encode_offsets
/// before clamping.
ProposalInterval decode_offsets(const ProposalInterval& p, double r_s, double r_d,
                                double clip_duration_s);

class PrnModel {
 public:
  PrnModel(const PrnConfig& cfg, int feature_width, std::uint64_t seed);

  /// Slices the frames covering the proposal out of F_ba (T x D), applies two
  /// residual conv blocks over time and global max-pooling; returns 1 x D'.
  ad::Var pool_region(const ad::Var& f_ba, const ProposalInterval& proposal,
                      double frame_period_s = kFramePeriodS) const;
  /// Stacks pooled features for several proposals into H x D'.
  ad::Var pool_regions(const ad::Var& f_ba, const std::vector<ProposalInterval>& proposals,
                       double frame_period_s = kFramePeriodS) const;

  /// Two-layer MLP + logistic; input H x D', output H x 1 in (0, 1).
  ad::Var verification_head(const ad::Var& region_features) const;
  /// Two-layer MLP; input H x D', output H x 2 = (r_s, r_d) predictions.
  ad::Var regression_head(const ad::Var& region_features) const;

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const PrnConfig& config() const { return cfg_; }
  int feature_width() const { return feature_width_; }

 private:
  PrnConfig cfg_;
  int feature_width_ = 0;
  nn::ParamStore params_;
  nn::RegionResidualBlock block1_, block2_;
  nn::Linear verify_hidden_, verify_out_;
  nn::Linear regress_hidden_, regress_out_;
};

/// Indices of the proposals entering the verification loss: every
/// MostlyComplete proposal plus a seeded random subsample of Negatives of at
/// most the same size (all Negatives when there are no positives).
/// Incomplete proposals are excluded.
std::vector<int> sample_verification_set(const std::vector<TypedProposal>& typed,
                                         std::uint64_t seed);

/// Mean binary cross-entropy over the sampled set (empty set: loss 0).
ad::Var verification_loss(const ad::Var& confidences, const std::vector<TypedProposal>& typed,
                          std::uint64_t seed);

/// Mean over proposals with TIoU >= 0.4 of per-component smooth-L1 between
/// predicted and label offsets (no such proposals: loss 0).
ad::Var regression_loss(const ad::Var& predicted_offsets, const std::vector<TypedProposal>& typed);

/// L_PRN = L_v + lambda_r * L_reg.
ad::Var prn_loss(const ad::Var& l_v, const ad::Var& l_reg, double lambda_r);

}  // namespace tfdl
