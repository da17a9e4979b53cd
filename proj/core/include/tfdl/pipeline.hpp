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
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tfdl/checkpoint.hpp"
#include "tfdl/config.hpp"
#include "tfdl/corpus.hpp"
#include "tfdl/fdn.hpp"
#include "tfdl/frontend.hpp"
#include "tfdl/metrics.hpp"
#include "tfdl/prn.hpp"

namespace tfdl {

/// Adam with L2 weight decay folded into the gradient. Moment buffers are
/// keyed by parameter name, so optimizer state follows the store layout.
class AdamOptimizer {
 public:
  AdamOptimizer(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  /// Applies accumulated gradients and zeroes them.
  void step(nn::ParamStore& params);

 private:
  double lr_, weight_decay_, beta1_, beta2_, eps_;
  std::int64_t steps_ = 0;
  std::unordered_map<std::string, std::pair<Mat, Mat>> moments_;
};

struct EpochLog {
  int epoch = 0;
  double l_total = 0.0;
  double l_f = 0.0;
  double l_c = 0.0;
  double l_b = 0.0;
  double l_v = 0.0;
  double l_reg = 0.0;
  double wall_s = 0.0;

  std::string to_json(const std::string& stage) const;
};

/// In-memory training clip: cached front-end features plus labels.
struct TrainClip {
  std::string id;
  Mat features;  // T x n_mels
  FrameLabelTrack labels;
  std::vector<ForgerySegment> segments;
  double duration_s = 0.0;
};

/// Loads audio from a corpus directory and extracts features once per clip.
std::vector<TrainClip> prepare_training_clips(const CorpusManifest& manifest,
                                              const std::filesystem::path& dir,
                                              const FrontendConfig& frontend);

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> history;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Stage one: Adam on L_FDN over seeded shuffled mini-batches. Aborts with an
/// Error when the loss turns non-finite.
TrainResult train_fdn(const std::vector<TrainClip>& clips, const FullConfig& cfg,
                      const EpochCallback& on_epoch = nullptr);

/// Stage two: the FDN checkpoint is loaded and frozen (its parameters are
/// bit-identical afterwards); the PRN trains on L_PRN with balanced negative
/// sampling. Clips that yield no coarse proposals are skipped.
TrainResult train_prn(const std::vector<TrainClip>& clips, const Checkpoint& fdn_ckpt,
                      const FullConfig& cfg, const EpochCallback& on_epoch = nullptr);

/// Rebuilds a model from a checkpoint (config snapshot + tensors).
FdnModel fdn_from_checkpoint(const Checkpoint& ckpt);
PrnModel prn_from_checkpoint(const Checkpoint& ckpt);

/// Gaussian-decay Soft-NMS: repeatedly take the highest-scoring proposal and
/// decay the rest by exp(-TIoU^2 / sigma); proposals falling below min_score
/// are dropped. Result sorted by decayed score descending.
std::vector<ProposalInterval> soft_nms(std::vector<ProposalInterval> proposals, double sigma,
                                       double min_score);

struct InferenceResult {
  std::vector<double> frame_scores;
  std::vector<double> boundary_scores;
  std::vector<ProposalInterval> coarse_proposals;
  std::vector<ProposalInterval> proposals;  // refined when a PRN is given, else coarse
};

/// FDN forward, coarse proposals at theta_f, then (when a PRN is supplied)
/// verification filtering at theta_p, offset regression, decoding and
/// Soft-NMS. Final proposal scores are the verification confidences.
InferenceResult infer_clip(const Mat& front_features, double duration_s, const FdnModel& fdn,
                           const PrnModel* prn, const FullConfig& cfg);

// ---- gradient checking -----------------------------------------------------

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t checked = 0;
};

/// Central finite differences per scalar parameter against the analytic
/// gradients of loss_fn (which must rebuild its graph on every call).
GradCheckResult grad_check(const std::function<ad::Var()>& loss_fn, nn::ParamStore& params,
                           double eps = 1e-5);

/// Runs the finite-difference checks for every loss at desk scale
/// (T <= 8, D <= 8); returns named results.
std::vector<std::pair<std::string, GradCheckResult>> run_all_grad_checks(std::uint64_t seed);

}  // namespace tfdl
