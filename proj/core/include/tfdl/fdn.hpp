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

/// Frame-level detection network configuration. The residual stack keeps a
/// one-frame temporal extent (spectral-only kernels), so frame scores are
/// permutation-equivariant once positional encoding is disabled; temporal
/// context enters through the aMLP attention and the cross-attention fusion.
struct FdnConfig {
  int model_width = 128;  // width after the input projection
  std::vector<int> stack_channels{8, 16, 32, 32, 32, 32};
  std::vector<int> stack_strides{2, 2, 1, 1, 1, 1};
  int d_prime = 64;  // cross-attention projection width
  int amlp_hidden_ratio = 2;
  int amlp_attn_width = 16;
  bool use_positional_encoding = true;
  bool enable_bafe = true;
  double crl_margin = 0.3;     // alpha
  int crl_pairs_per_frame = 4; // J = this * T
  double lambda_c = 0.15;
  double lambda_b = 0.1;

  int channels() const { return stack_channels.back(); }
  int spectral_bins() const;
  int fused_width() const { return channels() + spectral_bins(); }
  void validate() const;
};

/// Plain-value outputs of a forward pass.
struct FdnOutput {
  std::vector<double> y_f;  // forgery probability per frame
  std::vector<double> y_b;  // boundary probability per frame
  Mat f_ba;                 // T x D fused features
  Mat cos_f;                // T x 2 cosine activations (real, fake)
  Mat cos_b;                // T x 2 cosine activations (non-boundary, boundary)
};

struct SpectroVar {
  ad::Var data;  // channels x (frames * bins)
  int channels = 0, frames = 0, bins = 0;
};

struct DaflResult {
  ad::Var m_s;    // T x S, rows sum to 1
  ad::Var m_c;    // T x C, rows sum to 1
  ad::Var fused;  // T x (C+S), channel part first
  ad::Var f_da;   // T x D
};

struct HeadResult {
  ad::Var cos;   // T x 2
  ad::Var prob;  // T x 1, softmax over the cosine pair taken at class 1
};

struct CrossAttnResult {
  ad::Var m_ba;             // T x T attention map
  ad::Var f_ca;             // T x D' attended values
  ad::Var residual_pre_ln;  // F_da + proj(F_ca) before normalization
  ad::Var f_ba;             // T x D output
};

/// Graph handles from a full forward pass; used by the losses.
struct FdnForward {
  ad::Var f_ssl;
  SpectroVar f_sc;
  DaflResult dafl;
  ad::Var f_b;
  HeadResult boundary;
  CrossAttnResult cross;
  HeadResult frame;
  ad::Var f_ba;

  FdnOutput to_output() const;
};

/// One sampled frame pair for the contrastive loss (a != b; similar means
/// equal fake labels).
struct PairSample {
  int a = 0;
  int b = 0;
  bool similar = true;
};

class FdnModel {
 public:
  FdnModel(const FdnConfig& cfg, int input_width, std::uint64_t seed);

  ad::Var project(const ad::Var& front) const;
  SpectroVar residual_stack(const ad::Var& f_ssl) const;
  std::pair<ad::Var, ad::Var> split_spectral_channel(const SpectroVar& f_sc) const;
  DaflResult dafl(const ad::Var& f_s, const ad::Var& f_c) const;
  ad::Var boundary_encoder(const ad::Var& f_da) const;
  HeadResult boundary_head(const ad::Var& f_b) const;
  CrossAttnResult cross_attention_fuse(const ad::Var& f_da, const ad::Var& f_b) const;
  HeadResult frame_decoder(const ad::Var& f_ba) const;

  /// Full composition from front-end features (T x input_width).
  FdnForward forward(const Mat& front_features) const;
  /// Forward without building gradient machinery.
  FdnOutput forward_eval(const Mat& front_features) const;

  nn::ParamStore& params() { return params_; }
  const nn::ParamStore& params() const { return params_; }
  const FdnConfig& config() const { return cfg_; }
  int input_width() const { return input_width_; }

 private:
  FdnConfig cfg_;
  int input_width_ = 0;
  nn::ParamStore params_;

  nn::Linear input_proj_;
  std::vector<nn::ResidualBlock> stack_;
  nn::Linear attn_spectral_;  // E_al, spectral branch
  nn::Linear attn_channel_;   // E_al, channel branch
  nn::Linear dafl_out_;
  std::vector<nn::AmlpBlock> boundary_blocks_;
  ad::Var boundary_classes_;  // 2 x D
  ad::Var cross_wq_, cross_wk_, cross_wv_;  // D x D'
  nn::Linear cross_out_;                    // D' -> D
  nn::LayerNorm cross_ln1_, cross_ln2_;
  nn::Linear ffn_in_, ffn_out_;
  nn::AmlpBlock decoder_block_;
  ad::Var decoder_classes_;  // 2 x D
};

/// Cosine similarity between two vectors; 0 for zero-norm inputs (counted by
/// ad::zero_norm_cosine_count).
double cosine_sim(const Vec& a, const Vec& b);

/// Seeded pair sampler: each draw picks a same-label pair with probability
/// 1/2 and a cross-label pair otherwise, falling back to the other kind when
/// a class is empty or too small. Throws for tracks shorter than two frames.
std::vector<PairSample> sample_crl_pairs(const FrameLabelTrack& labels, int pairs,
                                         std::uint64_t seed);

/// Contrastive loss over sampled pairs:
/// mean of I*(1-SIM)^2 + (1-I)*max(0, SIM-alpha)^2.
ad::Var crl_loss(const ad::Var& f_da, const FrameLabelTrack& labels, int pairs,
                 std::uint64_t seed, double margin);

/// Hyper-parameter-free MSE between cosine activations (T x 2) and one-hot
/// targets: (1/T) * sum_t sum_i (cos[t,i] - [i == target_t])^2.
ad::Var p2sgrad_mse(const ad::Var& cos_activations, const std::vector<std::uint8_t>& target_class);

struct FdnLossBundle {
  ad::Var total;
  ad::Var l_f;
  ad::Var l_c;
  ad::Var l_b;
};

/// L_total = L_f + lambda_c * L_c + lambda_b * L_b. The contrastive term is
/// skipped when lambda_c == 0 and the boundary term when BAFE is disabled.
FdnLossBundle fdn_loss(const FdnForward& fwd, const FrameLabelTrack& labels, const FdnConfig& cfg,
                       std::uint64_t crl_seed);

}  // namespace tfdl
