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

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tfdl/ad.hpp"
#include "tfdl/rng.hpp"
#include "tfdl/types.hpp"

namespace tfdl::nn {

/// Named, ordered collection of trainable tensors. Ordering is insertion
/// order, so checkpoints and optimizer state are reproducible.
class ParamStore {
 public:
  ad::Var& add(const std::string& name, Mat init);
  ad::Var& at(const std::string& name);
  const ad::Var& at(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) != 0; }

  void zero_grad();
  std::size_t scalar_count() const;
  const std::vector<std::pair<std::string, ad::Var>>& items() const { return items_; }
  std::vector<std::pair<std::string, ad::Var>>& items() { return items_; }

  /// Overwrites the value of an existing parameter (shape-checked).
  void set_value(const std::string& name, const Mat& value);

 private:
  std::vector<std::pair<std::string, ad::Var>> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

Mat glorot_uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols, double fan_in,
                   double fan_out);
Mat glorot_uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols);

/// Standard sinusoidal positional encoding, frames x width.
Mat sinusoidal_positional_encoding(int frames, int width);

struct Linear {
  ad::Var weight;  // in x out
  ad::Var bias;    // 1 x out

  static Linear create(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng);
  ad::Var operator()(const ad::Var& x) const {
    return ad::add_rowvec(ad::matmul(x, weight), bias);
  }
};

struct LayerNorm {
  ad::Var gamma;  // 1 x d
  ad::Var beta;   // 1 x d

  static LayerNorm create(ParamStore& ps, const std::string& prefix, int width);
  ad::Var operator()(const ad::Var& x) const {
    return ad::add_rowvec(ad::mul_rowvec(ad::norm_rows(x), gamma), beta);
  }
};

/// Gated MLP block with a tiny single-head self-attention on the gate branch
/// and a residual connection; width-preserving. With one frame the attention
/// reduces to identity mixing of that frame.
struct AmlpBlock {
  LayerNorm ln;
  Linear value_in;   // d -> half
  Linear gate_in;    // d -> half
  Linear attn_q;     // d -> attn_width
  Linear attn_k;     // d -> attn_width
  Linear attn_v;     // d -> half
  Linear out_proj;   // half -> d
  int attn_width = 16;

  static AmlpBlock create(ParamStore& ps, const std::string& prefix, int width, int hidden_ratio,
                          int attn_width, Rng& rng);
  ad::Var operator()(const ad::Var& x) const;
};

/// One 2D convolution whose temporal extent is a single frame (kernel height
/// 1), so stacks of these stay permutation-equivariant over time. The frame
/// count varies per clip and is supplied at apply time.
struct ConvLayer {
  ad::Var weight;  // out_ch x (in_ch * kh * kw)
  ad::Var bias;    // out_ch x 1
  int in_channels = 0, out_channels = 0;
  int kernel_h = 1, kernel_w = 3;
  int stride_h = 1, stride_w = 1;
  int pad_h = 0, pad_w = 1;

  static ConvLayer create(ParamStore& ps, const std::string& prefix, int in_ch, int out_ch,
                          int kernel_h, int kernel_w, int stride_h, int stride_w, int pad_h,
                          int pad_w, Rng& rng);
  ad::Var apply(const ad::Var& x, int height, int width) const;
  int out_width(int width) const { return (width + 2 * pad_w - kernel_w) / stride_w + 1; }
  int out_height(int height) const { return (height + 2 * pad_h - kernel_h) / stride_h + 1; }
};

/// conv-SELU-conv with a skip path (1x1 when the shape changes), SELU after
/// the residual add. Coordinates stay (channels) x (frames * bins).
struct ResidualBlock {
  ConvLayer conv1;
  ConvLayer conv2;
  ConvLayer skip;  // used iff needs_projection
  bool needs_projection = false;

  static ResidualBlock create(ParamStore& ps, const std::string& prefix, int in_ch, int out_ch,
                              int stride_w, Rng& rng);
  ad::Var apply(const ad::Var& x, int height, int width) const;
  int out_width(int width) const { return conv1.out_width(width); }
};

/// Residual conv block over time for region pooling: conv + per-channel
/// normalization + SELU twice, with skip. Input layout (channels) x (length).
struct RegionResidualBlock {
  ConvLayer conv1;
  ConvLayer conv2;
  ConvLayer skip;
  bool needs_projection = false;
  ad::Var norm1_gamma, norm1_beta;  // channels x 1
  ad::Var norm2_gamma, norm2_beta;

  static RegionResidualBlock create(ParamStore& ps, const std::string& prefix, int in_ch,
                                    int out_ch, Rng& rng);
  ad::Var apply(const ad::Var& x, int length) const;
};

}  // namespace tfdl::nn
