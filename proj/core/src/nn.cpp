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

#include "tfdl/nn.hpp"

#include <cmath>

namespace tfdl::nn {

ad::Var& ParamStore::add(const std::string& name, Mat init) {
  if (index_.count(name)) throw Error("ParamStore: duplicate parameter " + name);
  index_[name] = items_.size();
  items_.emplace_back(name, ad::param(std::move(init)));
  return items_.back().second;
}

ad::Var& ParamStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("ParamStore: unknown parameter " + name);
  return items_[it->second].second;
}

const ad::Var& ParamStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("ParamStore: unknown parameter " + name);
  return items_[it->second].second;
}

void ParamStore::zero_grad() {
  for (auto& [name, var] : items_) {
    if (var.node_->grad.size() != 0) var.node_->grad.setZero();
  }
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, var] : items_) n += static_cast<std::size_t>(var.value().size());
  return n;
}

void ParamStore::set_value(const std::string& name, const Mat& value) {
  ad::Var& var = at(name);
  if (var.rows() != value.rows() || var.cols() != value.cols())
    throw Error("ParamStore: shape mismatch for " + name + " (" + std::to_string(var.rows()) +
                "x" + std::to_string(var.cols()) + " vs " + std::to_string(value.rows()) + "x" +
                std::to_string(value.cols()) + ")");
  var.mutable_value() = value;
}

Mat glorot_uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols, double fan_in,
                   double fan_out) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  return m;
}

Mat glorot_uniform(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  return glorot_uniform(rng, rows, cols, static_cast<double>(rows), static_cast<double>(cols));
}

Mat sinusoidal_positional_encoding(int frames, int width) {
  Mat pe(frames, width);
  for (int t = 0; t < frames; ++t) {
    for (int i = 0; i < width; ++i) {
      const double exponent = static_cast<double>(2 * (i / 2)) / width;
      const double angle = t / std::pow(10000.0, exponent);
      pe(t, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Linear Linear::create(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng) {
  Linear l;
  l.weight = ps.add(prefix + ".w", glorot_uniform(rng, in, out));
  l.bias = ps.add(prefix + ".b", Mat::Zero(1, out));
  return l;
}

LayerNorm LayerNorm::create(ParamStore& ps, const std::string& prefix, int width) {
  LayerNorm ln;
  ln.gamma = ps.add(prefix + ".gamma", Mat::Ones(1, width));
  ln.beta = ps.add(prefix + ".beta", Mat::Zero(1, width));
  return ln;
}

AmlpBlock AmlpBlock::create(ParamStore& ps, const std::string& prefix, int width,
                            int hidden_ratio, int attn_width, Rng& rng) {
  const int half = std::max(1, width * hidden_ratio / 2);
  AmlpBlock b;
  b.ln = LayerNorm::create(ps, prefix + ".ln", width);
  b.value_in = Linear::create(ps, prefix + ".value_in", width, half, rng);
  b.gate_in = Linear::create(ps, prefix + ".gate_in", width, half, rng);
  b.attn_q = Linear::create(ps, prefix + ".attn_q", width, attn_width, rng);
  b.attn_k = Linear::create(ps, prefix + ".attn_k", width, attn_width, rng);
  b.attn_v = Linear::create(ps, prefix + ".attn_v", width, half, rng);
  b.out_proj = Linear::create(ps, prefix + ".out", half, width, rng);
  b.attn_width = attn_width;
  return b;
}

ad::Var AmlpBlock::operator()(const ad::Var& x) const {
  const ad::Var xn = ln(x);
  const ad::Var value = ad::gelu(value_in(xn));
  const ad::Var gate_base = ad::gelu(gate_in(xn));
  const ad::Var q = attn_q(xn);
  const ad::Var k = attn_k(xn);
  const ad::Var v = attn_v(xn);
  const ad::Var weights = ad::softmax_rows(
      ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(static_cast<double>(attn_width))));
  const ad::Var attn = ad::matmul(weights, v);
  const ad::Var gate = ad::add(gate_base, attn);
  return ad::add(x, out_proj(ad::mul(value, gate)));
}

ConvLayer ConvLayer::create(ParamStore& ps, const std::string& prefix, int in_ch, int out_ch,
                            int kernel_h, int kernel_w, int stride_h, int stride_w, int pad_h,
                            int pad_w, Rng& rng) {
  ConvLayer c;
  c.in_channels = in_ch;
  c.out_channels = out_ch;
  c.kernel_h = kernel_h;
  c.kernel_w = kernel_w;
  c.stride_h = stride_h;
  c.stride_w = stride_w;
  c.pad_h = pad_h;
  c.pad_w = pad_w;
  const double fan_in = static_cast<double>(in_ch) * kernel_h * kernel_w;
  const double fan_out = static_cast<double>(out_ch) * kernel_h * kernel_w;
  c.weight = ps.add(prefix + ".w",
                    glorot_uniform(rng, out_ch, in_ch * kernel_h * kernel_w, fan_in, fan_out));
  c.bias = ps.add(prefix + ".b", Mat::Zero(out_ch, 1));
  return c;
}

ad::Var ConvLayer::apply(const ad::Var& x, int height, int width) const {
  ad::Conv2dSpec spec;
  spec.in_channels = in_channels;
  spec.height = height;
  spec.width = width;
  spec.kernel_h = kernel_h;
  spec.kernel_w = kernel_w;
  spec.stride_h = stride_h;
  spec.stride_w = stride_w;
  spec.pad_h = pad_h;
  spec.pad_w = pad_w;
  return ad::conv2d(x, weight, bias, spec);
}

ResidualBlock ResidualBlock::create(ParamStore& ps, const std::string& prefix, int in_ch,
                                    int out_ch, int stride_w, Rng& rng) {
  ResidualBlock b;
  b.conv1 = ConvLayer::create(ps, prefix + ".conv1", in_ch, out_ch, 1, 3, 1, stride_w, 0, 1, rng);
  b.conv2 = ConvLayer::create(ps, prefix + ".conv2", out_ch, out_ch, 1, 3, 1, 1, 0, 1, rng);
  b.needs_projection = in_ch != out_ch || stride_w != 1;
  if (b.needs_projection)
    b.skip = ConvLayer::create(ps, prefix + ".skip", in_ch, out_ch, 1, 1, 1, stride_w, 0, 0, rng);
  return b;
}

ad::Var ResidualBlock::apply(const ad::Var& x, int height, int width) const {
  const int mid_width = conv1.out_width(width);
  ad::Var h = ad::selu(conv1.apply(x, height, width));
  h = conv2.apply(h, height, mid_width);
  ad::Var shortcut = needs_projection ? skip.apply(x, height, width) : x;
  return ad::selu(ad::add(h, shortcut));
}

RegionResidualBlock RegionResidualBlock::create(ParamStore& ps, const std::string& prefix,
                                                int in_ch, int out_ch, Rng& rng) {
  RegionResidualBlock b;
  b.conv1 = ConvLayer::create(ps, prefix + ".conv1", in_ch, out_ch, 3, 1, 1, 1, 1, 0, rng);
  b.conv2 = ConvLayer::create(ps, prefix + ".conv2", out_ch, out_ch, 3, 1, 1, 1, 1, 0, rng);
  b.needs_projection = in_ch != out_ch;
  if (b.needs_projection)
    b.skip = ConvLayer::create(ps, prefix + ".skip", in_ch, out_ch, 1, 1, 1, 1, 0, 0, rng);
  b.norm1_gamma = ps.add(prefix + ".norm1.gamma", Mat::Ones(out_ch, 1));
  b.norm1_beta = ps.add(prefix + ".norm1.beta", Mat::Zero(out_ch, 1));
  b.norm2_gamma = ps.add(prefix + ".norm2.gamma", Mat::Ones(out_ch, 1));
  b.norm2_beta = ps.add(prefix + ".norm2.beta", Mat::Zero(out_ch, 1));
  return b;
}

ad::Var RegionResidualBlock::apply(const ad::Var& x, int length) const {
  auto normalize = [&](const ad::Var& h, const ad::Var& gamma, const ad::Var& beta) {
    return ad::add_colvec(ad::mul_colvec(ad::norm_rows(h), gamma), beta);
  };
  ad::Var h = ad::selu(normalize(conv1.apply(x, length, 1), norm1_gamma, norm1_beta));
  h = normalize(conv2.apply(h, length, 1), norm2_gamma, norm2_beta);
  ad::Var shortcut = needs_projection ? skip.apply(x, length, 1) : x;
  return ad::selu(ad::add(h, shortcut));
}

}  // namespace tfdl::nn
