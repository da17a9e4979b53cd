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

#include "tfdl/fdn.hpp"

#include <cmath>

#include "tfdl/rng.hpp"

namespace tfdl {
namespace {

/// Selects column 1 of a T x 2 matrix as T x 1 via a constant selector.
ad::Var take_class1(const ad::Var& probs) {
  Mat sel(2, 1);
  sel << 0.0, 1.0;
  return ad::matmul(probs, ad::constant(sel));
}

std::vector<double> column_to_vector(const Mat& m, Eigen::Index col) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = m(r, col);
  return out;
}

}  // namespace

int FdnConfig::spectral_bins() const {
  int w = model_width;
  for (int s : stack_strides) w = (w + 2 - 3) / s + 1;
  return w;
}

void FdnConfig::validate() const {
  if (model_width < 4) throw Error("fdn config: model_width too small");
  if (stack_channels.empty() || stack_channels.size() != stack_strides.size())
    throw Error("fdn config: stack_channels and stack_strides must be non-empty and equal length");
  for (int c : stack_channels)
    if (c < 1) throw Error("fdn config: non-positive channel count");
  for (int s : stack_strides)
    if (s < 1) throw Error("fdn config: non-positive stride");
  if (spectral_bins() < 2) throw Error("fdn config: strides collapse the spectral axis");
  if (d_prime < 1) throw Error("fdn config: d_prime must be positive");
  if (amlp_hidden_ratio < 1 || amlp_attn_width < 1) throw Error("fdn config: bad aMLP dims");
  if (crl_margin < -1.0 || crl_margin > 1.0) throw Error("fdn config: crl_margin outside [-1, 1]");
  if (crl_pairs_per_frame < 1) throw Error("fdn config: crl_pairs_per_frame must be >= 1");
}

FdnOutput FdnForward::to_output() const {
  FdnOutput out;
  out.y_f = column_to_vector(frame.prob.value(), 0);
  out.y_b = column_to_vector(boundary.prob.value(), 0);
  out.f_ba = f_ba.value();
  out.cos_f = frame.cos.value();
  out.cos_b = boundary.cos.value();
  return out;
}

FdnModel::FdnModel(const FdnConfig& cfg, int input_width, std::uint64_t seed)
    : cfg_(cfg), input_width_(input_width) {
  cfg_.validate();
  if (input_width < 1) throw Error("FdnModel: input width must be positive");
  Rng rng(derive_seed(seed, 0x66646eULL));

  const int d = cfg_.fused_width();
  input_proj_ = nn::Linear::create(params_, "frontend.proj", input_width, cfg_.model_width, rng);

  int in_ch = 1;
  for (std::size_t i = 0; i < cfg_.stack_channels.size(); ++i) {
    stack_.push_back(nn::ResidualBlock::create(params_, "stack.block" + std::to_string(i), in_ch,
                                               cfg_.stack_channels[i], cfg_.stack_strides[i],
                                               rng));
    in_ch = cfg_.stack_channels[i];
  }

  attn_spectral_ = nn::Linear::create(params_, "dafl.attn_s", cfg_.spectral_bins(),
                                      cfg_.spectral_bins(), rng);
  attn_channel_ = nn::Linear::create(params_, "dafl.attn_c", cfg_.channels(), cfg_.channels(),
                                     rng);
  dafl_out_ = nn::Linear::create(params_, "dafl.out", d, d, rng);

  for (int i = 0; i < 2; ++i)
    boundary_blocks_.push_back(nn::AmlpBlock::create(params_, "bencoder.block" + std::to_string(i),
                                                     d, cfg_.amlp_hidden_ratio,
                                                     cfg_.amlp_attn_width, rng));
  boundary_classes_ = params_.add("bhead.classes", nn::glorot_uniform(rng, 2, d));

  cross_wq_ = params_.add("cross.wq", nn::glorot_uniform(rng, d, cfg_.d_prime));
  cross_wk_ = params_.add("cross.wk", nn::glorot_uniform(rng, d, cfg_.d_prime));
  cross_wv_ = params_.add("cross.wv", nn::glorot_uniform(rng, d, cfg_.d_prime));
  cross_out_ = nn::Linear::create(params_, "cross.out", cfg_.d_prime, d, rng);
  cross_ln1_ = nn::LayerNorm::create(params_, "cross.ln1", d);
  ffn_in_ = nn::Linear::create(params_, "cross.ffn_in", d, 2 * d, rng);
  ffn_out_ = nn::Linear::create(params_, "cross.ffn_out", 2 * d, d, rng);
  cross_ln2_ = nn::LayerNorm::create(params_, "cross.ln2", d);

  decoder_block_ = nn::AmlpBlock::create(params_, "decoder.block", d, cfg_.amlp_hidden_ratio,
                                         cfg_.amlp_attn_width, rng);
  decoder_classes_ = params_.add("decoder.classes", nn::glorot_uniform(rng, 2, d));
}

ad::Var FdnModel::project(const ad::Var& front) const {
  if (front.cols() != input_width_)
    throw Error("FdnModel::project: expected width " + std::to_string(input_width_) + ", got " +
                std::to_string(front.cols()));
  return input_proj_(front);
}

SpectroVar FdnModel::residual_stack(const ad::Var& f_ssl) const {
  const int frames = static_cast<int>(f_ssl.rows());
  int width = static_cast<int>(f_ssl.cols());
  ad::Var x = ad::reshape(f_ssl, 1, static_cast<Eigen::Index>(frames) * width);
  for (const auto& block : stack_) {
    x = block.apply(x, frames, width);
    width = block.out_width(width);
  }
  return {x, cfg_.channels(), frames, width};
}

std::pair<ad::Var, ad::Var> FdnModel::split_spectral_channel(const SpectroVar& f_sc) const {
  ad::Var f_s = ad::spectral_mean(f_sc.data, f_sc.channels, f_sc.frames, f_sc.bins);
  ad::Var f_c = ad::channel_mean(f_sc.data, f_sc.channels, f_sc.frames, f_sc.bins);
  return {f_s, f_c};
}

DaflResult FdnModel::dafl(const ad::Var& f_s, const ad::Var& f_c) const {
  DaflResult r;
  r.m_s = ad::softmax_rows(attn_spectral_(f_s));
  r.m_c = ad::softmax_rows(attn_channel_(f_c));
  r.fused = ad::concat_cols(ad::mul(f_c, r.m_c), ad::mul(f_s, r.m_s));
  r.f_da = ad::selu(dafl_out_(r.fused));
  return r;
}

ad::Var FdnModel::boundary_encoder(const ad::Var& f_da) const {
  ad::Var x = f_da;
  for (const auto& block : boundary_blocks_) x = block(x);
  return x;
}

HeadResult FdnModel::boundary_head(const ad::Var& f_b) const {
  HeadResult r;
  r.cos = ad::cosine_matrix(f_b, boundary_classes_);
  r.prob = take_class1(ad::softmax_rows(r.cos));
  return r;
}

CrossAttnResult FdnModel::cross_attention_fuse(const ad::Var& f_da, const ad::Var& f_b) const {
  if (f_da.rows() != f_b.rows() || f_da.cols() != f_b.cols())
    throw Error("cross_attention_fuse: F_da and F_b shapes differ");
  const int frames = static_cast<int>(f_da.rows());
  const int d = static_cast<int>(f_da.cols());

  ad::Var q_in = f_da;
  ad::Var k_in = f_b;
  if (cfg_.use_positional_encoding) {
    ad::Var pe = ad::constant(nn::sinusoidal_positional_encoding(frames, d));
    q_in = ad::add(f_da, pe);
    k_in = ad::add(f_b, pe);
  }

  CrossAttnResult r;
  const ad::Var q = ad::matmul(q_in, cross_wq_);
  const ad::Var k = ad::matmul(k_in, cross_wk_);
  const ad::Var v = ad::matmul(q_in, cross_wv_);
  const double scaling = 1.0 / std::sqrt(static_cast<double>(cfg_.d_prime));
  r.m_ba = ad::softmax_rows(ad::scale(ad::matmul(q, ad::transpose(k)), scaling));
  r.f_ca = ad::matmul(r.m_ba, v);
  r.residual_pre_ln = ad::add(f_da, cross_out_(r.f_ca));
  const ad::Var normed = cross_ln1_(r.residual_pre_ln);
  const ad::Var ffn = ffn_out_(ad::gelu(ffn_in_(normed)));
  r.f_ba = cross_ln2_(ad::add(normed, ffn));
  return r;
}

HeadResult FdnModel::frame_decoder(const ad::Var& f_ba) const {
  HeadResult r;
  const ad::Var decoded = decoder_block_(f_ba);
  r.cos = ad::cosine_matrix(decoded, decoder_classes_);
  r.prob = take_class1(ad::softmax_rows(r.cos));
  return r;
}

FdnForward FdnModel::forward(const Mat& front_features) const {
  FdnForward fwd;
  fwd.f_ssl = project(ad::constant(front_features));
  fwd.f_sc = residual_stack(fwd.f_ssl);
  auto [f_s, f_c] = split_spectral_channel(fwd.f_sc);
  fwd.dafl = dafl(f_s, f_c);
  if (cfg_.enable_bafe) {
    fwd.f_b = boundary_encoder(fwd.dafl.f_da);
    fwd.boundary = boundary_head(fwd.f_b);
    fwd.cross = cross_attention_fuse(fwd.dafl.f_da, fwd.f_b);
    fwd.f_ba = fwd.cross.f_ba;
  } else {
    // Ablation: the fused features fall back to the DAFL path and boundary
    // scores are uninformative constants.
    const int frames = static_cast<int>(front_features.rows());
    fwd.f_b = fwd.dafl.f_da;
    fwd.boundary.cos = ad::constant(Mat::Zero(frames, 2));
    fwd.boundary.prob = ad::constant(Mat::Constant(frames, 1, 0.5));
    fwd.f_ba = fwd.dafl.f_da;
  }
  fwd.frame = frame_decoder(fwd.f_ba);
  return fwd;
}

FdnOutput FdnModel::forward_eval(const Mat& front_features) const {
  ad::NoGradGuard guard;
  return forward(front_features).to_output();
}

double cosine_sim(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw Error("cosine_sim: length mismatch");
  Mat am(1, a.size()), bm(1, b.size());
  am.row(0) = a.transpose();
  bm.row(0) = b.transpose();
  // Routed through the graph op so degenerate inputs hit the same zero-norm
  // convention and counter.
  return ad::paired_cosine(ad::constant(am), ad::constant(bm)).value()(0, 0);
}

std::vector<PairSample> sample_crl_pairs(const FrameLabelTrack& labels, int pairs,
                                         std::uint64_t seed) {
  const int frames = labels.frames();
  if (frames < 2) throw Error("sample_crl_pairs: need at least two frames");
  std::vector<int> fake_idx, real_idx;
  for (int t = 0; t < frames; ++t)
    (labels.y_fake[t] ? fake_idx : real_idx).push_back(t);

  const bool cross_possible = !fake_idx.empty() && !real_idx.empty();
  const bool same_possible = fake_idx.size() >= 2 || real_idx.size() >= 2;

  Rng rng(seed);
  std::vector<PairSample> out;
  out.reserve(static_cast<std::size_t>(pairs));
  for (int j = 0; j < pairs; ++j) {
    bool want_same = rng.bernoulli(0.5);
    if (want_same && !same_possible) want_same = false;
    if (!want_same && !cross_possible) want_same = true;
    PairSample p;
    if (want_same) {
      // Reference frame uniform over frames whose class has a partner.
      const auto& pool_a = (fake_idx.size() >= 2 && real_idx.size() >= 2)
                               ? (rng.bernoulli(0.5) ? fake_idx : real_idx)
                               : (fake_idx.size() >= 2 ? fake_idx : real_idx);
      p.a = pool_a[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool_a.size()) - 1))];
      do {
        p.b = pool_a[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<int>(pool_a.size()) - 1))];
      } while (p.b == p.a);
      p.similar = true;
    } else {
      p.a = real_idx[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(real_idx.size()) - 1))];
      p.b = fake_idx[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(fake_idx.size()) - 1))];
      p.similar = false;
    }
    out.push_back(p);
  }
  return out;
}

ad::Var crl_loss(const ad::Var& f_da, const FrameLabelTrack& labels, int pairs,
                 std::uint64_t seed, double margin) {
  const auto samples = sample_crl_pairs(labels, pairs, seed);
  std::vector<int> a_idx, b_idx;
  Mat similar_mask(static_cast<Eigen::Index>(samples.size()), 1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    a_idx.push_back(samples[i].a);
    b_idx.push_back(samples[i].b);
    similar_mask(static_cast<Eigen::Index>(i), 0) = samples[i].similar ? 1.0 : 0.0;
  }
  const ad::Var sims =
      ad::paired_cosine(ad::gather_rows(f_da, a_idx), ad::gather_rows(f_da, b_idx));
  const ad::Var mask = ad::constant(similar_mask);
  const ad::Var inv_mask = ad::constant((1.0 - similar_mask.array()).matrix());
  const ad::Var similar_term = ad::square(ad::add_scalar(ad::scale(sims, -1.0), 1.0));
  const ad::Var dissimilar_term = ad::square(ad::relu(ad::add_scalar(sims, -margin)));
  return ad::mean(ad::add(ad::mul(mask, similar_term), ad::mul(inv_mask, dissimilar_term)));
}

ad::Var p2sgrad_mse(const ad::Var& cos_activations,
                    const std::vector<std::uint8_t>& target_class) {
  const Eigen::Index frames = cos_activations.rows();
  if (frames != static_cast<Eigen::Index>(target_class.size()))
    throw Error("p2sgrad_mse: target length mismatch");
  if (cos_activations.cols() != 2) throw Error("p2sgrad_mse: expected T x 2 activations");
  Mat onehot = Mat::Zero(frames, 2);
  for (Eigen::Index t = 0; t < frames; ++t)
    onehot(t, target_class[static_cast<std::size_t>(t)] ? 1 : 0) = 1.0;
  const ad::Var diff = ad::sub(cos_activations, ad::constant(onehot));
  return ad::scale(ad::sum(ad::square(diff)), 1.0 / static_cast<double>(frames));
}

FdnLossBundle fdn_loss(const FdnForward& fwd, const FrameLabelTrack& labels, const FdnConfig& cfg,
                       std::uint64_t crl_seed) {
  if (fwd.frame.cos.rows() != labels.frames())
    throw Error("fdn_loss: frame count mismatch between forward pass and labels");

  FdnLossBundle bundle;
  bundle.l_f = p2sgrad_mse(fwd.frame.cos, labels.y_fake);
  bundle.l_c = (cfg.lambda_c != 0.0)
                   ? crl_loss(fwd.dafl.f_da, labels, cfg.crl_pairs_per_frame * labels.frames(),
                              crl_seed, cfg.crl_margin)
                   : ad::constant_scalar(0.0);
  bundle.l_b = cfg.enable_bafe ? p2sgrad_mse(fwd.boundary.cos, labels.y_boundary)
                               : ad::constant_scalar(0.0);
  bundle.total = ad::add(bundle.l_f, ad::add(ad::scale(bundle.l_c, cfg.lambda_c),
                                             ad::scale(bundle.l_b, cfg.lambda_b)));
  return bundle;
}

}  // namespace tfdl
