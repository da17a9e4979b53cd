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

#include "tfdl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tfdl/rng.hpp"

namespace tfdl {

using nlohmann::json;

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974ULL;
constexpr std::uint64_t kShuffleStream = 0x73687566ULL;
constexpr std::uint64_t kCrlStream = 0x63726cULL;
constexpr std::uint64_t kNegStream = 0x6e6567ULL;

void seeded_shuffle(std::vector<std::size_t>& order, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i) - 1));
    std::swap(order[i - 1], order[j]);
  }
}

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

void AdamOptimizer::step(nn::ParamStore& params) {
  ++steps_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  for (auto& [name, var] : params.items()) {
    if (var.node_->grad.size() == 0) continue;
    Mat g = var.grad();
    if (weight_decay_ != 0.0) g += weight_decay_ * var.value();
    auto [it, inserted] = moments_.try_emplace(
        name, std::make_pair(Mat::Zero(g.rows(), g.cols()), Mat::Zero(g.rows(), g.cols())));
    Mat& m = it->second.first;
    Mat& v = it->second.second;
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    var.mutable_value().array() -=
        lr_ * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps_);
  }
  params.zero_grad();
}

std::string EpochLog::to_json(const std::string& stage) const {
  json j;
  j["epoch"] = epoch;
  j["L_total"] = l_total;
  if (stage == "prn") {
    j["L_v"] = l_v;
    j["L_reg"] = l_reg;
  } else {
    j["L_f"] = l_f;
    j["L_c"] = l_c;
    j["L_b"] = l_b;
  }
  j["wall_s"] = wall_s;
  return j.dump();
}

std::vector<TrainClip> prepare_training_clips(const CorpusManifest& manifest,
                                              const std::filesystem::path& dir,
                                              const FrontendConfig& frontend) {
  std::vector<TrainClip> clips;
  clips.reserve(manifest.clips.size());
  for (const auto& record : manifest.clips) {
    const AudioClip audio = load_clip_audio(dir, record);
    TrainClip clip;
    clip.id = record.id;
    clip.features = extract_features(audio, frontend).data;
    clip.labels = rasterize_labels(record.segments, audio.duration_s());
    if (clip.labels.frames() != static_cast<int>(clip.features.rows()))
      throw Error("clip " + record.id + ": label/feature frame mismatch");
    clip.segments = record.segments;
    clip.duration_s = audio.duration_s();
    clips.push_back(std::move(clip));
  }
  return clips;
}

TrainResult train_fdn(const std::vector<TrainClip>& clips, const FullConfig& cfg,
                      const EpochCallback& on_epoch) {
  if (clips.empty()) throw Error("train_fdn: empty corpus");
  FdnModel model(cfg.fdn, cfg.frontend.n_mels, derive_seed(cfg.seed, kInitStream));
  AdamOptimizer opt(cfg.train_fdn.lr, cfg.train_fdn.weight_decay);

  std::vector<std::size_t> order(clips.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  for (int epoch = 0; epoch < cfg.train_fdn.epochs; ++epoch) {
    const double t0 = now_s();
    seeded_shuffle(order, derive_seed(cfg.seed, kShuffleStream, static_cast<std::uint64_t>(epoch)));
    EpochLog log;
    log.epoch = epoch;
    for (std::size_t at = 0; at < order.size(); at += cfg.train_fdn.batch_size) {
      const std::size_t batch_end =
          std::min(order.size(), at + static_cast<std::size_t>(cfg.train_fdn.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(batch_end - at);
      for (std::size_t b = at; b < batch_end; ++b) {
        const TrainClip& clip = clips[order[b]];
        const FdnForward fwd = model.forward(clip.features);
        const FdnLossBundle losses =
            fdn_loss(fwd, clip.labels, cfg.fdn,
                     derive_seed(cfg.seed, kCrlStream,
                                 static_cast<std::uint64_t>(epoch) * clips.size() + order[b]));
        const double total = losses.total.item();
        if (!std::isfinite(total))
          throw Error("train_fdn: non-finite loss at epoch " + std::to_string(epoch) + ", clip " +
                      clip.id);
        log.l_total += total;
        log.l_f += losses.l_f.item();
        log.l_c += losses.l_c.item();
        log.l_b += losses.l_b.item();
        ad::backward(ad::scale(losses.total, inv_batch));
      }
      opt.step(model.params());
    }
    const double inv_n = 1.0 / static_cast<double>(clips.size());
    log.l_total *= inv_n;
    log.l_f *= inv_n;
    log.l_c *= inv_n;
    log.l_b *= inv_n;
    log.wall_s = now_s() - t0;
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);
  }

  json history = json::array();
  for (const auto& log : result.history) history.push_back(json::parse(log.to_json("fdn")));
  result.checkpoint =
      checkpoint_from_params("fdn", config_to_json(cfg), model.params(), history.dump());
  return result;
}

FdnModel fdn_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.stage != "fdn") throw Error("expected an fdn checkpoint, got stage " + ckpt.stage);
  const FullConfig cfg = parse_config_json(ckpt.config_json);
  FdnModel model(cfg.fdn, cfg.frontend.n_mels, cfg.seed);
  load_params_from_checkpoint(ckpt, model.params());
  return model;
}

PrnModel prn_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.stage != "prn") throw Error("expected a prn checkpoint, got stage " + ckpt.stage);
  const FullConfig cfg = parse_config_json(ckpt.config_json);
  PrnModel model(cfg.prn, cfg.fdn.fused_width(), cfg.seed);
  load_params_from_checkpoint(ckpt, model.params());
  return model;
}

TrainResult train_prn(const std::vector<TrainClip>& clips, const Checkpoint& fdn_ckpt,
                      const FullConfig& cfg, const EpochCallback& on_epoch) {
  if (clips.empty()) throw Error("train_prn: empty corpus");
  const FdnModel fdn = fdn_from_checkpoint(fdn_ckpt);
  PrnModel prn(cfg.prn, fdn.config().fused_width(), derive_seed(cfg.seed, kInitStream + 1));
  AdamOptimizer opt(cfg.train_prn.lr, cfg.train_prn.weight_decay);

  // Frozen FDN outputs are identical across epochs; compute them once.
  struct PrnSample {
    Mat f_ba;
    std::vector<ProposalInterval> coarse;
    std::vector<TypedProposal> typed;
  };
  std::vector<PrnSample> samples;
  std::vector<std::size_t> usable;
  samples.reserve(clips.size());
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const FdnOutput out = fdn.forward_eval(clips[i].features);
    PrnSample s;
    s.coarse = extract_coarse_proposals(out.y_f, cfg.prn.theta_f);
    if (!s.coarse.empty()) {
      s.f_ba = out.f_ba;
      s.typed = match_and_type(s.coarse, clips[i].segments);
      usable.push_back(i);
    }
    samples.push_back(std::move(s));
  }

  TrainResult result;
  std::vector<std::size_t> order = usable;
  for (int epoch = 0; epoch < cfg.train_prn.epochs; ++epoch) {
    const double t0 = now_s();
    seeded_shuffle(order, derive_seed(cfg.seed, kShuffleStream + 1,
                                      static_cast<std::uint64_t>(epoch)));
    EpochLog log;
    log.epoch = epoch;
    std::size_t seen = 0;
    for (std::size_t at = 0; at < order.size(); at += cfg.train_prn.batch_size) {
      const std::size_t batch_end =
          std::min(order.size(), at + static_cast<std::size_t>(cfg.train_prn.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(batch_end - at);
      for (std::size_t b = at; b < batch_end; ++b) {
        const PrnSample& sample = samples[order[b]];
        const ad::Var f_ba = ad::constant(sample.f_ba);
        const ad::Var regions = prn.pool_regions(f_ba, sample.coarse);
        const ad::Var confidences = prn.verification_head(regions);
        const ad::Var offsets = prn.regression_head(regions);
        const ad::Var l_v = verification_loss(
            confidences, sample.typed,
            derive_seed(cfg.seed, kNegStream,
                        static_cast<std::uint64_t>(epoch) * clips.size() + order[b]));
        const ad::Var l_reg = regression_loss(offsets, sample.typed);
        const ad::Var total = prn_loss(l_v, l_reg, cfg.prn.lambda_r);
        if (!std::isfinite(total.item()))
          throw Error("train_prn: non-finite loss at epoch " + std::to_string(epoch) + ", clip " +
                      clips[order[b]].id);
        log.l_total += total.item();
        log.l_v += l_v.item();
        log.l_reg += l_reg.item();
        ++seen;
        ad::backward(ad::scale(total, inv_batch));
      }
      opt.step(prn.params());
    }
    if (seen > 0) {
      const double inv_n = 1.0 / static_cast<double>(seen);
      log.l_total *= inv_n;
      log.l_v *= inv_n;
      log.l_reg *= inv_n;
    }
    log.wall_s = now_s() - t0;
    result.history.push_back(log);
    if (on_epoch) on_epoch(log);
  }

  json history = json::array();
  for (const auto& log : result.history) history.push_back(json::parse(log.to_json("prn")));
  result.checkpoint =
      checkpoint_from_params("prn", config_to_json(cfg), prn.params(), history.dump());
  return result;
}

std::vector<ProposalInterval> soft_nms(std::vector<ProposalInterval> proposals, double sigma,
                                       double min_score) {
  if (sigma <= 0.0) throw Error("soft_nms: sigma must be positive");
  std::vector<ProposalInterval> kept;
  kept.reserve(proposals.size());
  while (!proposals.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < proposals.size(); ++i)
      if (proposals[i].score > proposals[best].score) best = i;
    const ProposalInterval top = proposals[best];
    proposals.erase(proposals.begin() + static_cast<std::ptrdiff_t>(best));
    kept.push_back(top);
    std::vector<ProposalInterval> remaining;
    remaining.reserve(proposals.size());
    for (auto& p : proposals) {
      const double overlap = tiou(top, p);
      p.score *= std::exp(-(overlap * overlap) / sigma);
      if (p.score >= min_score) remaining.push_back(p);
    }
    proposals = std::move(remaining);
  }
  return kept;
}

InferenceResult infer_clip(const Mat& front_features, double duration_s, const FdnModel& fdn,
                           const PrnModel* prn, const FullConfig& cfg) {
  InferenceResult result;
  const FdnOutput out = fdn.forward_eval(front_features);
  result.frame_scores = out.y_f;
  result.boundary_scores = out.y_b;
  result.coarse_proposals = extract_coarse_proposals(out.y_f, cfg.prn.theta_f);

  if (prn == nullptr || result.coarse_proposals.empty()) {
    result.proposals =
        soft_nms(result.coarse_proposals, cfg.infer.soft_nms_sigma, cfg.infer.soft_nms_min_score);
    return result;
  }

  ad::NoGradGuard guard;
  const ad::Var f_ba = ad::constant(out.f_ba);
  const ad::Var regions = prn->pool_regions(f_ba, result.coarse_proposals);
  const Mat confidences = prn->verification_head(regions).value();
  const Mat offsets = prn->regression_head(regions).value();

  std::vector<ProposalInterval> refined;
  for (std::size_t h = 0; h < result.coarse_proposals.size(); ++h) {
    const double confidence = confidences(static_cast<Eigen::Index>(h), 0);
    if (confidence < cfg.prn.theta_p) continue;
    ProposalInterval p = result.coarse_proposals[h];
    p.score = confidence;
    ProposalInterval decoded = decode_offsets(p, offsets(static_cast<Eigen::Index>(h), 0),
                                              offsets(static_cast<Eigen::Index>(h), 1),
                                              duration_s);
    decoded.score = confidence;
    refined.push_back(decoded);
  }
  result.proposals = soft_nms(std::move(refined), cfg.infer.soft_nms_sigma,
                              cfg.infer.soft_nms_min_score);
  return result;
}

GradCheckResult grad_check(const std::function<ad::Var()>& loss_fn, nn::ParamStore& params,
                           double eps) {
  params.zero_grad();
  ad::backward(loss_fn());

  std::vector<Mat> analytic;
  analytic.reserve(params.items().size());
  for (auto& [name, var] : params.items())
    analytic.push_back(var.node_->grad.size() != 0
                           ? var.grad()
                           : Mat::Zero(var.rows(), var.cols()));

  const auto eval = [&]() {
    ad::NoGradGuard guard;
    return loss_fn().item();
  };

  GradCheckResult result;
  for (std::size_t p = 0; p < params.items().size(); ++p) {
    auto& var = params.items()[p].second;
    for (Eigen::Index r = 0; r < var.rows(); ++r) {
      for (Eigen::Index c = 0; c < var.cols(); ++c) {
        const double original = var.value()(r, c);
        var.mutable_value()(r, c) = original + eps;
        const double up = eval();
        var.mutable_value()(r, c) = original - eps;
        const double down = eval();
        var.mutable_value()(r, c) = original;
        const double numeric = (up - down) / (2.0 * eps);
        const double a = analytic[p](r, c);
        // The 1e-4 floor keeps curvature noise on exactly-zero gradients
        // (e.g. biases cancelled by normalization) from registering as error.
        const double rel =
            std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-4});
        ++result.checked;
        if (rel > result.max_rel_error) {
          result.max_rel_error = rel;
          result.worst_param = params.items()[p].first;
        }
      }
    }
  }
  params.zero_grad();
  return result;
}

std::vector<std::pair<std::string, GradCheckResult>> run_all_grad_checks(std::uint64_t seed) {
  // Desk-scale instance: T = 6 frames, fused width 8.
  FdnConfig fdn_cfg;
  fdn_cfg.model_width = 8;
  fdn_cfg.stack_channels = {2, 4};
  fdn_cfg.stack_strides = {2, 1};
  fdn_cfg.d_prime = 8;
  fdn_cfg.amlp_attn_width = 4;
  fdn_cfg.crl_pairs_per_frame = 2;

  const int frames = 6;
  const int input_width = 5;
  Rng rng(derive_seed(seed, 0x6763ULL));
  Mat features(frames, input_width);
  for (Eigen::Index r = 0; r < features.rows(); ++r)
    for (Eigen::Index c = 0; c < features.cols(); ++c) features(r, c) = rng.normal();

  FrameLabelTrack labels;
  labels.y_fake = {0, 0, 1, 1, 0, 1};
  labels.y_boundary = {0, 0, 1, 1, 0, 1};

  FdnModel fdn_model(fdn_cfg, input_width, derive_seed(seed, 1));
  const std::uint64_t crl_seed = derive_seed(seed, 2);

  std::vector<std::pair<std::string, GradCheckResult>> results;
  const auto check_fdn = [&](const std::string& name, auto pick) {
    results.emplace_back(name, grad_check(
                                   [&]() {
                                     const FdnForward fwd = fdn_model.forward(features);
                                     const FdnLossBundle l =
                                         fdn_loss(fwd, labels, fdn_cfg, crl_seed);
                                     return pick(l);
                                   },
                                   fdn_model.params()));
  };
  check_fdn("L_f", [](const FdnLossBundle& l) { return l.l_f; });
  check_fdn("L_b", [](const FdnLossBundle& l) { return l.l_b; });
  check_fdn("L_c", [](const FdnLossBundle& l) { return l.l_c; });
  check_fdn("L_FDN", [](const FdnLossBundle& l) { return l.total; });

  // PRN: three proposals against one ground truth to cover all three types.
  PrnConfig prn_cfg;
  prn_cfg.d_prime = 8;
  prn_cfg.head_hidden = 8;
  PrnModel prn_model(prn_cfg, fdn_cfg.fused_width(), derive_seed(seed, 3));

  Mat f_ba(frames, fdn_cfg.fused_width());
  for (Eigen::Index r = 0; r < f_ba.rows(); ++r)
    for (Eigen::Index c = 0; c < f_ba.cols(); ++c) f_ba(r, c) = rng.normal();

  const std::vector<ForgerySegment> gts{{0.04, 0.04}};
  const std::vector<ProposalInterval> proposals{
      {0.04, 0.04, 0.9}, {0.02, 0.06, 0.7}, {0.10, 0.02, 0.6}};
  const auto typed = match_and_type(proposals, gts);
  const std::uint64_t neg_seed = derive_seed(seed, 4);

  const auto prn_losses = [&]() {
    const ad::Var regions = prn_model.pool_regions(ad::constant(f_ba), proposals);
    const ad::Var l_v =
        verification_loss(prn_model.verification_head(regions), typed, neg_seed);
    const ad::Var l_reg = regression_loss(prn_model.regression_head(regions), typed);
    return std::make_pair(l_v, l_reg);
  };
  results.emplace_back("L_v", grad_check([&]() { return prn_losses().first; },
                                         prn_model.params()));
  results.emplace_back("L_reg", grad_check([&]() { return prn_losses().second; },
                                           prn_model.params()));
  results.emplace_back("L_PRN", grad_check(
                                    [&]() {
                                      auto [l_v, l_reg] = prn_losses();
                                      return prn_loss(l_v, l_reg, prn_cfg.lambda_r);
                                    },
                                    prn_model.params()));
  return results;
}

}  // namespace tfdl
