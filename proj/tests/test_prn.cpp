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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tfdl/corpus.hpp"
#include "tfdl/prn.hpp"
#include "tfdl/rng.hpp"

using namespace tfdl;

namespace {

Mat random_mat(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
  return m;
}

PrnConfig tiny_prn() {
  PrnConfig cfg;
  cfg.d_prime = 8;
  cfg.head_hidden = 8;
  return cfg;
}

}  // namespace

TEST_CASE("extract_coarse_proposals: spec example with two runs") {
  const std::vector<double> scores{0.9, 0.9, 0.1, 0.8};
  const auto proposals = extract_coarse_proposals(scores, 0.5, 0.02);
  REQUIRE(proposals.size() == 2);
  CHECK(proposals[0].start_s == doctest::Approx(0.00));
  CHECK(proposals[0].dur_s == doctest::Approx(0.04));
  CHECK(proposals[0].score == doctest::Approx(0.9));
  CHECK(proposals[1].start_s == doctest::Approx(0.06));
  CHECK(proposals[1].dur_s == doctest::Approx(0.02));
  CHECK(proposals[1].score == doctest::Approx(0.8));
}

TEST_CASE("extract_coarse_proposals: degenerate cases") {
  CHECK(extract_coarse_proposals({0.1, 0.2, 0.3}, 0.5).empty());
  const auto all = extract_coarse_proposals({0.9, 0.8, 0.7}, 0.5);
  REQUIRE(all.size() == 1);
  CHECK(all[0].start_s == doctest::Approx(0.0));
  CHECK(all[0].dur_s == doctest::Approx(0.06));
  CHECK(all[0].score == doctest::Approx(0.8));
  CHECK_THROWS_AS(extract_coarse_proposals({0.5}, 1.5), Error);
}

TEST_CASE("oracle-score consistency: 0/1 tracks reproduce deraster exactly") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const int frames = rng.uniform_int(2, 90);
    FrameLabelTrack track;
    track.frame_period_s = kFramePeriodS;
    track.y_fake.assign(frames, 0);
    int t = rng.uniform_int(0, 4);
    while (t < frames) {
      const int run = rng.uniform_int(1, 5);
      for (int k = t; k < std::min(frames, t + run); ++k) track.y_fake[k] = 1;
      t += run + 1 + rng.uniform_int(0, 3);
    }
    std::vector<double> scores(track.y_fake.begin(), track.y_fake.end());
    const auto proposals = extract_coarse_proposals(scores, 0.5);
    const auto segments = deraster_segments(track);
    REQUIRE(proposals.size() == segments.size());
    for (std::size_t i = 0; i < proposals.size(); ++i) {
      CHECK(proposals[i].start_s == segments[i].start_s);
      CHECK(proposals[i].dur_s == segments[i].dur_s);
      CHECK(proposals[i].score == 1.0);
    }
  }
}

TEST_CASE("match_and_type: spec examples") {
  SUBCASE("identical interval is mostly complete with TIoU 1") {
    const auto typed = match_and_type({{1.0, 0.5, 0.9}}, {{1.0, 0.5}});
    REQUIRE(typed.size() == 1);
    CHECK(typed[0].tiou == doctest::Approx(1.0));
    CHECK(typed[0].type == ProposalType::kMostlyComplete);
    REQUIRE(typed[0].matched_gt.has_value());
    REQUIRE(typed[0].offset_labels.has_value());
    CHECK(typed[0].offset_labels->first == doctest::Approx(0.0));
    CHECK(typed[0].offset_labels->second == doctest::Approx(0.0));
  }
  SUBCASE("(0,2) vs gt (1,2): TIoU 1/3, negative") {
    const auto typed = match_and_type({{0.0, 2.0, 0.9}}, {{1.0, 2.0}});
    CHECK(typed[0].tiou == doctest::Approx(1.0 / 3.0));
    CHECK(typed[0].type == ProposalType::kNegative);
    CHECK_FALSE(typed[0].matched_gt.has_value());
    CHECK_FALSE(typed[0].offset_labels.has_value());
  }
  SUBCASE("(1.0, 2.0) vs gt (1.0, 3.2): TIoU 0.625, incomplete") {
    const auto typed = match_and_type({{1.0, 2.0, 0.9}}, {{1.0, 3.2}});
    CHECK(typed[0].tiou == doctest::Approx(0.625));
    CHECK(typed[0].type == ProposalType::kIncomplete);
    CHECK(typed[0].matched_gt.has_value());
  }
  SUBCASE("boundary senses: exactly 0.7 is incomplete, exactly 0.4 is incomplete") {
    // TIoU = 0.7: proposal (0, 0.7) vs gt (0, 1.0)
    auto typed = match_and_type({{0.0, 0.7, 0.5}}, {{0.0, 1.0}});
    CHECK(typed[0].tiou == doctest::Approx(0.7));
    CHECK(typed[0].type == ProposalType::kIncomplete);
    // TIoU = 0.4: proposal (0, 0.4) vs gt (0, 1.0)
    typed = match_and_type({{0.0, 0.4, 0.5}}, {{0.0, 1.0}});
    CHECK(typed[0].tiou == doctest::Approx(0.4));
    CHECK(typed[0].type == ProposalType::kIncomplete);
  }
  SUBCASE("every proposal receives exactly one type") {
    Rng rng(12);
    std::vector<ProposalInterval> proposals;
    for (int i = 0; i < 40; ++i) {
      const double start = rng.uniform(0.0, 3.0);
      proposals.push_back({start, rng.uniform(0.05, 1.0), rng.uniform()});
    }
    const std::vector<ForgerySegment> gts{{0.5, 0.6}, {2.0, 0.8}};
    for (const auto& tp : match_and_type(proposals, gts)) {
      if (tp.tiou > 0.7) CHECK(tp.type == ProposalType::kMostlyComplete);
      else if (tp.tiou >= 0.4) CHECK(tp.type == ProposalType::kIncomplete);
      else CHECK(tp.type == ProposalType::kNegative);
      CHECK(tp.offset_labels.has_value() == tp.matched_gt.has_value());
    }
  }
}

TEST_CASE("encode_offsets: spec examples and scale invariance") {
  const ForgerySegment gt{1.0, 2.0};
  const ProposalInterval p{0.5, 1.0, 0.0};
  const auto [r_s, r_d] = encode_offsets(gt, p);
  CHECK(r_d == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  CHECK(r_s == doctest::Approx(0.25).epsilon(1e-9));

  // Scaling all times by k leaves both offsets unchanged.
  for (double k : {0.5, 3.0, 10.0}) {
    const ForgerySegment gt_k{k * gt.start_s, k * gt.dur_s};
    const ProposalInterval p_k{k * p.start_s, k * p.dur_s, 0.0};
    const auto [rs_k, rd_k] = encode_offsets(gt_k, p_k);
    CHECK(rs_k == doctest::Approx(r_s).epsilon(1e-12));
    CHECK(rd_k == doctest::Approx(r_d).epsilon(1e-12));
  }

  CHECK_THROWS_AS(encode_offsets({1.0, 0.0}, p), Error);
}

TEST_CASE("decode_offsets: identity, hand case, round trip") {
  const ProposalInterval p{0.5, 1.0, 0.7};
  const auto same = decode_offsets(p, 0.0, 0.0, 10.0);
  CHECK(same.start_s == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(same.dur_s == doctest::Approx(1.0).epsilon(1e-12));

  const auto decoded = decode_offsets(p, 0.25, std::log(2.0), 10.0);
  CHECK(decoded.start_s == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(decoded.dur_s == doctest::Approx(2.0).epsilon(1e-9));

  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const ForgerySegment gt{rng.uniform(0.0, 5.0), rng.uniform(0.05, 2.0)};
    const ProposalInterval prop{rng.uniform(0.0, 5.0), rng.uniform(0.05, 2.0), 0.5};
    const auto [rs, rd] = encode_offsets(gt, prop);
    const auto back = decode_offsets(prop, rs, rd, 1e9);  // no clamping
    CHECK(std::abs(back.start_s - gt.start_s) < 1e-9);
    CHECK(std::abs(back.dur_s - gt.dur_s) < 1e-9);
  }

  // Clamping keeps the interval inside the clip.
  const auto clamped = decode_offsets({3.5, 1.0, 0.5}, 0.4, 0.5, 4.0);
  CHECK(clamped.start_s >= 0.0);
  CHECK(clamped.start_s + clamped.dur_s <= 4.0 + 1e-12);
}

TEST_CASE("pool_region: fixed-size output for every proposal length") {
  const PrnConfig cfg = tiny_prn();
  PrnModel model(cfg, 8, 77);
  Rng rng(5);
  const Mat f_ba = random_mat(rng, 40, 8);
  const ad::Var features = ad::constant(f_ba);
  for (int frames = 1; frames <= 40; frames += 7) {
    const ProposalInterval p{0.0, frames * kFramePeriodS, 1.0};
    const ad::Var pooled = model.pool_region(features, p);
    CHECK(pooled.rows() == 1);
    CHECK(pooled.cols() == cfg.d_prime);
  }
  // Single-frame proposal passes through the conv blocks.
  const ad::Var single = model.pool_region(features, {0.30, kFramePeriodS, 1.0});
  CHECK(single.cols() == cfg.d_prime);

  CHECK_THROWS_AS(model.pool_region(features, {0.84, 0.1, 1.0}), Error);
  CHECK_THROWS_AS(model.pool_region(features, {-0.1, 0.05, 1.0}), Error);
}

TEST_CASE("pool_region: frozen-seed reference on a 3-frame region") {
  PrnModel model(tiny_prn(), 8, 77);
  Rng rng(6);
  const Mat f_ba = random_mat(rng, 10, 8);
  const ad::Var pooled =
      model.pool_region(ad::constant(f_ba), {0.04, 3 * kFramePeriodS, 1.0});
  // Computed once from this fixed seed and frozen.
  CHECK(pooled.value()(0, 0) == doctest::Approx(4.28126218443821).epsilon(1e-10));
  CHECK(pooled.value()(0, 1) == doctest::Approx(3.86985299778062).epsilon(1e-10));
}

TEST_CASE("verification head and loss") {
  PrnModel model(tiny_prn(), 8, 77);
  Rng rng(7);
  const Mat f_ba = random_mat(rng, 30, 8);

  std::vector<ProposalInterval> proposals{{0.04, 0.08, 0.9},   // == gt
                                          {0.30, 0.10, 0.8},   // disjoint
                                          {0.44, 0.06, 0.7}};  // disjoint
  const std::vector<ForgerySegment> gts{{0.04, 0.08}};
  const auto typed = match_and_type(proposals, gts);
  REQUIRE(typed[0].type == ProposalType::kMostlyComplete);
  REQUIRE(typed[1].type == ProposalType::kNegative);
  REQUIRE(typed[2].type == ProposalType::kNegative);

  const ad::Var regions = model.pool_regions(ad::constant(f_ba), proposals);
  const ad::Var conf = model.verification_head(regions);
  REQUIRE(conf.rows() == 3);
  for (Eigen::Index i = 0; i < 3; ++i) {
    CHECK(conf.value()(i, 0) > 0.0);
    CHECK(conf.value()(i, 0) < 1.0);
  }
  const double loss = verification_loss(conf, typed, 3).item();
  CHECK(loss > 0.0);

  SUBCASE("hand BCE values") {
    Mat perfect(2, 1);
    perfect << 1.0 - 1e-9, 1e-9;  // clipped at 1e-7 internally
    std::vector<TypedProposal> two(2);
    two[0].type = ProposalType::kMostlyComplete;
    two[1].type = ProposalType::kNegative;
    CHECK(verification_loss(ad::constant(perfect), two, 1).item() ==
          doctest::Approx(-std::log(1.0 - 1e-7)).epsilon(1e-6));

    Mat half(1, 1);
    half << 0.5;
    std::vector<TypedProposal> one(1);
    one[0].type = ProposalType::kMostlyComplete;
    CHECK(verification_loss(ad::constant(half), one, 1).item() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-9));
  }
}

TEST_CASE("negative subsampling: balance and determinism") {
  std::vector<TypedProposal> typed(13);
  for (int i = 0; i < 10; ++i) typed[i].type = ProposalType::kNegative;
  for (int i = 10; i < 13; ++i) typed[i].type = ProposalType::kMostlyComplete;

  const auto set_a = sample_verification_set(typed, 42);
  const auto set_b = sample_verification_set(typed, 42);
  CHECK(set_a == set_b);
  int positives = 0, negatives = 0;
  for (int i : set_a)
    (typed[static_cast<std::size_t>(i)].type == ProposalType::kMostlyComplete ? positives
                                                                              : negatives)++;
  CHECK(positives == 3);
  CHECK(negatives == 3);  // exactly |positives| retained

  // Different seeds may retain different negatives.
  const auto set_c = sample_verification_set(typed, 43);
  CHECK(set_c.size() == set_a.size());

  SUBCASE("all negatives kept when no positives exist") {
    std::vector<TypedProposal> negs(5);
    for (auto& t : negs) t.type = ProposalType::kNegative;
    CHECK(sample_verification_set(negs, 1).size() == 5);
  }
  SUBCASE("incomplete proposals never enter the verification set") {
    std::vector<TypedProposal> mixed(4);
    mixed[0].type = ProposalType::kMostlyComplete;
    mixed[1].type = ProposalType::kIncomplete;
    mixed[2].type = ProposalType::kIncomplete;
    mixed[3].type = ProposalType::kNegative;
    const auto set = sample_verification_set(mixed, 1);
    for (int i : set) CHECK(mixed[static_cast<std::size_t>(i)].type != ProposalType::kIncomplete);
  }
}

TEST_CASE("regression loss: hand smooth-L1 values") {
  std::vector<TypedProposal> typed(1);
  typed[0].type = ProposalType::kIncomplete;
  typed[0].matched_gt = ForgerySegment{1.0, 2.0};
  typed[0].offset_labels = std::make_pair(0.0, 0.0);

  SUBCASE("perfect predictions give zero") {
    Mat pred = Mat::Zero(1, 2);
    CHECK(regression_loss(ad::constant(pred), typed).item() == doctest::Approx(0.0));
  }
  SUBCASE("component errors (0.5, 0) give 0.125") {
    Mat pred(1, 2);
    pred << 0.5, 0.0;
    CHECK(regression_loss(ad::constant(pred), typed).item() == doctest::Approx(0.125));
  }
  SUBCASE("component errors (2, 0) give 1.5") {
    Mat pred(1, 2);
    pred << 2.0, 0.0;
    CHECK(regression_loss(ad::constant(pred), typed).item() == doctest::Approx(1.5));
  }
  SUBCASE("no proposals with labels give zero loss") {
    std::vector<TypedProposal> negs(2);
    negs[0].type = ProposalType::kNegative;
    negs[1].type = ProposalType::kNegative;
    Mat pred = Mat::Ones(2, 2);
    CHECK(regression_loss(ad::constant(pred), negs).item() == 0.0);
  }
}

TEST_CASE("prn_loss: weighted sum") {
  const ad::Var l_v = ad::constant_scalar(1.0);
  const ad::Var l_reg = ad::constant_scalar(2.0);
  CHECK(prn_loss(l_v, l_reg, 0.15).item() == doctest::Approx(1.30).epsilon(1e-9));
  CHECK(prn_loss(l_v, ad::constant_scalar(0.0), 0.15).item() == doctest::Approx(1.0));
  CHECK(prn_loss(l_v, l_reg, 0.0).item() == doctest::Approx(1.0));
}
