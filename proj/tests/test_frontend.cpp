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
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "tfdl/corpus.hpp"
#include "tfdl/frontend.hpp"
#include "tfdl/nn.hpp"
#include "tfdl/rng.hpp"

using namespace tfdl;
namespace fs = std::filesystem;

namespace {

AudioClip tone_clip(double duration_s, double freq = 440.0, double amp = 0.5) {
  AudioClip clip;
  clip.sample_rate = 16000;
  const auto n = static_cast<std::size_t>(duration_s * clip.sample_rate);
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    clip.samples[i] = amp * std::sin(2.0 * 3.141592653589793 * freq * i / clip.sample_rate);
  return clip;
}

}  // namespace

TEST_CASE("extract_features: 10 s clip produces 500 frames") {
  const auto features = extract_features(tone_clip(10.0), FrontendConfig{});
  CHECK(features.frames() == 500);
  CHECK(features.width() == 64);
}

TEST_CASE("extract_features: silence maps to the constant log floor") {
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.assign(16000, 0.0);
  const auto features = extract_features(clip, FrontendConfig{});
  const double expected = std::log(1e-6);
  for (Eigen::Index r = 0; r < features.data.rows(); ++r)
    for (Eigen::Index c = 0; c < features.data.cols(); ++c)
      CHECK(features.data(r, c) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("extract_features: 2 s clip with 64 mels has shape (100, 64)") {
  const auto features = extract_features(tone_clip(2.0), FrontendConfig{});
  CHECK(features.frames() == 100);
  CHECK(features.width() == 64);
}

TEST_CASE("extract_features: empty audio is rejected") {
  AudioClip clip;
  clip.sample_rate = 16000;
  CHECK_THROWS_AS(extract_features(clip, FrontendConfig{}), Error);
}

TEST_CASE("extract_features: log-domain scale covariance") {
  const auto clip = tone_clip(1.0, 523.0, 0.4);
  const auto base = extract_features(clip, FrontendConfig{});
  for (double gain : {0.5, 2.0}) {
    AudioClip scaled = clip;
    for (double& x : scaled.samples) x *= gain;
    const auto shifted = extract_features(scaled, FrontendConfig{});
    const double max_shift = std::abs(std::log(gain));
    for (Eigen::Index r = 0; r < base.data.rows(); ++r) {
      for (Eigen::Index c = 0; c < base.data.cols(); ++c) {
        const double delta = shifted.data(r, c) - base.data(r, c);
        CHECK(std::abs(delta) <= max_shift + 1e-9);
        // Entries well above the floor shift by exactly log(gain).
        if (base.data(r, c) > std::log(1e-6) + 10.0)
          CHECK(delta == doctest::Approx(std::log(gain)).epsilon(1e-3));
      }
    }
  }
}

TEST_CASE("label and feature frame counts agree per clip") {
  GeneratorConfig cfg;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto [clip, segments] = synth_clip(seed, cfg);
    const auto features = extract_features(clip, FrontendConfig{});
    const auto track = rasterize_labels(segments, clip.duration_s());
    CHECK(features.frames() == track.frames());
  }
}

TEST_CASE("project_to_model_dim: identity weights pass the input through") {
  FeatureMatrix f;
  f.data = Mat::Random(20, 16);
  const auto out = project_to_model_dim(f, Mat::Identity(16, 16), Vec::Zero(16));
  CHECK((out.data - f.data).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(out.stage == FeatureStage::kSsl);
}

TEST_CASE("project_to_model_dim: shape contract and mismatch error") {
  FeatureMatrix f;
  f.data = Mat::Random(100, 64);
  Rng rng(3);
  const Mat w = nn::glorot_uniform(rng, 64, 128);
  const auto out = project_to_model_dim(f, w, Vec::Zero(128));
  CHECK(out.frames() == 100);
  CHECK(out.width() == 128);
  CHECK_THROWS_AS(project_to_model_dim(f, Mat::Random(32, 128), Vec::Zero(128)), Error);
}

TEST_CASE("project_to_model_dim: fixed-seed forward matches the naive oracle") {
  Rng rng(17);
  FeatureMatrix f;
  f.data.resize(3, 4);
  for (Eigen::Index r = 0; r < 3; ++r)
    for (Eigen::Index c = 0; c < 4; ++c) f.data(r, c) = rng.normal();
  Mat w = nn::glorot_uniform(rng, 4, 5);
  Vec bias(5);
  for (int i = 0; i < 5; ++i) bias(i) = rng.normal();

  const auto out = project_to_model_dim(f, w, bias);
  Mat expected = oracles::naive_matmul(f.data, w);
  expected.rowwise() += bias.transpose();
  CHECK((out.data - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("project_to_model_dim: linearity with zero bias") {
  Rng rng(23);
  const Mat w = nn::glorot_uniform(rng, 8, 12);
  FeatureMatrix a, b;
  a.data = Mat::Random(10, 8);
  b.data = Mat::Random(10, 8);
  FeatureMatrix combo;
  combo.data = 2.0 * a.data + 3.0 * b.data;
  const Mat lhs = project_to_model_dim(combo, w, Vec::Zero(12)).data;
  const Mat rhs = 2.0 * project_to_model_dim(a, w, Vec::Zero(12)).data +
                  3.0 * project_to_model_dim(b, w, Vec::Zero(12)).data;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("external features: container round trip") {
  const auto dir = fs::temp_directory_path() / "tfdl_test_tfrf";
  fs::create_directories(dir);
  Mat features = Mat::Random(500, 32);
  write_external_features(dir / "f.tfrf", features);
  const auto loaded = load_external_features(dir / "f.tfrf");
  CHECK(loaded.frames() == 500);
  CHECK(loaded.width() == 32);
  // float32 storage
  CHECK((loaded.data - features).cwiseAbs().maxCoeff() < 1e-6);
  fs::remove_all(dir);
}

TEST_CASE("external features: truncated payload is rejected") {
  const auto dir = fs::temp_directory_path() / "tfdl_test_tfrf_trunc";
  fs::create_directories(dir);
  write_external_features(dir / "f.tfrf", Mat::Random(10, 8));
  const auto full = fs::file_size(dir / "f.tfrf");
  fs::resize_file(dir / "f.tfrf", full - 16);
  CHECK_THROWS_WITH_AS(load_external_features(dir / "f.tfrf"),
                       doctest::Contains("payload size mismatch"), Error);
  fs::remove_all(dir);
}

TEST_CASE("external features: NaN entries are rejected with the row index") {
  const auto dir = fs::temp_directory_path() / "tfdl_test_tfrf_nan";
  fs::create_directories(dir);
  Mat features = Mat::Random(6, 4);
  features(3, 2) = std::numeric_limits<double>::quiet_NaN();
  write_external_features(dir / "f.tfrf", features);
  CHECK_THROWS_WITH_AS(load_external_features(dir / "f.tfrf"), doctest::Contains("row 3"), Error);
  fs::remove_all(dir);
}
