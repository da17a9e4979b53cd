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

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfdl {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;

/// Error type for every recoverable failure in the library (bad config,
/// malformed files, infeasible generation requests, shape mismatches).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Labels and scores live on a fixed 20 ms frame grid.
inline constexpr double kFramePeriodS = 0.02;

/// Number of whole frames covering `duration_s` at `period_s`.
/// floor() with a small guard so that e.g. 10.0 / 0.02 lands on 500 instead
/// of 499 due to 0.02 not being representable in binary.
inline int frames_for_duration(double duration_s, double period_s = kFramePeriodS) {
  if (period_s <= 0.0) throw Error("frame period must be positive");
  return static_cast<int>(std::floor(duration_s / period_s + 1e-9));
}

/// One forged region of a clip, in seconds.
struct ForgerySegment {
  double start_s = 0.0;
  double dur_s = 0.0;

  double end_s() const { return start_s + dur_s; }
};

/// A scored localization interval (coarse or refined proposal).
struct ProposalInterval {
  double start_s = 0.0;
  double dur_s = 0.0;
  double score = 0.0;

  double end_s() const { return start_s + dur_s; }
};

/// Per-frame fake/boundary labels rasterized from segments.
struct FrameLabelTrack {
  double frame_period_s = kFramePeriodS;
  std::vector<std::uint8_t> y_fake;
  std::vector<std::uint8_t> y_boundary;

  int frames() const { return static_cast<int>(y_fake.size()); }
};

/// Mono PCM audio in [-1, 1].
struct AudioClip {
  std::string id;
  int sample_rate = 16000;
  std::vector<double> samples;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

/// Which stage of the network produced a feature sequence.
enum class FeatureStage { kFront, kSsl, kSc, kDa, kB, kBa };

/// T x D real feature sequence at the frame rate.
struct FeatureMatrix {
  Mat data;
  double frame_period_s = kFramePeriodS;
  FeatureStage stage = FeatureStage::kFront;

  int frames() const { return static_cast<int>(data.rows()); }
  int width() const { return static_cast<int>(data.cols()); }
};

/// C x T x S feature map from the residual stack, stored as a C x (T*S)
/// row-major matrix plus explicit dimensions.
struct SpectroChannelTensor {
  Mat data;  // channels x (frames * bins)
  int channels = 0;
  int frames = 0;
  int bins = 0;

  double at(int c, int t, int s) const { return data(c, t * bins + s); }
};

}  // namespace tfdl
