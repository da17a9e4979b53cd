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

#include <filesystem>

#include "tfdl/types.hpp"

namespace tfdl {

struct FrontendConfig {
  int n_mels = 64;
  double win_ms = 25.0;
  double hop_ms = 20.0;  // matches the label frame period
  int fft_size = 512;

  void validate() const;
};

/// Log-mel filterbank features: Hann window, magnitude spectrum, triangular
/// mel bank, log(x + 1e-6) compression. One row per 20 ms frame,
/// T = floor(duration / hop).
FeatureMatrix extract_features(const AudioClip& clip, const FrontendConfig& cfg);

/// Row-wise affine map to the model width: out = F * W + bias.
/// W is (input width) x (output width); bias length must match W's columns.
FeatureMatrix project_to_model_dim(const FeatureMatrix& features, const Mat& weight,
                                   const Vec& bias);

/// Reads the external feature container: little-endian "TFRF" magic,
/// u32 version, u32 T, u32 D, then T*D float32 values row-major. Rejects
/// short payloads and non-finite entries (naming the row).
FeatureMatrix load_external_features(const std::filesystem::path& path);

/// Writes the same container (used for fixtures and for exporting features
/// to other tooling).
void write_external_features(const std::filesystem::path& path, const Mat& features);

}  // namespace tfdl
