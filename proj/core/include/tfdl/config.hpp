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
#include <string>

#include "tfdl/corpus.hpp"
#include "tfdl/fdn.hpp"
#include "tfdl/frontend.hpp"
#include "tfdl/prn.hpp"
#include "tfdl/types.hpp"

namespace tfdl {

/// Configuration or usage errors map to exit code 2 in the CLI.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

struct TrainStageConfig {
  int epochs = 50;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int batch_size = 2;

  void validate() const {
    if (epochs < 0) throw ConfigError("train config: negative epochs");
    if (lr < 0.0) throw ConfigError("train config: negative learning rate");
    if (weight_decay < 0.0) throw ConfigError("train config: negative weight decay");
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
  }
};

/// Reference hyper-parameters for training on top of a large pretrained
/// front-end (kept selectable; the shipped defaults target the synthetic
/// log-mel setup instead).
struct PretrainedReference {
  static constexpr int kFdnEpochs = 30;
  static constexpr double kFdnLr = 1e-7;
  static constexpr double kFdnWeightDecay = 1e-4;
  static constexpr int kPrnEpochs = 50;
  static constexpr double kPrnLr = 1e-3;
  static constexpr double kPrnWeightDecay = 1e-3;
};

struct InferConfig {
  double soft_nms_sigma = 0.5;
  double soft_nms_min_score = 0.001;

  void validate() const {
    if (soft_nms_sigma <= 0.0) throw ConfigError("infer config: soft_nms_sigma must be > 0");
    if (soft_nms_min_score < 0.0) throw ConfigError("infer config: negative soft_nms_min_score");
  }
};

struct EvalConfig {
  double operating_threshold = 0.5;

  void validate() const {
    if (operating_threshold <= 0.0 || operating_threshold >= 1.0)
      throw ConfigError("eval config: operating_threshold outside (0, 1)");
  }
};

struct FullConfig {
  std::uint64_t seed = 7;
  int n_clips = 50;
  GeneratorConfig corpus;
  FrontendConfig frontend;
  FdnConfig fdn;
  PrnConfig prn;
  TrainStageConfig train_fdn{50, 1e-3, 1e-4, 2};
  TrainStageConfig train_prn{50, 1e-3, 1e-3, 2};
  InferConfig infer;
  EvalConfig eval;

  void validate() const;
};

/// Parses a config file; unknown keys are rejected with a ConfigError naming
/// the key. Missing keys keep their defaults.
FullConfig load_config(const std::filesystem::path& path);
FullConfig parse_config_json(const std::string& text);

/// Fully resolved snapshot (every key explicit), for run manifests and
/// checkpoints.
std::string config_to_json(const FullConfig& cfg);

}  // namespace tfdl
