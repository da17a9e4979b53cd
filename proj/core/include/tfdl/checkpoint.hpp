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
#include <string>
#include <utility>
#include <vector>

#include "tfdl/nn.hpp"
#include "tfdl/types.hpp"

namespace tfdl {

/// Versioned binary container: every named parameter tensor with its shape,
/// plus the resolved config snapshot and the training history. Round-trips
/// bit-exactly (raw little-endian doubles).
struct Checkpoint {
  std::string stage;        // "fdn" or "prn"
  std::string config_json;  // resolved config snapshot
  std::string history_json; // JSON array of per-epoch log records
  std::vector<std::pair<std::string, Mat>> tensors;

  const Mat& tensor(const std::string& name) const;
};

/// Written atomically (temp file + rename).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint checkpoint_from_params(const std::string& stage, const std::string& config_json,
                                  const nn::ParamStore& params,
                                  const std::string& history_json = "[]");

/// Copies tensor values into an existing store; every parameter must be
/// present with a matching shape.
void load_params_from_checkpoint(const Checkpoint& ckpt, nn::ParamStore& params);

}  // namespace tfdl
