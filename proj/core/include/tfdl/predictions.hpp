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
#include <span>
#include <string>
#include <vector>

#include "tfdl/types.hpp"

namespace tfdl {

/// One JSONL line of inference output. coarse_proposals is informational
/// (pre-refinement); evaluation consumes "proposals".
struct ClipPrediction {
  std::string id;
  std::vector<double> frame_scores;
  std::vector<double> boundary_scores;
  std::vector<ProposalInterval> proposals;
  std::vector<ProposalInterval> coarse_proposals;
};

void write_predictions(const std::filesystem::path& path,
                       std::span<const ClipPrediction> predictions);
std::vector<ClipPrediction> load_predictions(const std::filesystem::path& path);

}  // namespace tfdl
