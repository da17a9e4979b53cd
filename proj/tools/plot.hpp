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
#include <vector>

#include "tfdl/predictions.hpp"
#include "tfdl/types.hpp"

namespace tfdl::plot {

/// Timeline panel for one clip: ground-truth band, frame/boundary score
/// curves, and the coarse/refined proposal rows. Written as an 8-bit RGB PNG.
void render_clip_png(const std::filesystem::path& path, const ClipPrediction& prediction,
                     const std::vector<ForgerySegment>& gts, double duration_s, double theta_f);

}  // namespace tfdl::plot
