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

#include "tfdl/types.hpp"

namespace tfdl {

/// Writes mono 16-bit PCM. Samples are clamped to [-1, 1] and quantized with
/// round(x * 32768), so a read-back differs from the input by at most 1/32768
/// per sample.
void write_wav16(const std::filesystem::path& path, const std::vector<double>& samples,
                 int sample_rate);

/// Reads a mono 16-bit PCM WAV. Anything else (stereo, float, compressed)
/// is rejected with an Error naming the file.
AudioClip read_wav16(const std::filesystem::path& path);

}  // namespace tfdl
