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
#include <utility>
#include <vector>

#include "tfdl/types.hpp"

namespace tfdl {

/// Controls the synthetic partial-forgery generator. The carrier is a
/// harmonic tone stack plus pink noise; forgery segments are spliced in with
/// a distinct timbre (ring-modulated carrier or tilted noise) and a short
/// crossfade at each boundary.
struct GeneratorConfig {
  double duration_min_s = 4.0;
  double duration_max_s = 4.0;
  int n_segments_min = 0;
  int n_segments_max = 4;
  double seg_dur_min_s = 0.06;
  double seg_dur_max_s = 1.0;
  double min_gap_s = 0.05;  // between segments and at clip edges
  double crossfade_ms = 5.0;
  int sample_rate = 16000;

  double carrier_f0_min_hz = 110.0;
  double carrier_f0_max_hz = 220.0;
  int carrier_harmonics = 5;
  double noise_gain_min = 0.02;
  double noise_gain_max = 0.08;
  double forgery_gain_min = 0.8;
  double forgery_gain_max = 1.2;
  double forgery_ring_freq_min_hz = 600.0;
  double forgery_ring_freq_max_hz = 1500.0;

  void validate() const;
};

struct ClipRecord {
  std::string id;
  std::string audio;  // path relative to the corpus directory
  double duration_s = 0.0;
  std::vector<ForgerySegment> segments;
};

struct CorpusManifest {
  std::vector<ClipRecord> clips;
  std::uint64_t seed = 0;
  std::string config_json;  // generator config snapshot
};

/// Synthesizes one clip. Identical (seed, cfg) always reproduce bit-identical
/// samples and segments. Throws Error when the requested segments cannot fit
/// without overlap.
std::pair<AudioClip, std::vector<ForgerySegment>> synth_clip(std::uint64_t seed,
                                                             const GeneratorConfig& cfg);

/// Frame t is fake iff its midpoint (t + 0.5) * period lies inside a segment
/// ([start, start + dur)). Boundary frames are the first and last fake frame
/// of each maximal fake run; a run of length one gets a single mark.
FrameLabelTrack rasterize_labels(const std::vector<ForgerySegment>& segments, double duration_s,
                                 double frame_period_s = kFramePeriodS);

/// Maximal fake runs mapped back to frame-aligned segments.
/// rasterize_labels(deraster_segments(track), ...) reproduces the track.
std::vector<ForgerySegment> deraster_segments(const FrameLabelTrack& track);

/// Generates n_clips clips (per-clip seeds derived from seed) and writes them
/// under dir: wav/<id>.wav + manifest.jsonl + corpus_meta.json.
CorpusManifest generate_corpus(std::uint64_t seed, const GeneratorConfig& cfg, int n_clips,
                               const std::filesystem::path& dir);

void write_corpus(const CorpusManifest& manifest, const std::vector<AudioClip>& clips,
                  const std::filesystem::path& dir);

/// Loads manifest.jsonl (+ corpus_meta.json when present) and verifies every
/// referenced audio file exists with the declared duration.
CorpusManifest load_corpus(const std::filesystem::path& dir);

AudioClip load_clip_audio(const std::filesystem::path& dir, const ClipRecord& record);

}  // namespace tfdl
