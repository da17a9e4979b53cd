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

#include "tfdl/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tfdl/rng.hpp"
#include "tfdl/wav.hpp"

namespace tfdl {

using nlohmann::json;

namespace {

constexpr double kTau = 6.283185307179586;

json config_to_json(const GeneratorConfig& c) {
  return json{{"duration_min_s", c.duration_min_s},
              {"duration_max_s", c.duration_max_s},
              {"n_segments_min", c.n_segments_min},
              {"n_segments_max", c.n_segments_max},
              {"seg_dur_min_s", c.seg_dur_min_s},
              {"seg_dur_max_s", c.seg_dur_max_s},
              {"min_gap_s", c.min_gap_s},
              {"crossfade_ms", c.crossfade_ms},
              {"sample_rate", c.sample_rate},
              {"carrier_f0_min_hz", c.carrier_f0_min_hz},
              {"carrier_f0_max_hz", c.carrier_f0_max_hz},
              {"carrier_harmonics", c.carrier_harmonics},
              {"noise_gain_min", c.noise_gain_min},
              {"noise_gain_max", c.noise_gain_max},
              {"forgery_gain_min", c.forgery_gain_min},
              {"forgery_gain_max", c.forgery_gain_max},
              {"forgery_ring_freq_min_hz", c.forgery_ring_freq_min_hz},
              {"forgery_ring_freq_max_hz", c.forgery_ring_freq_max_hz}};
}

/// Pink-ish noise: white noise through the three-pole filter commonly used
/// for audio test signals. Amplitude is O(1).
class PinkNoise {
 public:
  explicit PinkNoise(Rng& rng) : rng_(rng) {}
  double next() {
    const double white = rng_.uniform(-1.0, 1.0);
    b0_ = 0.99765 * b0_ + white * 0.0990460;
    b1_ = 0.96300 * b1_ + white * 0.2965164;
    b2_ = 0.57000 * b2_ + white * 1.0526913;
    return (b0_ + b1_ + b2_ + white * 0.1848) * 0.2;
  }

 private:
  Rng& rng_;
  double b0_ = 0.0, b1_ = 0.0, b2_ = 0.0;
};

/// Draws segment layouts: lengths uniform in [seg_dur_min, seg_dur_max],
/// gaps of at least min_gap between segments and at the clip edges, leftover
/// slack distributed across the gaps at random. A drawn combination that does
/// not fit is re-drawn (never shrunk); a request that cannot fit after many
/// attempts is an error.
std::vector<ForgerySegment> place_segments(Rng& rng, const GeneratorConfig& cfg,
                                           double duration_s) {
  constexpr int kMaxAttempts = 100;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const int n = rng.uniform_int(cfg.n_segments_min, cfg.n_segments_max);
    if (n == 0) return {};

    std::vector<double> lengths(n);
    double total_len = 0.0;
    for (double& l : lengths) {
      l = rng.uniform(cfg.seg_dur_min_s, cfg.seg_dur_max_s);
      total_len += l;
    }
    const double slack = duration_s - total_len - (n + 1) * cfg.min_gap_s;
    if (slack < 0.0) continue;

    std::vector<double> weights(n + 1);
    double weight_sum = 0.0;
    for (double& w : weights) {
      w = rng.uniform(1e-3, 1.0);
      weight_sum += w;
    }
    std::vector<ForgerySegment> segments;
    double cursor = 0.0;
    for (int i = 0; i < n; ++i) {
      cursor += cfg.min_gap_s + slack * weights[i] / weight_sum;
      segments.push_back({cursor, lengths[i]});
      cursor += lengths[i];
    }
    return segments;
  }
  std::ostringstream msg;
  msg << "infeasible generator config: requested segments cannot fit in " << duration_s
      << " s without overlap";
  throw Error(msg.str());
}

struct CarrierSpec {
  double f0 = 0.0;
  std::vector<double> phases;
  double noise_gain = 0.0;
};

void render_carrier(const CarrierSpec& spec, int harmonics, int sample_rate,
                    std::vector<double>& out, Rng& noise_rng) {
  PinkNoise pink(noise_rng);
  const double dt = 1.0 / sample_rate;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double t = static_cast<double>(i) * dt;
    double x = 0.0;
    for (int k = 1; k <= harmonics; ++k)
      x += std::sin(kTau * spec.f0 * k * t + spec.phases[k - 1]) / k;
    out[i] = 0.35 * x + spec.noise_gain * pink.next();
  }
}

enum class ForgeryKind { kRingMod, kTiltedNoise };

void render_forgery(ForgeryKind kind, const CarrierSpec& carrier, const GeneratorConfig& cfg,
                    Rng& rng, std::size_t start, std::size_t count, double gain,
                    std::vector<double>& out) {
  const double dt = 1.0 / cfg.sample_rate;
  if (kind == ForgeryKind::kRingMod) {
    const double fm = rng.uniform(cfg.forgery_ring_freq_min_hz, cfg.forgery_ring_freq_max_hz);
    const double phase = rng.uniform(0.0, kTau);
    for (std::size_t i = 0; i < count; ++i) {
      const double t = static_cast<double>(start + i) * dt;
      double x = 0.0;
      for (int k = 1; k <= cfg.carrier_harmonics; ++k)
        x += std::sin(kTau * carrier.f0 * k * t + carrier.phases[k - 1]) / k;
      out[i] = gain * 0.35 * x * std::sin(kTau * fm * t + phase);
    }
  } else {
    // White noise through a one-pole lowpass: a spectral tilt the carrier
    // never shows.
    const double pole = rng.uniform(0.6, 0.9);
    double state = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      state = pole * state + (1.0 - pole) * rng.uniform(-1.0, 1.0);
      out[i] = gain * 2.2 * state;
    }
  }
}

json record_to_json(const ClipRecord& r) {
  json segs = json::array();
  for (const auto& s : r.segments) segs.push_back({{"start_s", s.start_s}, {"dur_s", s.dur_s}});
  return json{{"id", r.id}, {"audio", r.audio}, {"duration_s", r.duration_s}, {"segments", segs}};
}

ClipRecord record_from_json(const json& j) {
  ClipRecord r;
  r.id = j.at("id").get<std::string>();
  r.audio = j.at("audio").get<std::string>();
  r.duration_s = j.at("duration_s").get<double>();
  for (const auto& s : j.at("segments"))
    r.segments.push_back({s.at("start_s").get<double>(), s.at("dur_s").get<double>()});
  return r;
}

}  // namespace

void GeneratorConfig::validate() const {
  if (duration_min_s <= 0.0 || duration_max_s < duration_min_s)
    throw Error("generator config: bad duration range");
  if (n_segments_min < 0 || n_segments_max < n_segments_min)
    throw Error("generator config: bad segment count range");
  if (seg_dur_min_s <= 0.0 || seg_dur_max_s < seg_dur_min_s)
    throw Error("generator config: bad segment length range");
  if (min_gap_s < 2.0 * kFramePeriodS)
    throw Error("generator config: min_gap_s must be at least two frame periods");
  if (crossfade_ms < 0.0) throw Error("generator config: negative crossfade");
  if (sample_rate <= 0) throw Error("generator config: bad sample rate");
  if (carrier_harmonics < 1) throw Error("generator config: carrier_harmonics must be >= 1");
  // The smallest possible request must fit; larger draws are retried at
  // generation time and error out when nothing fits.
  const double minimal = n_segments_min * seg_dur_min_s + (n_segments_min + 1) * min_gap_s;
  if (minimal > duration_min_s)
    throw Error("generator config: even n_segments_min segments of seg_dur_min_s cannot fit "
                "(increase duration_min_s)");
}

std::pair<AudioClip, std::vector<ForgerySegment>> synth_clip(std::uint64_t seed,
                                                             const GeneratorConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(seed, 0x636c6970ULL));  // layout + timbre draws
  Rng noise_rng(derive_seed(seed, 0x6e6f6973ULL));

  const double duration_raw = rng.uniform(cfg.duration_min_s, cfg.duration_max_s);
  const std::size_t n_samples =
      static_cast<std::size_t>(std::llround(duration_raw * cfg.sample_rate));
  const double duration_s = static_cast<double>(n_samples) / cfg.sample_rate;

  auto segments = place_segments(rng, cfg, duration_s);

  CarrierSpec carrier;
  carrier.f0 = rng.uniform(cfg.carrier_f0_min_hz, cfg.carrier_f0_max_hz);
  carrier.phases.resize(cfg.carrier_harmonics);
  for (double& p : carrier.phases) p = rng.uniform(0.0, kTau);
  carrier.noise_gain = rng.uniform(cfg.noise_gain_min, cfg.noise_gain_max);

  std::vector<double> samples(n_samples);
  render_carrier(carrier, cfg.carrier_harmonics, cfg.sample_rate, samples, noise_rng);

  const std::size_t cf_samples =
      static_cast<std::size_t>(std::llround(cfg.crossfade_ms * 1e-3 * cfg.sample_rate));
  for (const auto& seg : segments) {
    const auto start = static_cast<std::size_t>(std::llround(seg.start_s * cfg.sample_rate));
    const auto count = static_cast<std::size_t>(std::llround(seg.dur_s * cfg.sample_rate));
    const ForgeryKind kind = rng.bernoulli() ? ForgeryKind::kRingMod : ForgeryKind::kTiltedNoise;
    const double gain = rng.uniform(cfg.forgery_gain_min, cfg.forgery_gain_max);
    std::vector<double> forged(count);
    render_forgery(kind, carrier, cfg, rng, start, count, gain, forged);

    const std::size_t cf = std::min(cf_samples, count / 2);
    for (std::size_t i = 0; i < count; ++i) {
      double w = 1.0;  // forgery weight; crossfades live inside the segment
      if (cf > 0 && i < cf)
        w = 0.5 * (1.0 - std::cos(kTau / 2.0 * (static_cast<double>(i) / cf)));
      else if (cf > 0 && i >= count - cf)
        w = 0.5 * (1.0 - std::cos(kTau / 2.0 * (static_cast<double>(count - 1 - i) / cf)));
      samples[start + i] = (1.0 - w) * samples[start + i] + w * forged[i];
    }
  }

  double peak = 0.0;
  for (double x : samples) peak = std::max(peak, std::abs(x));
  if (peak > 0.0) {
    const double norm = 0.90 / std::max(peak, 0.90);
    for (double& x : samples) x *= norm;
  }

  AudioClip clip;
  clip.sample_rate = cfg.sample_rate;
  clip.samples = std::move(samples);
  return {std::move(clip), std::move(segments)};
}

FrameLabelTrack rasterize_labels(const std::vector<ForgerySegment>& segments, double duration_s,
                                 double frame_period_s) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (s.start_s < 0.0 || s.dur_s <= 0.0 || s.end_s() > duration_s + 1e-9)
      throw Error("segment outside clip bounds");
    if (i > 0 && segments[i - 1].end_s() > s.start_s + 1e-12)
      throw Error("segments overlap or are unsorted");
  }

  const int frames = frames_for_duration(duration_s, frame_period_s);
  FrameLabelTrack track;
  track.frame_period_s = frame_period_s;
  track.y_fake.assign(frames, 0);
  track.y_boundary.assign(frames, 0);

  for (int t = 0; t < frames; ++t) {
    const double mid = (t + 0.5) * frame_period_s;
    for (const auto& s : segments) {
      if (mid >= s.start_s && mid < s.end_s()) {
        track.y_fake[t] = 1;
        break;
      }
    }
  }
  for (int t = 0; t < frames; ++t) {
    if (!track.y_fake[t]) continue;
    const bool run_start = t == 0 || !track.y_fake[t - 1];
    const bool run_end = t == frames - 1 || !track.y_fake[t + 1];
    if (run_start || run_end) track.y_boundary[t] = 1;
  }
  return track;
}

std::vector<ForgerySegment> deraster_segments(const FrameLabelTrack& track) {
  std::vector<ForgerySegment> segments;
  const int frames = track.frames();
  int t = 0;
  while (t < frames) {
    if (!track.y_fake[t]) {
      ++t;
      continue;
    }
    int end = t;
    while (end + 1 < frames && track.y_fake[end + 1]) ++end;
    segments.push_back({t * track.frame_period_s, (end - t + 1) * track.frame_period_s});
    t = end + 1;
  }
  return segments;
}

void write_corpus(const CorpusManifest& manifest, const std::vector<AudioClip>& clips,
                  const std::filesystem::path& dir) {
  if (clips.size() != manifest.clips.size())
    throw Error("write_corpus: clip/record count mismatch");
  std::filesystem::create_directories(dir / "wav");
  for (std::size_t i = 0; i < clips.size(); ++i)
    write_wav16(dir / manifest.clips[i].audio, clips[i].samples, clips[i].sample_rate);

  std::ofstream mf(dir / "manifest.jsonl", std::ios::trunc);
  if (!mf) throw Error("cannot write manifest: " + (dir / "manifest.jsonl").string());
  for (const auto& r : manifest.clips) mf << record_to_json(r).dump() << "\n";

  json meta{{"seed", manifest.seed},
            {"config", manifest.config_json.empty() ? json(nullptr)
                                                    : json::parse(manifest.config_json)}};
  std::ofstream meta_out(dir / "corpus_meta.json", std::ios::trunc);
  meta_out << meta.dump(2) << "\n";
}

CorpusManifest generate_corpus(std::uint64_t seed, const GeneratorConfig& cfg, int n_clips,
                               const std::filesystem::path& dir) {
  cfg.validate();
  if (n_clips < 0) throw Error("generate_corpus: negative clip count");
  CorpusManifest manifest;
  manifest.seed = seed;
  manifest.config_json = config_to_json(cfg).dump();

  std::vector<AudioClip> clips;
  clips.reserve(n_clips);
  for (int i = 0; i < n_clips; ++i) {
    auto [clip, segments] = synth_clip(derive_seed(seed, static_cast<std::uint64_t>(i)), cfg);
    char name[32];
    std::snprintf(name, sizeof(name), "clip_%04d", i);
    clip.id = name;
    ClipRecord record;
    record.id = clip.id;
    record.audio = "wav/" + clip.id + ".wav";
    record.duration_s = clip.duration_s();
    record.segments = std::move(segments);
    manifest.clips.push_back(std::move(record));
    clips.push_back(std::move(clip));
  }
  write_corpus(manifest, clips, dir);
  return manifest;
}

CorpusManifest load_corpus(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.jsonl";
  std::ifstream mf(manifest_path);
  if (!mf) throw Error("manifest not found: " + manifest_path.string());

  CorpusManifest manifest;
  std::string line;
  int line_no = 0;
  while (std::getline(mf, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
      manifest.clips.push_back(record_from_json(j));
    } catch (const json::exception& e) {
      throw Error("manifest line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  const auto meta_path = dir / "corpus_meta.json";
  if (std::filesystem::exists(meta_path)) {
    std::ifstream meta_in(meta_path);
    json meta = json::parse(meta_in, nullptr, true);
    manifest.seed = meta.value("seed", std::uint64_t{0});
    if (meta.contains("config") && !meta["config"].is_null())
      manifest.config_json = meta["config"].dump();
  }

  for (const auto& r : manifest.clips) {
    const auto audio_path = dir / r.audio;
    if (!std::filesystem::exists(audio_path))
      throw Error("clip " + r.id + ": missing audio file " + audio_path.string());
  }
  return manifest;
}

AudioClip load_clip_audio(const std::filesystem::path& dir, const ClipRecord& record) {
  AudioClip clip = read_wav16(dir / record.audio);
  clip.id = record.id;
  if (std::abs(clip.duration_s() - record.duration_s) > kFramePeriodS)
    throw Error("clip " + record.id + ": audio duration " + std::to_string(clip.duration_s()) +
                " does not match manifest " + std::to_string(record.duration_s));
  return clip;
}

}  // namespace tfdl
