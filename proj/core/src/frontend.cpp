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

#include "tfdl/frontend.hpp"

#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <vector>

namespace tfdl {
namespace {

constexpr double kLogFloor = 1e-6;
constexpr double kPi = 3.14159265358979323846;

/// In-place radix-2 FFT; size must be a power of two.
void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Triangular mel filterbank over the magnitude spectrum, n_mels x bins.
Mat mel_filterbank(int n_mels, int fft_size, int sample_rate) {
  const int bins = fft_size / 2 + 1;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    centers[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));

  Mat fb = Mat::Zero(n_mels, bins);
  for (int m = 0; m < n_mels; ++m) {
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      const double rise = (f - centers[m]) / std::max(centers[m + 1] - centers[m], 1e-12);
      const double fall = (centers[m + 2] - f) / std::max(centers[m + 2] - centers[m + 1], 1e-12);
      fb(m, k) = std::max(0.0, std::min(rise, fall));
    }
  }
  return fb;
}

}  // namespace

void FrontendConfig::validate() const {
  if (n_mels < 1) throw Error("frontend config: n_mels must be >= 1");
  if (win_ms <= 0.0 || hop_ms <= 0.0) throw Error("frontend config: bad window/hop");
  if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
    throw Error("frontend config: fft_size must be a power of two");
}

FeatureMatrix extract_features(const AudioClip& clip, const FrontendConfig& cfg) {
  cfg.validate();
  if (clip.samples.empty()) throw Error("extract_features: empty audio");

  const int hop = static_cast<int>(std::llround(cfg.hop_ms * 1e-3 * clip.sample_rate));
  const int win = static_cast<int>(std::llround(cfg.win_ms * 1e-3 * clip.sample_rate));
  if (win > cfg.fft_size) throw Error("frontend config: window longer than fft_size");
  const int frames = static_cast<int>(clip.samples.size()) / hop;
  if (frames < 1) throw Error("extract_features: audio shorter than one frame");

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i)
    window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / win));

  const Mat fb = mel_filterbank(cfg.n_mels, cfg.fft_size, clip.sample_rate);
  const int bins = cfg.fft_size / 2 + 1;

  FeatureMatrix out;
  out.stage = FeatureStage::kFront;
  out.frame_period_s = cfg.hop_ms * 1e-3;
  out.data.resize(frames, cfg.n_mels);

  std::vector<std::complex<double>> buf(cfg.fft_size);
  Vec mag(bins);
  for (int t = 0; t < frames; ++t) {
    const std::size_t start = static_cast<std::size_t>(t) * hop;
    for (int i = 0; i < cfg.fft_size; ++i) {
      const std::size_t idx = start + static_cast<std::size_t>(i);
      const double x = (i < win && idx < clip.samples.size()) ? clip.samples[idx] * window[i] : 0.0;
      buf[i] = {x, 0.0};
    }
    fft_radix2(buf);
    for (int k = 0; k < bins; ++k) mag(k) = std::abs(buf[k]);
    out.data.row(t) = ((fb * mag).array() + kLogFloor).log().transpose();
  }
  return out;
}

FeatureMatrix project_to_model_dim(const FeatureMatrix& features, const Mat& weight,
                                   const Vec& bias) {
  if (features.data.cols() != weight.rows())
    throw Error("project_to_model_dim: feature width " + std::to_string(features.data.cols()) +
                " does not match weight input dimension " + std::to_string(weight.rows()));
  if (bias.size() != weight.cols())
    throw Error("project_to_model_dim: bias length does not match weight output dimension");
  FeatureMatrix out;
  out.stage = FeatureStage::kSsl;
  out.frame_period_s = features.frame_period_s;
  out.data = (features.data * weight).rowwise() + bias.transpose();
  return out;
}

namespace {

constexpr char kMagic[4] = {'T', 'F', 'R', 'F'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void write_external_features(const std::filesystem::path& path, const Mat& features) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  const std::uint32_t header[3] = {kVersion, static_cast<std::uint32_t>(features.rows()),
                                   static_cast<std::uint32_t>(features.cols())};
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  std::vector<float> row(features.cols());
  for (Eigen::Index r = 0; r < features.rows(); ++r) {
    for (Eigen::Index c = 0; c < features.cols(); ++c)
      row[static_cast<std::size_t>(c)] = static_cast<float>(features(r, c));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw Error("write failed: " + path.string());
}

FeatureMatrix load_external_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open feature file: " + path.string());
  char magic[4];
  std::uint32_t header[3];
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw Error("not a TFRF feature file: " + path.string());
  if (header[0] != kVersion)
    throw Error("unsupported TFRF version " + std::to_string(header[0]) + ": " + path.string());
  const std::uint32_t rows = header[1];
  const std::uint32_t cols = header[2];

  FeatureMatrix out;
  out.stage = FeatureStage::kFront;
  out.data.resize(rows, cols);
  std::vector<float> row(cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in)
      throw Error("payload size mismatch (header declares " + std::to_string(rows) + "x" +
                  std::to_string(cols) + "): " + path.string());
    for (std::uint32_t c = 0; c < cols; ++c) {
      if (!std::isfinite(row[c]))
        throw Error("non-finite value at row " + std::to_string(r) + ": " + path.string());
      out.data(r, c) = static_cast<double>(row[c]);
    }
  }
  return out;
}

}  // namespace tfdl
