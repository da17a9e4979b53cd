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

#include "tfdl/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace tfdl {
namespace {

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

void write_wav16(const std::filesystem::path& path, const std::vector<double>& samples,
                 int sample_rate) {
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::string buf;
  buf.reserve(44 + data_bytes);
  buf.append("RIFF");
  put_u32(buf, 36 + data_bytes);
  buf.append("WAVE");
  buf.append("fmt ");
  put_u32(buf, 16);
  put_u16(buf, 1);  // PCM
  put_u16(buf, 1);  // mono
  put_u32(buf, static_cast<std::uint32_t>(sample_rate));
  put_u32(buf, static_cast<std::uint32_t>(sample_rate * 2));
  put_u16(buf, 2);   // block align
  put_u16(buf, 16);  // bits per sample
  buf.append("data");
  put_u32(buf, data_bytes);
  for (double x : samples) {
    const double clamped = std::clamp(x, -1.0, 1.0);
    const long q = std::lround(clamped * 32768.0);
    const std::int16_t s = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
    put_u16(buf, static_cast<std::uint16_t>(s));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("write failed: " + path.string());
}

AudioClip read_wav16(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open WAV: " + path.string());
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  if (raw.size() < 44 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw Error("not a RIFF/WAVE file: " + path.string());

  std::size_t pos = 12;
  int sample_rate = 0;
  bool have_fmt = false;
  AudioClip clip;
  clip.id = path.stem().string();
  while (pos + 8 <= raw.size()) {
    const std::uint32_t chunk_size = get_u32(p + pos + 4);
    const bool is_fmt = std::memcmp(p + pos, "fmt ", 4) == 0;
    const bool is_data = std::memcmp(p + pos, "data", 4) == 0;
    const std::size_t body = pos + 8;
    if (is_fmt) {
      if (body + 16 > raw.size()) throw Error("truncated fmt chunk: " + path.string());
      const std::uint16_t format = get_u16(p + body);
      const std::uint16_t channels = get_u16(p + body + 2);
      sample_rate = static_cast<int>(get_u32(p + body + 4));
      const std::uint16_t bits = get_u16(p + body + 14);
      if (format != 1 || channels != 1 || bits != 16)
        throw Error("unsupported WAV (need mono PCM16): " + path.string());
      have_fmt = true;
    } else if (is_data) {
      if (!have_fmt) throw Error("data chunk before fmt: " + path.string());
      if (body + chunk_size > raw.size()) throw Error("truncated data chunk: " + path.string());
      const std::size_t n = chunk_size / 2;
      clip.sample_rate = sample_rate;
      clip.samples.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const std::int16_t s = static_cast<std::int16_t>(get_u16(p + body + 2 * i));
        clip.samples[i] = static_cast<double>(s) / 32768.0;
      }
      return clip;
    }
    pos = body + chunk_size + (chunk_size & 1);
  }
  throw Error("no data chunk found: " + path.string());
}

}  // namespace tfdl
