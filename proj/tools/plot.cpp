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

#include "plot.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace tfdl::plot {
namespace {

struct Rgb {
  unsigned char r, g, b;
};

constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kGrid{210, 210, 210};
constexpr Rgb kGtFill{190, 235, 190};
constexpr Rgb kGtEdge{60, 150, 60};
constexpr Rgb kScore{40, 80, 200};
constexpr Rgb kBoundary{150, 60, 180};
constexpr Rgb kThreshold{150, 150, 150};
constexpr Rgb kCoarse{240, 150, 40};
constexpr Rgb kFine{210, 50, 50};

class Canvas {
 public:
  Canvas(int width, int height) : width_(width), height_(height) {
    pixels_.assign(static_cast<std::size_t>(width) * height, kWhite);
  }

  void set(int x, int y, Rgb c) {
    if (x < 0 || x >= width_ || y < 0 || y >= height_) return;
    pixels_[static_cast<std::size_t>(y) * width_ + x] = c;
  }

  void fill_rect(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) set(x, y, c);
  }

  void hline(int y, Rgb c) {
    for (int x = 0; x < width_; ++x) set(x, y, c);
  }

  void vertical_segment(int x, int y0, int y1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) set(x, y, c);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<Rgb>& pixels() const { return pixels_; }

 private:
  int width_, height_;
  std::vector<Rgb> pixels_;
};

void put_be32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>((v >> 24) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>(v & 0xff));
}

void append_chunk(std::string& out, const char type[4], const std::string& body) {
  put_be32(out, static_cast<std::uint32_t>(body.size()));
  const std::size_t crc_start = out.size();
  out.append(type, 4);
  out.append(body);
  const auto crc =
      crc32(0, reinterpret_cast<const Bytef*>(out.data() + crc_start), // NOLINT
            static_cast<uInt>(out.size() - crc_start));
  put_be32(out, static_cast<std::uint32_t>(crc));
}

void write_png(const std::filesystem::path& path, const Canvas& canvas) {
  // Filter byte 0 per scanline, then one zlib stream.
  std::string raw;
  raw.reserve(static_cast<std::size_t>(canvas.height()) * (canvas.width() * 3 + 1));
  for (int y = 0; y < canvas.height(); ++y) {
    raw.push_back('\0');
    for (int x = 0; x < canvas.width(); ++x) {
      const Rgb& p = canvas.pixels()[static_cast<std::size_t>(y) * canvas.width() + x];
      raw.push_back(static_cast<char>(p.r));
      raw.push_back(static_cast<char>(p.g));
      raw.push_back(static_cast<char>(p.b));
    }
  }
  uLongf compressed_size = compressBound(static_cast<uLong>(raw.size()));
  std::string compressed(compressed_size, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &compressed_size,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                6) != Z_OK)
    throw Error("png: deflate failed");
  compressed.resize(compressed_size);

  std::string ihdr;
  put_be32(ihdr, static_cast<std::uint32_t>(canvas.width()));
  put_be32(ihdr, static_cast<std::uint32_t>(canvas.height()));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // RGB
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter
  ihdr.push_back(0);   // no interlace

  std::string out("\x89PNG\r\n\x1a\n", 8);
  append_chunk(out, "IHDR", ihdr);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", "");

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write image: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

}  // namespace

void render_clip_png(const std::filesystem::path& path, const ClipPrediction& prediction,
                     const std::vector<ForgerySegment>& gts, double duration_s, double theta_f) {
  if (duration_s <= 0.0) throw Error("render_clip_png: non-positive duration");
  const int frames = static_cast<int>(prediction.frame_scores.size());
  const int width = std::clamp(frames * 2, 400, 2000);
  // Bands: ground truth [6, 26), scores [32, 132), coarse [140, 164),
  // refined [172, 196).
  Canvas canvas(width, 204);
  const auto x_of = [&](double t) {
    return static_cast<int>(std::lround(t / duration_s * (width - 1)));
  };

  for (const auto& g : gts) {
    canvas.fill_rect(x_of(g.start_s), 6, x_of(g.end_s()) + 1, 26, kGtFill);
    canvas.vertical_segment(x_of(g.start_s), 6, 25, kGtEdge);
    canvas.vertical_segment(x_of(g.end_s()), 6, 25, kGtEdge);
  }

  canvas.hline(32, kGrid);
  canvas.hline(131, kGrid);
  const auto y_of_score = [&](double s) {
    return 131 - static_cast<int>(std::lround(std::clamp(s, 0.0, 1.0) * 99.0));
  };
  canvas.hline(y_of_score(theta_f), kThreshold);

  const auto draw_curve = [&](const std::vector<double>& scores, Rgb color) {
    if (scores.empty()) return;
    int prev_x = 0, prev_y = y_of_score(scores[0]);
    for (int t = 0; t < static_cast<int>(scores.size()); ++t) {
      const int x = x_of((t + 0.5) * duration_s / scores.size());
      const int y = y_of_score(scores[static_cast<std::size_t>(t)]);
      // Connect with a vertical step to keep it simple and readable.
      canvas.vertical_segment(x, prev_y, y, color);
      for (int fill = prev_x; fill <= x; ++fill) canvas.set(fill, y, color);
      prev_x = x;
      prev_y = y;
    }
  };
  draw_curve(prediction.boundary_scores, kBoundary);
  draw_curve(prediction.frame_scores, kScore);

  const auto draw_bars = [&](const std::vector<ProposalInterval>& proposals, int y0, int y1,
                             Rgb color) {
    for (const auto& p : proposals) {
      const int x0 = x_of(p.start_s);
      const int x1 = std::max(x_of(p.end_s()), x0 + 1);
      // Shade with the score so weak proposals look lighter.
      const double w = std::clamp(p.score, 0.15, 1.0);
      const Rgb shaded{static_cast<unsigned char>(255 - (255 - color.r) * w),
                       static_cast<unsigned char>(255 - (255 - color.g) * w),
                       static_cast<unsigned char>(255 - (255 - color.b) * w)};
      canvas.fill_rect(x0, y0, x1, y1, shaded);
    }
  };
  draw_bars(prediction.coarse_proposals, 140, 164, kCoarse);
  draw_bars(prediction.proposals, 172, 196, kFine);

  write_png(path, canvas);
}

}  // namespace tfdl::plot
