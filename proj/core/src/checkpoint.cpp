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

#include "tfdl/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace tfdl {
namespace {

constexpr char kMagic[4] = {'T', 'F', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void write_string(std::ofstream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint64_t read_u64(std::ifstream& in, const std::string& path) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw Error("truncated checkpoint: " + path);
  return v;
}

std::string read_string(std::ifstream& in, const std::string& path) {
  const std::uint64_t len = read_u64(in, path);
  std::string s(len, '\0');
  in.read(s.data(), static_cast<std::streamsize>(len));
  if (!in) throw Error("truncated checkpoint: " + path);
  return s;
}

}  // namespace

const Mat& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, m] : tensors)
    if (n == name) return m;
  throw Error("checkpoint: missing tensor " + name);
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + tmp.string());
    out.write(kMagic, 4);
    const std::uint32_t version = kVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    write_string(out, ckpt.stage);
    write_string(out, ckpt.config_json);
    write_string(out, ckpt.history_json);
    write_u64(out, ckpt.tensors.size());
    for (const auto& [name, m] : ckpt.tensors) {
      write_string(out, name);
      write_u64(out, static_cast<std::uint64_t>(m.rows()));
      write_u64(out, static_cast<std::uint64_t>(m.cols()));
      out.write(reinterpret_cast<const char*>(m.data()),
                static_cast<std::streamsize>(sizeof(double) * m.size()));
    }
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path.string());
  char magic[4];
  std::uint32_t version = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw Error("not a checkpoint file: " + path.string());
  if (version != kVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version) + ": " +
                path.string());

  Checkpoint ckpt;
  ckpt.stage = read_string(in, path.string());
  ckpt.config_json = read_string(in, path.string());
  ckpt.history_json = read_string(in, path.string());
  const std::uint64_t count = read_u64(in, path.string());
  ckpt.tensors.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = read_string(in, path.string());
    const auto rows = static_cast<Eigen::Index>(read_u64(in, path.string()));
    const auto cols = static_cast<Eigen::Index>(read_u64(in, path.string()));
    Mat m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw Error("truncated checkpoint: " + path.string());
    ckpt.tensors.emplace_back(name, std::move(m));
  }
  return ckpt;
}

Checkpoint checkpoint_from_params(const std::string& stage, const std::string& config_json,
                                  const nn::ParamStore& params, const std::string& history_json) {
  Checkpoint ckpt;
  ckpt.stage = stage;
  ckpt.config_json = config_json;
  ckpt.history_json = history_json;
  for (const auto& [name, var] : params.items()) ckpt.tensors.emplace_back(name, var.value());
  return ckpt;
}

void load_params_from_checkpoint(const Checkpoint& ckpt, nn::ParamStore& params) {
  if (ckpt.tensors.size() != params.items().size())
    throw Error("checkpoint: tensor count " + std::to_string(ckpt.tensors.size()) +
                " does not match model parameter count " +
                std::to_string(params.items().size()));
  for (const auto& [name, m] : ckpt.tensors) params.set_value(name, m);
}

}  // namespace tfdl
