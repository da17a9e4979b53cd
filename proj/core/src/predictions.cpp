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

#include "tfdl/predictions.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace tfdl {

using nlohmann::json;

namespace {

json proposals_to_json(const std::vector<ProposalInterval>& proposals) {
  json arr = json::array();
  for (const auto& p : proposals)
    arr.push_back({{"start_s", p.start_s}, {"dur_s", p.dur_s}, {"score", p.score}});
  return arr;
}

std::vector<ProposalInterval> proposals_from_json(const json& arr) {
  std::vector<ProposalInterval> out;
  for (const auto& p : arr)
    out.push_back({p.at("start_s").get<double>(), p.at("dur_s").get<double>(),
                   p.value("score", 0.0)});
  return out;
}

}  // namespace

void write_predictions(const std::filesystem::path& path,
                       std::span<const ClipPrediction> predictions) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write predictions: " + path.string());
  for (const auto& p : predictions) {
    json j{{"id", p.id},
           {"frame_scores", p.frame_scores},
           {"boundary_scores", p.boundary_scores},
           {"proposals", proposals_to_json(p.proposals)},
           {"coarse_proposals", proposals_to_json(p.coarse_proposals)}};
    out << j.dump() << "\n";
  }
}

std::vector<ClipPrediction> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open predictions: " + path.string());
  std::vector<ClipPrediction> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      ClipPrediction p;
      p.id = j.at("id").get<std::string>();
      if (j.contains("frame_scores")) p.frame_scores = j.at("frame_scores").get<std::vector<double>>();
      if (j.contains("boundary_scores"))
        p.boundary_scores = j.at("boundary_scores").get<std::vector<double>>();
      if (j.contains("proposals")) p.proposals = proposals_from_json(j.at("proposals"));
      if (j.contains("coarse_proposals"))
        p.coarse_proposals = proposals_from_json(j.at("coarse_proposals"));
      out.push_back(std::move(p));
    } catch (const json::exception& e) {
      throw Error("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace tfdl
