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

#include "tfdl/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace tfdl {

using nlohmann::json;

namespace {

/// Reads known keys from a section and rejects anything unrecognized.
class SectionReader {
 public:
  SectionReader(const json& j, std::string section) : j_(j), section_(std::move(section)) {}

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key '" + section_ + "." + key + "' has the wrong type");
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key))
        throw ConfigError("unknown config key '" + section_ + "." + key + "'");
    }
  }

 private:
  const json& j_;
  std::string section_;
  std::set<std::string> seen_;
};

void parse_corpus(const json& j, GeneratorConfig& c) {
  SectionReader r(j, "corpus");
  r.get("duration_min_s", c.duration_min_s);
  r.get("duration_max_s", c.duration_max_s);
  r.get("n_segments_min", c.n_segments_min);
  r.get("n_segments_max", c.n_segments_max);
  r.get("seg_dur_min_s", c.seg_dur_min_s);
  r.get("seg_dur_max_s", c.seg_dur_max_s);
  r.get("min_gap_s", c.min_gap_s);
  r.get("crossfade_ms", c.crossfade_ms);
  r.get("sample_rate", c.sample_rate);
  r.get("carrier_f0_min_hz", c.carrier_f0_min_hz);
  r.get("carrier_f0_max_hz", c.carrier_f0_max_hz);
  r.get("carrier_harmonics", c.carrier_harmonics);
  r.get("noise_gain_min", c.noise_gain_min);
  r.get("noise_gain_max", c.noise_gain_max);
  r.get("forgery_gain_min", c.forgery_gain_min);
  r.get("forgery_gain_max", c.forgery_gain_max);
  r.get("forgery_ring_freq_min_hz", c.forgery_ring_freq_min_hz);
  r.get("forgery_ring_freq_max_hz", c.forgery_ring_freq_max_hz);
  r.finish();
}

void parse_frontend(const json& j, FrontendConfig& c) {
  SectionReader r(j, "frontend");
  r.get("n_mels", c.n_mels);
  r.get("win_ms", c.win_ms);
  r.get("hop_ms", c.hop_ms);
  r.get("fft_size", c.fft_size);
  r.finish();
}

void parse_fdn(const json& j, FdnConfig& c) {
  SectionReader r(j, "fdn");
  r.get("model_width", c.model_width);
  r.get("stack_channels", c.stack_channels);
  r.get("stack_strides", c.stack_strides);
  r.get("d_prime", c.d_prime);
  r.get("amlp_hidden_ratio", c.amlp_hidden_ratio);
  r.get("amlp_attn_width", c.amlp_attn_width);
  r.get("use_positional_encoding", c.use_positional_encoding);
  r.get("enable_bafe", c.enable_bafe);
  r.get("crl_margin", c.crl_margin);
  r.get("crl_pairs_per_frame", c.crl_pairs_per_frame);
  r.get("lambda_c", c.lambda_c);
  r.get("lambda_b", c.lambda_b);
  r.finish();
}

void parse_prn(const json& j, PrnConfig& c) {
  SectionReader r(j, "prn");
  r.get("d_prime", c.d_prime);
  r.get("head_hidden", c.head_hidden);
  r.get("lambda_r", c.lambda_r);
  r.get("theta_f", c.theta_f);
  r.get("theta_p", c.theta_p);
  r.finish();
}

void parse_train(const json& j, const std::string& section, TrainStageConfig& c) {
  SectionReader r(j, section);
  r.get("epochs", c.epochs);
  r.get("lr", c.lr);
  r.get("weight_decay", c.weight_decay);
  r.get("batch_size", c.batch_size);
  r.finish();
}

void parse_infer(const json& j, InferConfig& c) {
  SectionReader r(j, "infer");
  r.get("soft_nms_sigma", c.soft_nms_sigma);
  r.get("soft_nms_min_score", c.soft_nms_min_score);
  r.finish();
}

void parse_eval(const json& j, EvalConfig& c) {
  SectionReader r(j, "eval");
  r.get("operating_threshold", c.operating_threshold);
  r.finish();
}

}  // namespace

void FullConfig::validate() const {
  if (n_clips < 0) throw ConfigError("config: negative n_clips");
  try {
    corpus.validate();
    frontend.validate();
    fdn.validate();
    prn.validate();
    train_fdn.validate();
    train_prn.validate();
    infer.validate();
    eval.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

FullConfig parse_config_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  FullConfig cfg;
  std::set<std::string> known{"seed",      "n_clips", "corpus", "frontend", "fdn",
                              "prn",       "train_fdn", "train_prn", "infer", "eval"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("n_clips")) cfg.n_clips = j.at("n_clips").get<int>();
  if (j.contains("corpus")) parse_corpus(j.at("corpus"), cfg.corpus);
  if (j.contains("frontend")) parse_frontend(j.at("frontend"), cfg.frontend);
  if (j.contains("fdn")) parse_fdn(j.at("fdn"), cfg.fdn);
  if (j.contains("prn")) parse_prn(j.at("prn"), cfg.prn);
  if (j.contains("train_fdn")) parse_train(j.at("train_fdn"), "train_fdn", cfg.train_fdn);
  if (j.contains("train_prn")) parse_train(j.at("train_prn"), "train_prn", cfg.train_prn);
  if (j.contains("infer")) parse_infer(j.at("infer"), cfg.infer);
  if (j.contains("eval")) parse_eval(j.at("eval"), cfg.eval);
  cfg.validate();
  return cfg;
}

FullConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config_json(text);
}

std::string config_to_json(const FullConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["n_clips"] = cfg.n_clips;
  j["corpus"] = {{"duration_min_s", cfg.corpus.duration_min_s},
                 {"duration_max_s", cfg.corpus.duration_max_s},
                 {"n_segments_min", cfg.corpus.n_segments_min},
                 {"n_segments_max", cfg.corpus.n_segments_max},
                 {"seg_dur_min_s", cfg.corpus.seg_dur_min_s},
                 {"seg_dur_max_s", cfg.corpus.seg_dur_max_s},
                 {"min_gap_s", cfg.corpus.min_gap_s},
                 {"crossfade_ms", cfg.corpus.crossfade_ms},
                 {"sample_rate", cfg.corpus.sample_rate},
                 {"carrier_f0_min_hz", cfg.corpus.carrier_f0_min_hz},
                 {"carrier_f0_max_hz", cfg.corpus.carrier_f0_max_hz},
                 {"carrier_harmonics", cfg.corpus.carrier_harmonics},
                 {"noise_gain_min", cfg.corpus.noise_gain_min},
                 {"noise_gain_max", cfg.corpus.noise_gain_max},
                 {"forgery_gain_min", cfg.corpus.forgery_gain_min},
                 {"forgery_gain_max", cfg.corpus.forgery_gain_max},
                 {"forgery_ring_freq_min_hz", cfg.corpus.forgery_ring_freq_min_hz},
                 {"forgery_ring_freq_max_hz", cfg.corpus.forgery_ring_freq_max_hz}};
  j["frontend"] = {{"n_mels", cfg.frontend.n_mels},
                   {"win_ms", cfg.frontend.win_ms},
                   {"hop_ms", cfg.frontend.hop_ms},
                   {"fft_size", cfg.frontend.fft_size}};
  j["fdn"] = {{"model_width", cfg.fdn.model_width},
              {"stack_channels", cfg.fdn.stack_channels},
              {"stack_strides", cfg.fdn.stack_strides},
              {"d_prime", cfg.fdn.d_prime},
              {"amlp_hidden_ratio", cfg.fdn.amlp_hidden_ratio},
              {"amlp_attn_width", cfg.fdn.amlp_attn_width},
              {"use_positional_encoding", cfg.fdn.use_positional_encoding},
              {"enable_bafe", cfg.fdn.enable_bafe},
              {"crl_margin", cfg.fdn.crl_margin},
              {"crl_pairs_per_frame", cfg.fdn.crl_pairs_per_frame},
              {"lambda_c", cfg.fdn.lambda_c},
              {"lambda_b", cfg.fdn.lambda_b}};
  j["prn"] = {{"d_prime", cfg.prn.d_prime},
              {"head_hidden", cfg.prn.head_hidden},
              {"lambda_r", cfg.prn.lambda_r},
              {"theta_f", cfg.prn.theta_f},
              {"theta_p", cfg.prn.theta_p}};
  j["train_fdn"] = {{"epochs", cfg.train_fdn.epochs},
                    {"lr", cfg.train_fdn.lr},
                    {"weight_decay", cfg.train_fdn.weight_decay},
                    {"batch_size", cfg.train_fdn.batch_size}};
  j["train_prn"] = {{"epochs", cfg.train_prn.epochs},
                    {"lr", cfg.train_prn.lr},
                    {"weight_decay", cfg.train_prn.weight_decay},
                    {"batch_size", cfg.train_prn.batch_size}};
  j["infer"] = {{"soft_nms_sigma", cfg.infer.soft_nms_sigma},
                {"soft_nms_min_score", cfg.infer.soft_nms_min_score}};
  j["eval"] = {{"operating_threshold", cfg.eval.operating_threshold}};
  return j.dump(2);
}

}  // namespace tfdl
