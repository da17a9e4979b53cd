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
//
// Command-line entry points: gen, train-fdn, train-prn, infer, eval-pfd,
// eval-tfl, grad-check, plot. Exit codes: 0 success, 2 usage/config error,
// 1 runtime failure.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "plot.hpp"
#include "tfdl/checkpoint.hpp"
#include "tfdl/config.hpp"
#include "tfdl/corpus.hpp"
#include "tfdl/frontend.hpp"
#include "tfdl/metrics.hpp"
#include "tfdl/pipeline.hpp"
#include "tfdl/predictions.hpp"
#include "tfdl/version.hpp"
#include "tfdl/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tfdl;

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

FullConfig resolve_config(const CommonOpts& opts) {
  FullConfig cfg = opts.config_path.empty() ? FullConfig{} : load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  cfg.validate();
  return cfg;
}

void write_run_manifest(const fs::path& beside, const std::string& command,
                        const CommonOpts& opts, const FullConfig& cfg,
                        const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs) {
  json j{{"command", command},
         {"config_path", opts.config_path},
         {"config", json::parse(config_to_json(cfg))},
         {"inputs", inputs},
         {"outputs", outputs},
         {"seed", cfg.seed},
         {"tool_version", kVersionString}};
  fs::path path = beside;
  if (fs::is_directory(beside))
    path = beside / "run_manifest.json";
  else
    path = beside.string() + ".run.json";
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2) << "\n";
}

/// Runtime knobs (thresholds, Soft-NMS, operating point) may be overridden by
/// a user config; the model architecture always comes from the checkpoint.
FullConfig merge_runtime_overrides(FullConfig from_ckpt, const CommonOpts& opts) {
  if (!opts.config_path.empty()) {
    const FullConfig user = load_config(opts.config_path);
    from_ckpt.prn.theta_f = user.prn.theta_f;
    from_ckpt.prn.theta_p = user.prn.theta_p;
    from_ckpt.infer = user.infer;
    from_ckpt.eval = user.eval;
  }
  if (opts.seed) from_ckpt.seed = *opts.seed;
  return from_ckpt;
}

int run_gen(const CommonOpts& opts, const std::string& out_dir, std::optional<int> n_override) {
  FullConfig cfg = resolve_config(opts);
  if (n_override) cfg.n_clips = *n_override;
  const auto manifest = generate_corpus(cfg.seed, cfg.corpus, cfg.n_clips, out_dir);
  double total_s = 0.0;
  for (const auto& r : manifest.clips) total_s += r.duration_s;
  std::printf("wrote %zu clips (%.1f s of audio) to %s\n", manifest.clips.size(), total_s,
              out_dir.c_str());
  write_run_manifest(out_dir, "gen", opts, cfg, {}, {out_dir});
  return 0;
}

int run_train(const std::string& stage, const CommonOpts& opts, const std::string& corpus_dir,
              const std::string& fdn_ckpt_path, const std::string& out_path) {
  const FullConfig cfg = resolve_config(opts);
  const auto manifest = load_corpus(corpus_dir);
  const auto clips = prepare_training_clips(manifest, corpus_dir, cfg.frontend);

  const fs::path log_path = out_path + ".log.jsonl";
  std::ofstream log(log_path, std::ios::trunc);
  const auto on_epoch = [&](const EpochLog& e) {
    const std::string line = e.to_json(stage);
    log << line << "\n";
    log.flush();
    std::printf("%s\n", line.c_str());
  };

  TrainResult result;
  if (stage == "fdn") {
    result = train_fdn(clips, cfg, on_epoch);
  } else {
    const Checkpoint fdn_ckpt = load_checkpoint(fdn_ckpt_path);
    result = train_prn(clips, fdn_ckpt, cfg, on_epoch);
  }
  save_checkpoint(result.checkpoint, out_path);
  std::printf("saved %s checkpoint to %s\n", stage.c_str(), out_path.c_str());

  std::vector<std::string> inputs{corpus_dir};
  if (!fdn_ckpt_path.empty()) inputs.push_back(fdn_ckpt_path);
  write_run_manifest(out_path, "train-" + stage, opts, cfg, inputs,
                     {out_path, log_path.string()});
  return 0;
}

int run_infer(const CommonOpts& opts, const std::string& fdn_ckpt_path,
              const std::string& prn_ckpt_path, const std::string& input,
              const std::string& out_path) {
  const Checkpoint fdn_ckpt = load_checkpoint(fdn_ckpt_path);
  const FullConfig cfg = merge_runtime_overrides(parse_config_json(fdn_ckpt.config_json), opts);
  FdnModel fdn = fdn_from_checkpoint(fdn_ckpt);

  std::optional<PrnModel> prn;
  if (!prn_ckpt_path.empty()) prn.emplace(prn_from_checkpoint(load_checkpoint(prn_ckpt_path)));

  std::vector<ClipPrediction> predictions;
  const auto infer_features = [&](const std::string& id, const Mat& features,
                                  double duration_s) {
    const InferenceResult r =
        infer_clip(features, duration_s, fdn, prn ? &*prn : nullptr, cfg);
    ClipPrediction p;
    p.id = id;
    p.frame_scores = r.frame_scores;
    p.boundary_scores = r.boundary_scores;
    p.proposals = r.proposals;
    p.coarse_proposals = r.coarse_proposals;
    predictions.push_back(std::move(p));
  };

  const fs::path in_path(input);
  if (fs::is_directory(in_path)) {
    const auto manifest = load_corpus(in_path);
    for (const auto& record : manifest.clips) {
      const AudioClip clip = load_clip_audio(in_path, record);
      infer_features(record.id, extract_features(clip, cfg.frontend).data, clip.duration_s());
    }
  } else if (in_path.extension() == ".wav") {
    const AudioClip clip = read_wav16(in_path);
    infer_features(clip.id, extract_features(clip, cfg.frontend).data, clip.duration_s());
  } else if (in_path.extension() == ".tfrf") {
    const FeatureMatrix features = load_external_features(in_path);
    if (features.width() != fdn.input_width())
      throw ConfigError("external feature width " + std::to_string(features.width()) +
                        " does not match the checkpoint input width " +
                        std::to_string(fdn.input_width()));
    infer_features(in_path.stem().string(), features.data,
                   features.frames() * kFramePeriodS);
  } else {
    throw ConfigError("unreadable input (expected a corpus directory, .wav, or .tfrf): " +
                      input);
  }

  write_predictions(out_path, predictions);
  std::printf("wrote %zu prediction lines to %s\n", predictions.size(), out_path.c_str());
  write_run_manifest(out_path, "infer", opts, cfg, {fdn_ckpt_path, prn_ckpt_path, input},
                     {out_path});
  return 0;
}

std::map<std::string, const ClipRecord*> index_records(const CorpusManifest& manifest) {
  std::map<std::string, const ClipRecord*> by_id;
  for (const auto& r : manifest.clips) by_id[r.id] = &r;
  return by_id;
}

void check_id_join(const std::vector<ClipPrediction>& predictions,
                   const std::map<std::string, const ClipRecord*>& by_id) {
  std::string missing;
  for (const auto& p : predictions)
    if (!by_id.count(p.id)) missing += (missing.empty() ? "" : ", ") + p.id;
  if (!missing.empty())
    throw ConfigError("prediction ids missing from the corpus: " + missing);
}

int run_eval_pfd(const CommonOpts& opts, const std::string& pred_path,
                 const std::string& corpus_dir, const std::string& out_path) {
  FullConfig cfg = opts.config_path.empty() ? FullConfig{} : load_config(opts.config_path);
  const auto predictions = load_predictions(pred_path);
  const auto manifest = load_corpus(corpus_dir);
  const auto by_id = index_records(manifest);
  check_id_join(predictions, by_id);

  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  for (const auto& p : predictions) {
    const ClipRecord& record = *by_id.at(p.id);
    const auto track = rasterize_labels(record.segments, record.duration_s);
    if (static_cast<std::size_t>(track.frames()) != p.frame_scores.size())
      throw Error("clip " + p.id + ": prediction has " + std::to_string(p.frame_scores.size()) +
                  " frames but the corpus implies " + std::to_string(track.frames()));
    scores.insert(scores.end(), p.frame_scores.begin(), p.frame_scores.end());
    labels.insert(labels.end(), track.y_fake.begin(), track.y_fake.end());
  }

  const PfdReport report = evaluate_pfd(scores, labels, cfg.eval.operating_threshold);
  std::ofstream out(out_path, std::ios::trunc);
  out << report.to_json() << "\n";
  std::printf("EER %.4f (threshold %.4f)  AUC %.4f  Pre %.4f  Rec %.4f  F1 %.4f\n", report.eer,
              report.eer_threshold, report.auc, report.precision, report.recall, report.f1);
  write_run_manifest(out_path, "eval-pfd", opts, cfg, {pred_path, corpus_dir}, {out_path});
  return 0;
}

int run_eval_tfl(const CommonOpts& opts, const std::string& pred_path,
                 const std::string& corpus_dir, const std::string& out_path) {
  FullConfig cfg = opts.config_path.empty() ? FullConfig{} : load_config(opts.config_path);
  const auto predictions = load_predictions(pred_path);
  const auto manifest = load_corpus(corpus_dir);
  const auto by_id = index_records(manifest);
  check_id_join(predictions, by_id);

  std::vector<ClipEval> clips;
  for (const auto& p : predictions) {
    ClipEval c;
    c.id = p.id;
    c.proposals = p.proposals;
    c.gts = by_id.at(p.id)->segments;
    clips.push_back(std::move(c));
  }

  const TflReport report = evaluate_tfl(clips);
  std::ofstream out(out_path, std::ios::trunc);
  out << report.to_json() << "\n";
  for (const auto& [t, v] : report.ap_at) std::printf("AP@%.2f  %.4f\n", t, v);
  std::printf("mAP     %.4f\n", report.map_score);
  for (const auto& [n, v] : report.ar_at_n) std::printf("AR@%-2d   %.4f\n", n, v);
  write_run_manifest(out_path, "eval-tfl", opts, cfg, {pred_path, corpus_dir}, {out_path});
  return 0;
}

int run_grad_check(std::uint64_t seed) {
  bool ok = true;
  for (const auto& [name, result] : run_all_grad_checks(seed)) {
    const bool pass = result.max_rel_error < 1e-4;
    ok = ok && pass;
    std::printf("%-6s max rel error %.3e over %zu params (worst: %s)  [%s]\n", name.c_str(),
                result.max_rel_error, result.checked, result.worst_param.c_str(),
                pass ? "ok" : "FAIL");
  }
  if (!ok) throw Error("gradient check failed");
  return 0;
}

int run_plot(const CommonOpts& opts, const std::string& pred_path,
             const std::string& corpus_dir, const std::string& out_dir) {
  FullConfig cfg = opts.config_path.empty() ? FullConfig{} : load_config(opts.config_path);
  const auto predictions = load_predictions(pred_path);
  const auto manifest = load_corpus(corpus_dir);
  const auto by_id = index_records(manifest);
  fs::create_directories(out_dir);

  std::size_t rendered = 0;
  for (const auto& p : predictions) {
    const auto it = by_id.find(p.id);
    if (it == by_id.end() || p.frame_scores.empty()) {
      std::fprintf(stderr, "warning: skipping unplottable clip %s\n", p.id.c_str());
      continue;
    }
    plot::render_clip_png(fs::path(out_dir) / (p.id + ".png"), p, it->second->segments,
                          it->second->duration_s, cfg.prn.theta_f);
    ++rendered;
  }
  std::printf("rendered %zu images to %s\n", rendered, out_dir.c_str());
  write_run_manifest(out_dir, "plot", opts, cfg, {pred_path, corpus_dir}, {out_dir});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"audio temporal forgery detection and localization toolkit"};
  app.set_version_flag("--version", kVersionString);
  app.require_subcommand(1);

  CommonOpts opts;
  int exit_code = 0;

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic partial-forgery corpus");
  std::string gen_out;
  std::optional<int> gen_n;
  gen->add_option("--config", opts.config_path, "config file (JSON)");
  gen->add_option("--seed", opts.seed, "seed override");
  gen->add_option("--out", gen_out, "output corpus directory")->required();
  gen->add_option("--n", gen_n, "clip count override");
  gen->callback([&]() { exit_code = run_gen(opts, gen_out, gen_n); });

  // train-fdn
  auto* tfd = app.add_subcommand("train-fdn", "train the frame-level detection network");
  std::string tfd_corpus, tfd_out;
  tfd->add_option("--config", opts.config_path, "config file (JSON)");
  tfd->add_option("--seed", opts.seed, "seed override");
  tfd->add_option("--corpus", tfd_corpus, "corpus directory")->required();
  tfd->add_option("--out", tfd_out, "output checkpoint path")->required();
  tfd->callback([&]() { exit_code = run_train("fdn", opts, tfd_corpus, "", tfd_out); });

  // train-prn
  auto* tpr = app.add_subcommand("train-prn", "train the proposal refinement network");
  std::string tpr_corpus, tpr_fdn, tpr_out;
  tpr->add_option("--config", opts.config_path, "config file (JSON)");
  tpr->add_option("--seed", opts.seed, "seed override");
  tpr->add_option("--corpus", tpr_corpus, "corpus directory")->required();
  tpr->add_option("--fdn-ckpt", tpr_fdn, "frozen FDN checkpoint")->required();
  tpr->add_option("--out", tpr_out, "output checkpoint path")->required();
  tpr->callback([&]() { exit_code = run_train("prn", opts, tpr_corpus, tpr_fdn, tpr_out); });

  // infer
  auto* inf = app.add_subcommand("infer", "run detection + localization");
  std::string inf_fdn, inf_prn, inf_input, inf_out;
  inf->add_option("--config", opts.config_path, "runtime overrides (thresholds, Soft-NMS)");
  inf->add_option("--seed", opts.seed, "seed override");
  inf->add_option("--fdn-ckpt", inf_fdn, "FDN checkpoint")->required();
  inf->add_option("--prn-ckpt", inf_prn, "PRN checkpoint (omit for coarse proposals only)");
  inf->add_option("--input", inf_input, "corpus directory, .wav file, or .tfrf features")
      ->required();
  inf->add_option("--out", inf_out, "predictions JSONL path")->required();
  inf->callback([&]() { exit_code = run_infer(opts, inf_fdn, inf_prn, inf_input, inf_out); });

  // eval-pfd
  auto* epfd = app.add_subcommand("eval-pfd", "frame-level detection metrics");
  std::string e_pred, e_corpus, e_out;
  epfd->add_option("--config", opts.config_path, "config file (JSON)");
  epfd->add_option("--pred", e_pred, "predictions JSONL")->required();
  epfd->add_option("--corpus", e_corpus, "corpus directory with ground truth")->required();
  epfd->add_option("--out", e_out, "report JSON path")->required();
  epfd->callback([&]() { exit_code = run_eval_pfd(opts, e_pred, e_corpus, e_out); });

  // eval-tfl
  auto* etfl = app.add_subcommand("eval-tfl", "temporal localization metrics");
  std::string t_pred, t_corpus, t_out;
  etfl->add_option("--config", opts.config_path, "config file (JSON)");
  etfl->add_option("--pred", t_pred, "predictions JSONL")->required();
  etfl->add_option("--corpus", t_corpus, "corpus directory with ground truth")->required();
  etfl->add_option("--out", t_out, "report JSON path")->required();
  etfl->callback([&]() { exit_code = run_eval_tfl(opts, t_pred, t_corpus, t_out); });

  // grad-check
  auto* gc = app.add_subcommand("grad-check", "finite-difference checks for every loss");
  std::uint64_t gc_seed = 2026;
  gc->add_option("--seed", gc_seed, "instance seed");
  gc->callback([&]() { exit_code = run_grad_check(gc_seed); });

  // plot
  auto* plt = app.add_subcommand("plot", "render per-clip timeline images");
  std::string p_pred, p_corpus, p_out;
  plt->add_option("--config", opts.config_path, "config file (JSON)");
  plt->add_option("--pred", p_pred, "predictions JSONL")->required();
  plt->add_option("--corpus", p_corpus, "corpus directory")->required();
  plt->add_option("--out", p_out, "output image directory")->required();
  plt->callback([&]() { exit_code = run_plot(opts, p_pred, p_corpus, p_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return exit_code;
}
