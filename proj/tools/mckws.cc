// tools/mckws.cc

// Copyright 2026  The mckws Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

// Command-line front end:
//   mckws synth-data --out DIR [--keywords N --fillers N ...]
//   mckws train --train MANIFEST [--valid MANIFEST] --mode M [--init CKPT] --out CKPT
//   mckws eval --ckpt CKPT --manifest M [--threshold T]
//   mckws roc --ckpt CKPT --pos M --neg M --thresholds start:stop:step --out CSV
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric divergence.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mckws/checkpoint.h"
#include "mckws/config.h"
#include "mckws/decode.h"
#include "mckws/errors.h"
#include "mckws/manifest.h"
#include "mckws/training.h"

namespace {

using namespace mckws;

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kNumeric = 4 };

// Options every subcommand accepts.
struct Common {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;

  void Attach(CLI::App *cmd) {
    cmd->add_option("--config", config_file, "JSON configuration file");
    cmd->add_option("--set", sets, "Override, e.g. train.epochs=5 (repeatable)");
    cmd->add_option("--seed", seed, "Run seed");
    cmd->add_option("--threads", threads, "Worker threads (default: logical cores)")
        ->check(CLI::PositiveNumber);
  }

  // Defaults <- file <- --set <- dedicated flags in `extra`.
  RunConfig Load(const std::vector<std::string> &extra) const {
    std::vector<std::string> all = sets;
    if (seed) {
      all.push_back("train.seed=" + std::to_string(*seed));
      all.push_back("corpus.seed=" + std::to_string(*seed));
    }
    all.insert(all.end(), extra.begin(), extra.end());
    RunConfig cfg = LoadRunConfig(config_file, all);
    if (threads) cfg.threads = *threads;
    cfg.corpus.threads = cfg.threads;
    return cfg;
  }
};

template <typename T>
void Flag(std::vector<std::string> &out, const char *key, const std::optional<T> &v) {
  if (!v) return;
  nlohmann::json j = *v;
  out.push_back(std::string(key) + "=" + j.dump());
}

int RunSynth(const Common &common, const std::string &out, bool force,
             const std::vector<std::string> &extra) {
  const RunConfig cfg = common.Load(extra);
  SynthesizeCorpus(cfg.corpus, out, force);
  std::printf("wrote corpus to %s (%zu keywords, %zu fillers)\n", out.c_str(),
              cfg.corpus.keywords, cfg.corpus.fillers);
  return kOk;
}

struct TrainArgs {
  std::string train_manifest, valid_manifest, out, metrics;
  std::optional<std::string> mode, init;
  std::optional<int> epochs;
};

int RunTrain(const Common &common, const TrainArgs &a) {
  std::vector<std::string> extra;
  Flag(extra, "train.mode", a.mode);
  Flag(extra, "train.init_checkpoint", a.init);
  Flag(extra, "train.epochs", a.epochs);
  const RunConfig cfg = common.Load(extra);
  cfg.train.Validate();

  const std::vector<ManifestEntry> entries = ReadManifest(a.train_manifest);
  std::vector<ManifestEntry> train = FilterBySplit(entries, "train");
  std::vector<ManifestEntry> valid = a.valid_manifest.empty()
                                         ? FilterBySplit(entries, "valid")
                                         : ReadManifest(a.valid_manifest);
  if (train.empty()) throw DataError(a.train_manifest + ": no split=train entries");

  const auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  };
  const int heads = MapHeadsFor(cfg.train.mode);
  const FrameConfig &fc = cfg.train.features;
  std::fprintf(stderr, "loading %zu train / %zu valid utterances\n", train.size(),
               valid.size());
  const std::vector<Example> train_x = LoadExamples(train, fc, heads, cfg.threads);
  const std::vector<Example> valid_x = LoadExamples(valid, fc, heads, cfg.threads);

  std::fprintf(stderr, "features ready after %.1f s\n", elapsed());
  const TrainResult result =
      Train(cfg.train, train_x, valid_x, ToJson(cfg).dump(),
            [&](const EpochMetrics &m) {
              std::fprintf(stderr, "epoch %d %-5s total %.6f kws %.6f  [%.1f s]\n",
                           m.epoch, m.split.c_str(), m.loss.total, m.loss.kws,
                           elapsed());
            });
  SaveCheckpoint(result.best, a.out);
  SaveCheckpoint(result.last, a.out + ".last");
  WriteMetricsCsv(result.log, a.metrics.empty() ? a.out + ".metrics.csv" : a.metrics);
  std::printf("saved %s (%zu steps)\n", a.out.c_str(), result.step_losses.size());
  return kOk;
}

SmoothingConfig DecodeConfig(const RunConfig &cfg, std::optional<double> threshold) {
  SmoothingConfig s = cfg.decode;
  if (threshold) s.threshold = *threshold;
  s.Validate();
  return s;
}

int RunEval(const Common &common, const std::string &ckpt_path,
            const std::string &manifest, std::optional<double> threshold) {
  const RunConfig cfg = common.Load({});
  const SmoothingConfig s = DecodeConfig(cfg, threshold);
  const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  const std::vector<ManifestEntry> entries = ReadManifest(manifest);
  const ScoredSet scored = ScoreManifests(
      ckpt.params, FilterByLabel(entries, Label::kKeyword),
      FilterByLabel(entries, Label::kFiller), cfg.train.features, cfg.threads);
  const EvalResult r = EvaluateScored(scored, s);
  auto rate = [](bool present, double v) {
    if (!present) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  std::printf("threshold %.6g fa_per_hour %s wakeup_rate %s "
              "(false_alarms %zu over %.6g h, woken %zu of %zu)\n",
              s.threshold, rate(r.negatives > 0, r.fa_per_hour).c_str(),
              rate(r.positives > 0, r.wakeup_rate).c_str(), r.false_alarms,
              r.negative_hours, r.woken, r.positives);
  return kOk;
}

int RunRoc(const Common &common, const std::string &ckpt_path,
           const std::string &pos, const std::string &neg,
           const std::string &range, const std::string &out) {
  const RunConfig cfg = common.Load({});
  cfg.decode.Validate();
  const std::vector<double> thresholds = ParseThresholdRange(range);
  const Checkpoint ckpt = LoadCheckpoint(ckpt_path);
  const auto positives = FilterByLabel(ReadManifest(pos), Label::kKeyword);
  const auto negatives = FilterByLabel(ReadManifest(neg), Label::kFiller);
  if (positives.empty()) throw DataError(pos + ": no keyword entries");
  if (negatives.empty()) throw DataError(neg + ": no filler entries");
  const ScoredSet scored =
      ScoreManifests(ckpt.params, positives, negatives, cfg.train.features, cfg.threads);
  const RocCurve curve = RocSweep(scored, thresholds, cfg.decode.n, cfg.decode.hangover);
  WriteRocCsv(curve, out);
  std::printf("wrote %s (%zu points); wakeup at 0.1 FA/h %.6g, at 0.5 FA/h %.6g\n",
              out.c_str(), curve.points.size(), curve.WakeupAtFa(0.1),
              curve.WakeupAtFa(0.5));
  return kOk;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Multi-channel keyword spotting toolkit"};
  app.require_subcommand(1);

  Common common;

  CLI::App *synth = app.add_subcommand("synth-data", "Synthesize a corpus");
  common.Attach(synth);
  std::string synth_out;
  bool force = false;
  std::optional<std::size_t> keywords, fillers, eval_keywords, eval_fillers;
  std::optional<double> noisy_frac, snr_train, snr_hard, snr_easy;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_flag("--force", force, "Replace an existing corpus");
  synth->add_option("--keywords", keywords, "Keyword utterances");
  synth->add_option("--fillers", fillers, "Filler utterances");
  synth->add_option("--eval-keywords", eval_keywords, "Keyword utterances per eval split");
  synth->add_option("--eval-fillers", eval_fillers, "Filler utterances per eval split");
  synth->add_option("--noisy-frac", noisy_frac, "Fraction of keywords given a noisy copy");
  synth->add_option("--snr-train", snr_train, "Noisy training SNR (dB)");
  synth->add_option("--snr-eval-hard", snr_hard, "Hard eval SNR (dB)");
  synth->add_option("--snr-eval-easy", snr_easy, "Easy eval SNR (dB)");

  CLI::App *train = app.add_subcommand("train", "Train or fine-tune a model");
  common.Attach(train);
  TrainArgs targs;
  train->add_option("--train", targs.train_manifest,
                    "Manifest; split=train entries are used for training")
      ->required();
  train->add_option("--valid", targs.valid_manifest,
                    "Validation manifest (default: split=valid of --train)");
  train->add_option("--mode", targs.mode,
                    "attention|mapping|transfer|transfer_multi_map");
  train->add_option("--init", targs.init, "Base checkpoint for transfer modes");
  train->add_option("--epochs", targs.epochs, "Training epochs");
  train->add_option("--out", targs.out, "Output checkpoint")->required();
  train->add_option("--metrics", targs.metrics, "Metrics CSV (default: OUT.metrics.csv)");

  CLI::App *eval = app.add_subcommand("eval", "FA/hour and wake-up rate");
  common.Attach(eval);
  std::string eval_ckpt, eval_manifest;
  std::optional<double> threshold;
  eval->add_option("--ckpt", eval_ckpt, "Checkpoint")->required();
  eval->add_option("--manifest", eval_manifest,
                   "Manifest with keyword (positive) and filler (negative) entries")
      ->required();
  eval->add_option("--threshold", threshold, "Detection threshold");

  CLI::App *roc = app.add_subcommand("roc", "ROC sweep to CSV");
  common.Attach(roc);
  std::string roc_ckpt, roc_pos, roc_neg, roc_range, roc_out;
  roc->add_option("--ckpt", roc_ckpt, "Checkpoint")->required();
  roc->add_option("--pos", roc_pos, "Manifest of positives (keyword entries)")->required();
  roc->add_option("--neg", roc_neg, "Manifest of negatives (filler entries)")->required();
  roc->add_option("--thresholds", roc_range, "start:stop:step")->required();
  roc->add_option("--out", roc_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (synth->parsed()) {
      std::vector<std::string> extra;
      Flag(extra, "corpus.keywords", keywords);
      Flag(extra, "corpus.fillers", fillers);
      Flag(extra, "corpus.eval_keywords", eval_keywords);
      Flag(extra, "corpus.eval_fillers", eval_fillers);
      Flag(extra, "corpus.noisy_frac", noisy_frac);
      Flag(extra, "corpus.snr_train", snr_train);
      Flag(extra, "corpus.snr_eval_hard", snr_hard);
      Flag(extra, "corpus.snr_eval_easy", snr_easy);
      return RunSynth(common, synth_out, force, extra);
    }
    if (train->parsed()) return RunTrain(common, targs);
    if (eval->parsed()) return RunEval(common, eval_ckpt, eval_manifest, threshold);
    if (roc->parsed())
      return RunRoc(common, roc_ckpt, roc_pos, roc_neg, roc_range, roc_out);
  } catch (const ConfigError &e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const DataError &e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const DivergenceError &e) {
    std::fprintf(stderr, "numeric error at step %ld: %s\n", e.step(), e.what());
    return kNumeric;
  } catch (const NumericError &e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kNumeric;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
  return kOther;
}
