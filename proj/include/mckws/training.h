// mckws/training.h

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

#ifndef MCKWS_TRAINING_H_
#define MCKWS_TRAINING_H_

// Adam training for the four regimes:
//   attention           keyword loss only, from scratch
//   mapping             keyword + clean mapping (single-target weights)
//   transfer            keyword loss, initialised from a checkpoint
//   transfer_multi_map  keyword + three mapping targets, from a checkpoint

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mckws/checkpoint.h"
#include "mckws/features.h"
#include "mckws/losses.h"
#include "mckws/manifest.h"
#include "mckws/model.h"

namespace mckws {

enum class TrainMode { kAttention, kMapping, kTransfer, kTransferMultiMap };

const char *TrainModeName(TrainMode mode);
TrainMode ParseTrainMode(const std::string &name);
int MapHeadsFor(TrainMode mode);
bool IsTransfer(TrainMode mode);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  TrainMode mode = TrainMode::kAttention;
  std::size_t batch_size = 64;
  AdamConfig adam;
  int epochs = 20;
  std::uint64_t seed = 1;
  // Unset: (1,0,0,0) for keyword-only modes, (0.5,0.5,0,0) for mapping,
  // (0.5,0.2,0.2,0.1) for transfer_multi_map.
  std::optional<LossWeights> loss_weights;
  std::optional<std::string> init_checkpoint;
  std::size_t max_steps = 0;  // 0: no cap
  ModelConfig model;          // map_heads follows the mode
  FrameConfig features;

  /// Throws ConfigError; transfer modes require init_checkpoint and mapping
  /// mode rejects nonzero theta/delta.
  void Validate() const;
  LossWeights EffectiveWeights() const;
};

/// One Adam update at step t >= 1 (bias-corrected). Moments absent from
/// `state` start at zero. Parameters without a gradient are left alone.
void AdamStep(std::map<std::string, ad::Tensor> &params,
              const std::map<std::string, ad::Tensor> &grads, AdamState &state,
              std::uint64_t t, const AdamConfig &cfg);

// A loaded utterance: raw filterbank energies plus frame labels and the raw
// single-channel filterbanks of its mapping targets.
struct Example {
  std::string id;
  FeatureTensor features;
  std::vector<double> labels;
  std::vector<FeatureTensor> targets;  // clean, noise1, noise2 (as needed)
  bool keyword = false;
  double seconds = 0.0;
};

/// Loads WAVs and computes features; `targets` mapping targets are required
/// per entry (DataError if missing). Order follows `entries`.
std::vector<Example> LoadExamples(const std::vector<ManifestEntry> &entries,
                                  const FrameConfig &cfg, int targets,
                                  unsigned threads = 1);

struct LossParts {
  double total = 0.0;
  double kws = 0.0;
  double map_clean = 0.0;
  double map_noise1 = 0.0;
  double map_noise2 = 0.0;
  std::size_t frames = 0;
};

struct BatchLoss {
  ad::Var total;
  LossParts parts;
};

/// Builds the weighted loss of a padded batch on `tape`. Padded frames are
/// masked out of every term; mapping targets are PCEN-normalised with the
/// current (detached) PCEN parameters.
BatchLoss ComputeBatchLoss(ad::Tape &tape, const ParamVars &vars,
                           const ModelParams &params,
                           const std::vector<const Example *> &batch,
                           const LossWeights &weights, Mode mode,
                           std::mt19937_64 &rng);

/// Transfer initialisation: copies every parameter the target architecture
/// shares with `base` exactly, adds freshly initialised mapping heads the
/// base lacks and drops heads the mode does not use. Throws ConfigError
/// naming the first shared parameter whose shape differs.
ModelParams TransferInit(const Checkpoint &base, const TrainConfig &config,
                         std::mt19937_64 &rng);

struct EpochMetrics {
  int epoch = 0;
  std::string split;  // train or valid
  LossParts loss;
};

struct TrainResult {
  Checkpoint best;      // lowest validation loss (last epoch without one)
  Checkpoint last;
  std::vector<EpochMetrics> log;
  std::vector<double> step_losses;  // training loss per optimizer step
};

/// Full training run. `valid` may be empty. Throws DivergenceError (with
/// the step index) on a non-finite loss. `on_epoch` sees every log row as
/// it is produced.
TrainResult Train(const TrainConfig &config, const std::vector<Example> &train,
                  const std::vector<Example> &valid,
                  const std::string &config_json = "{}",
                  const std::function<void(const EpochMetrics &)> &on_epoch = {});

/// Mean loss over a set in eval mode.
LossParts EvaluateLoss(const ModelParams &params,
                       const std::vector<Example> &examples,
                       const LossWeights &weights, std::size_t batch_size);

/// CSV: epoch,split,total,kws,map_clean,map_noise1,map_noise2
void WriteMetricsCsv(const std::vector<EpochMetrics> &log,
                     const std::string &path);

}  // namespace mckws

#endif  // MCKWS_TRAINING_H_
