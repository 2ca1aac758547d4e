// src/training.cc

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

#include "mckws/training.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mckws/errors.h"
#include "mckws/parallel.h"
#include "mckws/rng.h"
#include "mckws/wav.h"

namespace mckws {

namespace {

// Seed streams derived from TrainConfig::seed.
constexpr std::uint64_t kStreamInit = 11;
constexpr std::uint64_t kStreamTrain = 12;

// Utterances per length-sorted bucket, in batches.
constexpr std::size_t kBucketBatches = 16;

const char *const kTargetKeys[] = {"clean", "noise1", "noise2"};

void Require(bool ok, const std::string &what) {
  if (!ok) throw ConfigError(what);
}

ModelConfig ModelFor(const TrainConfig &config) {
  ModelConfig m = config.model;
  m.map_heads = MapHeadsFor(config.mode);
  m.bins = config.features.n_mels;
  return m;
}

void AddParts(LossParts &acc, const LossParts &x) {
  const double n = double(x.frames);
  acc.total += x.total * n;
  acc.kws += x.kws * n;
  acc.map_clean += x.map_clean * n;
  acc.map_noise1 += x.map_noise1 * n;
  acc.map_noise2 += x.map_noise2 * n;
  acc.frames += x.frames;
}

LossParts Normalised(LossParts acc) {
  if (acc.frames == 0) return acc;
  const double n = double(acc.frames);
  acc.total /= n;
  acc.kws /= n;
  acc.map_clean /= n;
  acc.map_noise1 /= n;
  acc.map_noise2 /= n;
  return acc;
}

std::string RngText(const std::mt19937_64 &rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

// PCEN of a single-channel target under the model's current parameters.
FeatureTensor PcenTarget(const FeatureTensor &raw, const ModelParams &params) {
  const ad::Tensor &g = params.Get("pcen.g");
  const ad::Tensor &d = params.Get("pcen.d");
  const ad::Tensor &r = params.Get("pcen.r");
  return PcenPerBin(raw, params.config.pcen, g.data(), d.data(), r.data());
}

// Fixed batch schedule for one epoch: a seeded permutation, cut into
// length-sorted buckets, batched, then batch order shuffled.
std::vector<std::vector<std::size_t>> EpochSchedule(
    const std::vector<Example> &examples, std::size_t batch_size,
    std::mt19937_64 &rng) {
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t bucket = batch_size * kBucketBatches;
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t lo = 0; lo < order.size(); lo += bucket) {
    const auto first = order.begin() + lo;
    const auto last = order.begin() + std::min(order.size(), lo + bucket);
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
      return examples[a].features.frames() < examples[b].features.frames();
    });
    for (auto it = first; it < last; it += std::ptrdiff_t(
             std::min<std::size_t>(batch_size, std::size_t(last - it))))
      batches.emplace_back(
          it, it + std::ptrdiff_t(std::min<std::size_t>(batch_size,
                                                        std::size_t(last - it))));
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

}  // namespace

const char *TrainModeName(TrainMode mode) {
  switch (mode) {
    case TrainMode::kAttention: return "attention";
    case TrainMode::kMapping: return "mapping";
    case TrainMode::kTransfer: return "transfer";
    case TrainMode::kTransferMultiMap: return "transfer_multi_map";
  }
  return "?";
}

TrainMode ParseTrainMode(const std::string &name) {
  for (TrainMode m : {TrainMode::kAttention, TrainMode::kMapping,
                      TrainMode::kTransfer, TrainMode::kTransferMultiMap})
    if (name == TrainModeName(m)) return m;
  throw ConfigError("train.mode: unknown mode '" + name +
                    "' (attention|mapping|transfer|transfer_multi_map)");
}

int MapHeadsFor(TrainMode mode) {
  switch (mode) {
    case TrainMode::kMapping: return 1;
    case TrainMode::kTransferMultiMap: return 3;
    default: return 0;
  }
}

bool IsTransfer(TrainMode mode) {
  return mode == TrainMode::kTransfer || mode == TrainMode::kTransferMultiMap;
}

void TrainConfig::Validate() const {
  Require(batch_size >= 1, "train.batch_size: must be >= 1");
  Require(epochs >= 0, "train.epochs: must be >= 0");
  Require(std::isfinite(adam.learning_rate) && adam.learning_rate >= 0.0,
          "train.learning_rate: must be finite and >= 0");
  Require(adam.beta1 >= 0.0 && adam.beta1 < 1.0, "train.beta1: must be in [0, 1)");
  Require(adam.beta2 >= 0.0 && adam.beta2 < 1.0, "train.beta2: must be in [0, 1)");
  Require(adam.eps > 0.0, "train.adam_eps: must be > 0");
  Require(!IsTransfer(mode) || init_checkpoint.has_value(),
          std::string("train.init_checkpoint: required for mode ") +
              TrainModeName(mode));
  features.Validate();
  ModelFor(*this).Validate();
  if (loss_weights) {
    const LossWeights &w = *loss_weights;
    const int heads = MapHeadsFor(mode);
    Require(heads >= 1 || (w.beta() == 0.0 && w.theta() == 0.0 && w.delta() == 0.0),
            std::string("train.loss_weights: mode ") + TrainModeName(mode) +
                " has no mapping heads, so beta, theta and delta must be 0");
    Require(heads >= 3 || (w.theta() == 0.0 && w.delta() == 0.0),
            std::string("train.loss_weights: mode ") + TrainModeName(mode) +
                " has one mapping head, so theta and delta must be 0");
  }
}

LossWeights TrainConfig::EffectiveWeights() const {
  if (loss_weights) return *loss_weights;
  switch (MapHeadsFor(mode)) {
    case 1: return LossWeights::Single(0.5);
    case 3: return LossWeights(0.5, 0.2, 0.2, 0.1);
    default: return LossWeights(1.0, 0.0, 0.0, 0.0);
  }
}

void AdamStep(std::map<std::string, ad::Tensor> &params,
              const std::map<std::string, ad::Tensor> &grads, AdamState &state,
              std::uint64_t t, const AdamConfig &cfg) {
  if (t < 1) throw std::invalid_argument("AdamStep: step must be >= 1");
  const double c1 = 1.0 - std::pow(cfg.beta1, double(t));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(t));
  for (const auto &[name, g] : grads) {
    auto it = params.find(name);
    if (it == params.end()) continue;
    ad::Tensor &theta = it->second;
    if (g.shape() != theta.shape())
      throw std::invalid_argument("AdamStep: gradient shape mismatch for " + name);
    ad::Tensor &m = state.m.try_emplace(name, theta.shape(), 0.0).first->second;
    ad::Tensor &v = state.v.try_emplace(name, theta.shape(), 0.0).first->second;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      theta[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
  state.step = t;
}

std::vector<Example> LoadExamples(const std::vector<ManifestEntry> &entries,
                                  const FrameConfig &cfg, int targets,
                                  unsigned threads) {
  cfg.Validate();
  std::vector<Example> out(entries.size());
  ParallelFor(entries.size(), threads, [&](std::size_t i) {
    const ManifestEntry &e = entries[i];
    const Waveform wave = ReadWav(e.wav);
    if (std::abs(double(wave.sample_rate) - cfg.sample_rate) > 0.5)
      throw DataError(e.wav + ": sample rate " + std::to_string(wave.sample_rate) +
                      " does not match the feature configuration");
    Example &x = out[i];
    x.id = e.id;
    x.features = FrameAndFilterbank(wave, cfg);
    x.keyword = e.label == Label::kKeyword;
    x.labels = MakeFrameLabels(x.features.frames(),
                               x.keyword ? e.keyword_end_sample : std::nullopt, cfg);
    x.seconds = wave.channels.empty()
                    ? 0.0
                    : double(wave.channels[0].size()) / double(wave.sample_rate);
    for (int k = 0; k < targets; ++k) {
      auto it = e.targets.find(kTargetKeys[k]);
      if (it == e.targets.end())
        throw DataError("utterance " + e.id + " lacks the '" + kTargetKeys[k] +
                        "' mapping target");
      FeatureTensor fb = FrameAndFilterbank(ReadWav(it->second), cfg);
      if (fb.channels() != 1) fb = fb.Channel(0);
      if (fb.frames() != x.features.frames())
        throw DataError("utterance " + e.id + ": target '" + kTargetKeys[k] +
                        "' frame count differs from the input");
      x.targets.push_back(std::move(fb));
    }
  });
  return out;
}

BatchLoss ComputeBatchLoss(ad::Tape &tape, const ParamVars &vars,
                           const ModelParams &params,
                           const std::vector<const Example *> &batch,
                           const LossWeights &weights, Mode mode,
                           std::mt19937_64 &rng) {
  using namespace ad;
  if (batch.empty()) throw std::invalid_argument("ComputeBatchLoss: empty batch");
  const ModelConfig &cfg = params.config;
  std::vector<const FeatureTensor *> feats;
  for (const Example *x : batch) feats.push_back(&x->features);
  const ModelBatch mb = MakeBatch(feats, cfg.pcen);
  const ForwardResult fwd = Forward(tape, vars, cfg, mb, mode, rng);

  const std::size_t rows = mb.frames * mb.batch;
  Tensor labels({rows, 1}, 0.0), mask({rows, 1}, 0.0);
  for (std::size_t b = 0; b < mb.batch; ++b) {
    const Example &x = *batch[b];
    if (x.labels.size() != x.features.frames())
      throw DataError("utterance " + x.id + ": label count differs from frames");
    for (std::size_t t = 0; t < x.features.frames(); ++t) {
      labels[t * mb.batch + b] = x.labels[t];
      mask[t * mb.batch + b] = 1.0;
    }
  }

  BatchLoss out;
  out.parts.frames = 0;
  for (std::size_t len : mb.lengths) out.parts.frames += len;
  Var kws = KwsLossVar(fwd.p_keyword, labels, mask);
  out.parts.kws = kws.value()[0];

  std::vector<Var> maps;
  for (std::size_t k = 0; k < fwd.map_outputs.size(); ++k) {
    Tensor target({rows, mb.bins}, 0.0);
    for (std::size_t b = 0; b < mb.batch; ++b) {
      const Example &x = *batch[b];
      if (x.targets.size() <= k)
        throw DataError("utterance " + x.id + " lacks mapping target " +
                        kTargetKeys[k]);
      const FeatureTensor pc = PcenTarget(x.targets[k], params);
      for (std::size_t t = 0; t < pc.frames(); ++t)
        for (std::size_t f = 0; f < mb.bins; ++f)
          target.at(t * mb.batch + b, f) = pc.at(t, 0, f);
    }
    maps.push_back(MapLossVar(fwd.map_outputs[k], target, mask));
  }
  double *slots[] = {&out.parts.map_clean, &out.parts.map_noise1,
                     &out.parts.map_noise2};
  for (std::size_t k = 0; k < maps.size(); ++k) *slots[k] = maps[k].value()[0];

  if (maps.size() == 3) {
    out.total = CombineMultiVar(kws, maps[0], maps[1], maps[2], weights);
  } else if (maps.size() == 1) {
    out.total = CombineSingleVar(kws, maps[0], weights.alpha());
  } else {
    out.total = Affine(kws, weights.alpha(), 0.0);
  }
  out.parts.total = out.total.value()[0];
  return out;
}

ModelParams TransferInit(const Checkpoint &base, const TrainConfig &config,
                         std::mt19937_64 &rng) {
  ModelParams out = InitModelParams(ModelFor(config), rng);
  for (auto &[name, tensor] : out.tensors) {
    auto it = base.params.tensors.find(name);
    if (it == base.params.tensors.end()) {
      if (name.rfind("map_", 0) == 0) continue;
      throw ConfigError("transfer: base checkpoint lacks parameter " + name);
    }
    if (it->second.shape() != tensor.shape())
      throw ConfigError("transfer: parameter " + name + " has shape " +
                        ad::ShapeString(it->second.shape()) +
                        " in the base checkpoint but " +
                        ad::ShapeString(tensor.shape()) + " in the target model");
    tensor = it->second;
  }
  out.config.pcen = base.params.config.pcen;
  return out;
}

LossParts EvaluateLoss(const ModelParams &params,
                       const std::vector<Example> &examples,
                       const LossWeights &weights, std::size_t batch_size) {
  LossParts acc;
  std::mt19937_64 unused(0);
  for (std::size_t lo = 0; lo < examples.size(); lo += batch_size) {
    std::vector<const Example *> batch;
    for (std::size_t i = lo; i < std::min(examples.size(), lo + batch_size); ++i)
      batch.push_back(&examples[i]);
    ad::Tape tape;
    const ParamVars vars = BindParams(tape, params, false);
    AddParts(acc, ComputeBatchLoss(tape, vars, params, batch, weights,
                                   Mode::kEval, unused).parts);
  }
  return Normalised(acc);
}

TrainResult Train(const TrainConfig &config, const std::vector<Example> &train,
                  const std::vector<Example> &valid,
                  const std::string &config_json,
                  const std::function<void(const EpochMetrics &)> &on_epoch) {
  config.Validate();
  if (train.empty()) throw DataError("training set is empty");
  const LossWeights weights = config.EffectiveWeights();

  std::mt19937_64 init_rng(DeriveSeed(config.seed, kStreamInit));
  ModelParams params;
  if (IsTransfer(config.mode)) {
    params = TransferInit(LoadCheckpoint(*config.init_checkpoint), config, init_rng);
  } else {
    params = InitModelParams(ModelFor(config), init_rng);
  }

  std::mt19937_64 rng(DeriveSeed(config.seed, kStreamTrain));
  AdamState adam;
  TrainResult result;
  double best_valid = std::numeric_limits<double>::infinity();
  bool have_best = false;
  std::uint64_t step = 0;

  auto snapshot = [&] {
    return Checkpoint{params, adam, config_json, RngText(rng)};
  };

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.max_steps && step >= config.max_steps) break;
    LossParts epoch_acc;
    for (const auto &indices : EpochSchedule(train, config.batch_size, rng)) {
      if (config.max_steps && step >= config.max_steps) break;
      std::vector<const Example *> batch;
      for (std::size_t i : indices) batch.push_back(&train[i]);
      ++step;
      std::map<std::string, ad::Tensor> grads;
      LossParts parts;
      try {
        ad::Tape tape;
        const ParamVars vars = BindParams(tape, params, true);
        BatchLoss loss =
            ComputeBatchLoss(tape, vars, params, batch, weights, Mode::kTrain, rng);
        parts = loss.parts;
        if (!std::isfinite(parts.total))
          throw NumericError("non-finite loss");
        grads = tape.Backward(loss.total);
        for (const auto &[name, g] : grads)
          if (!g.AllFinite()) throw NumericError("non-finite gradient for " + name);
      } catch (const DivergenceError &) {
        throw;
      } catch (const NumericError &e) {
        throw DivergenceError("training diverged at step " + std::to_string(step) +
                                  ": " + e.what(),
                              long(step));
      }
      AdamStep(params.tensors, grads, adam, step, config.adam);
      ProjectParams(params);
      result.step_losses.push_back(parts.total);
      AddParts(epoch_acc, parts);
    }
    result.log.push_back({epoch, "train", Normalised(epoch_acc)});
    if (on_epoch) on_epoch(result.log.back());

    double score = result.log.back().loss.total;
    if (!valid.empty()) {
      const LossParts v = EvaluateLoss(params, valid, weights, config.batch_size);
      result.log.push_back({epoch, "valid", v});
      if (on_epoch) on_epoch(result.log.back());
      score = v.total;
    }
    if (!valid.empty() && (!have_best || score < best_valid)) {
      best_valid = score;
      have_best = true;
      result.best = snapshot();
    }
  }
  result.last = snapshot();
  if (!have_best) result.best = result.last;
  return result;
}

void WriteMetricsCsv(const std::vector<EpochMetrics> &log,
                     const std::string &path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot create metrics file " + path);
  out << "epoch,split,total,kws,map_clean,map_noise1,map_noise2\n";
  char line[256];
  for (const EpochMetrics &m : log) {
    std::snprintf(line, sizeof line, "%d,%s,%.9g,%.9g,%.9g,%.9g,%.9g\n", m.epoch,
                  m.split.c_str(), m.loss.total, m.loss.kws, m.loss.map_clean,
                  m.loss.map_noise1, m.loss.map_noise2);
    out << line;
  }
  if (!out) throw DataError("write failed for metrics file " + path);
}

}  // namespace mckws
