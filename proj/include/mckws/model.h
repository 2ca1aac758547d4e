// mckws/model.h

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

#ifndef MCKWS_MODEL_H_
#define MCKWS_MODEL_H_

// Multi-channel keyword model: trainable PCEN on every channel, soft
// attention across channels per frame, two GRU layers, a tanh FC layer, a
// two-class keyword/filler head and optional linear spectral-mapping heads.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mckws/autodiff.h"
#include "mckws/features.h"

namespace mckws {

struct ModelConfig {
  int channels = 6;
  int bins = 40;
  int attention_dim = 128;
  int hidden = 128;  // both GRU layers and the FC layer
  int map_heads = 0;  // 0, 1 (clean) or 3 (clean, noise1, noise2)
  double dropout_keep = 0.9;
  PcenParams pcen;  // initial g, d, r; fixed s and eps

  void Validate() const;
  bool operator==(const ModelConfig &) const = default;
};

// Names of the mapping heads in head order.
const std::vector<std::string> &MapHeadNames(int map_heads);

// All trainable tensors, addressed by name ("att.W", "gru1.Uz", ...).
struct ModelParams {
  ModelConfig config;
  std::map<std::string, ad::Tensor> tensors;

  const ad::Tensor &Get(const std::string &name) const;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases, PCEN
/// parameters from config.pcen replicated per bin.
ModelParams InitModelParams(const ModelConfig &config, std::mt19937_64 &rng);

/// Adds the parameter tensors for mapping heads that `params` lacks
/// (up to config.map_heads), leaving existing tensors untouched.
void AddMissingMapHeads(ModelParams &params, int map_heads,
                        std::mt19937_64 &rng);

/// Clamps the PCEN parameters back into their valid ranges.
void ProjectParams(ModelParams &params);

// Parameters bound to a tape, either as trainable leaves or as constants.
using ParamVars = std::map<std::string, ad::Var>;
ParamVars BindParams(ad::Tape &tape, const ModelParams &params, bool trainable);

enum class Mode { kTrain, kEval };

// A right-padded batch of utterances, rows ordered (frame, utterance,
// channel). Padding rows carry zero energy.
struct ModelBatch {
  std::size_t frames = 0;
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t bins = 0;
  ad::Tensor energies;      // [frames*batch*channels, bins]
  ad::Tensor log_smoothed;  // log(eps + M), same shape
  std::vector<std::size_t> lengths;  // valid frames per utterance
};

/// Packs raw filterbank energies (frames x channels x bins each) into a
/// padded batch. All inputs must share channel and bin counts.
ModelBatch MakeBatch(const std::vector<const FeatureTensor *> &utterances,
                     const PcenParams &pcen);

struct ForwardResult {
  ad::Var probs;                      // [frames*batch, 2] filler, keyword
  ad::Var p_keyword;                  // [frames*batch, 1], rows (t, b)
  std::vector<ad::Var> map_outputs;   // each [frames*batch, bins]
  ad::Var attention;                  // [frames*batch, channels]
};

/// Whole-batch forward pass on `tape`. Dropout masks are drawn from `rng` in
/// training mode only.
ForwardResult Forward(ad::Tape &tape, const ParamVars &params,
                      const ModelConfig &config, const ModelBatch &batch,
                      Mode mode, std::mt19937_64 &rng);

// ---- single-step building blocks ----

/// Tape version of the channel attention: x is [rows*channels, bins] with
/// each group of `channels` consecutive rows forming one frame. Returns
/// (weights [rows, channels], fused [rows, bins]).
std::pair<ad::Var, ad::Var> AttendVars(const ad::Var &x, std::size_t channels,
                                       const ad::Var &w, const ad::Var &b,
                                       const ad::Var &v);

struct GruVars {
  ad::Var wz, uz, bz, wr, ur, br, wh, uh, bh;
};
GruVars GruLayer(const ParamVars &params, const std::string &prefix);
ad::Var GruStepVar(const ad::Var &x, const ad::Var &h, const GruVars &p);

/// Runs a GRU layer from a zero state over x [frames*batch, in] (rows
/// ordered (frame, utterance)); returns every state, same row order.
ad::Var GruSequence(const ad::Var &x, std::size_t frames, std::size_t batch,
                    std::size_t hidden, const GruVars &p);

struct AttentionParams {
  ad::Tensor w;  // [bins, attention_dim]
  ad::Tensor b;  // [attention_dim]
  ad::Tensor v;  // [attention_dim, 1]
};

struct AttentionResult {
  std::vector<double> weights;  // per channel, sums to 1
  std::vector<double> fused;    // per bin
};

/// One frame: x is [channels, bins]. Throws NumericError on non-finite input.
AttentionResult Attend(const ad::Tensor &x, const AttentionParams &params);

struct GruParams {
  ad::Tensor wz, uz, bz, wr, ur, br, wh, uh, bh;
};

/// One GRU update for a single input vector.
std::vector<double> GruStep(const std::vector<double> &x,
                            const std::vector<double> &h_prev,
                            const GruParams &params);

AttentionParams AttentionParamsOf(const ModelParams &params);
GruParams GruParamsOf(const ModelParams &params, const std::string &prefix);

struct PosteriorFrame {
  double p_keyword = 0.0;
  double p_filler = 1.0;
  std::vector<std::vector<double>> map_predictions;
};

/// Per-frame posteriors for one utterance of raw filterbank energies.
/// Throws DataError if the channel or bin count does not match the model.
std::vector<PosteriorFrame> ForwardUtterance(const FeatureTensor &features,
                                             const ModelParams &params,
                                             Mode mode, std::mt19937_64 &rng);

/// Eval-mode keyword posteriors for many utterances, batched internally.
std::vector<std::vector<double>> KeywordPosteriors(
    const std::vector<const FeatureTensor *> &utterances,
    const ModelParams &params, std::size_t batch_size = 64);

}  // namespace mckws

#endif  // MCKWS_MODEL_H_
