// src/model.cc

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

#include "mckws/model.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mckws/errors.h"

namespace mckws {

namespace {

const char *const kGates[] = {"z", "r", "h"};

// Attention input rows processed per group.
constexpr std::size_t kAttentionRows = 2048;

void UniformInit(ad::Tensor &t, std::size_t fan_in, std::mt19937_64 &rng) {
  const double k = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-k, k);
  for (double &v : t.data()) v = dist(rng);
}

ad::Tensor Matrix(std::size_t rows, std::size_t cols, std::mt19937_64 &rng) {
  ad::Tensor t({rows, cols});
  UniformInit(t, rows, rng);
  return t;
}

void AddGru(ModelParams &p, const std::string &prefix, std::size_t in,
            std::size_t hidden, std::mt19937_64 &rng) {
  for (const char *g : kGates) {
    p.tensors[prefix + ".W" + g] = Matrix(in, hidden, rng);
    p.tensors[prefix + ".U" + g] = Matrix(hidden, hidden, rng);
    p.tensors[prefix + ".b" + g] = ad::Tensor({hidden}, 0.0);
  }
}

ad::Var Linear(const ad::Var &x, const ParamVars &p, const std::string &name) {
  return ad::Add(ad::MatMul(x, p.at(name + ".W")), p.at(name + ".b"));
}

ad::Tensor Row(const std::vector<double> &v) {
  return ad::Tensor({1, v.size()}, v);
}

}  // namespace

void ModelConfig::Validate() const {
  if (channels < 1) throw ConfigError("model.channels must be >= 1");
  if (bins < 1) throw ConfigError("model.bins must be >= 1");
  if (attention_dim < 1) throw ConfigError("model.attention_dim must be >= 1");
  if (hidden < 1) throw ConfigError("model.hidden must be >= 1");
  if (map_heads != 0 && map_heads != 1 && map_heads != 3)
    throw ConfigError("model.map_heads must be 0, 1 or 3");
  if (!(dropout_keep > 0.0 && dropout_keep <= 1.0))
    throw ConfigError("model.dropout_keep must lie in (0,1]");
  pcen.Validate();
}

const std::vector<std::string> &MapHeadNames(int map_heads) {
  static const std::vector<std::string> none;
  static const std::vector<std::string> one = {"map_clean"};
  static const std::vector<std::string> three = {"map_clean", "map_noise1",
                                                 "map_noise2"};
  switch (map_heads) {
    case 0: return none;
    case 1: return one;
    case 3: return three;
    default: throw ConfigError("model.map_heads must be 0, 1 or 3");
  }
}

const ad::Tensor &ModelParams::Get(const std::string &name) const {
  auto it = tensors.find(name);
  if (it == tensors.end())
    throw std::out_of_range("model parameter '" + name + "' not present");
  return it->second;
}

ModelParams InitModelParams(const ModelConfig &config, std::mt19937_64 &rng) {
  config.Validate();
  const std::size_t f = config.bins, a = config.attention_dim,
                    h = config.hidden;
  ModelParams p;
  p.config = config;
  p.tensors["pcen.g"] = ad::Tensor({f}, config.pcen.g);
  p.tensors["pcen.d"] = ad::Tensor({f}, config.pcen.d);
  p.tensors["pcen.r"] = ad::Tensor({f}, config.pcen.r);
  p.tensors["att.W"] = Matrix(f, a, rng);
  p.tensors["att.b"] = ad::Tensor({a}, 0.0);
  p.tensors["att.v"] = Matrix(a, 1, rng);
  AddGru(p, "gru1", f, h, rng);
  AddGru(p, "gru2", h, h, rng);
  p.tensors["fc.W"] = Matrix(h, h, rng);
  p.tensors["fc.b"] = ad::Tensor({h}, 0.0);
  p.tensors["out.W"] = Matrix(h, 2, rng);
  p.tensors["out.b"] = ad::Tensor({2}, 0.0);
  p.config.map_heads = 0;
  AddMissingMapHeads(p, config.map_heads, rng);
  return p;
}

void AddMissingMapHeads(ModelParams &params, int map_heads,
                        std::mt19937_64 &rng) {
  const std::size_t f = params.config.bins, h = params.config.hidden;
  for (const std::string &name : MapHeadNames(map_heads)) {
    if (params.tensors.count(name + ".W")) continue;
    params.tensors[name + ".W"] = Matrix(h, f, rng);
    params.tensors[name + ".b"] = ad::Tensor({f}, 0.0);
  }
  params.config.map_heads = std::max(params.config.map_heads, map_heads);
}

void ProjectParams(ModelParams &params) {
  for (double &g : params.tensors.at("pcen.g").data())
    g = std::max(g, kPcenMinGain);
  for (double &d : params.tensors.at("pcen.d").data()) d = std::max(d, 0.0);
  for (double &r : params.tensors.at("pcen.r").data())
    r = std::clamp(r, kPcenMinRoot, 1.0);
}

ParamVars BindParams(ad::Tape &tape, const ModelParams &params,
                     bool trainable) {
  ParamVars vars;
  for (const auto &[name, t] : params.tensors)
    vars.emplace(name, trainable ? tape.Param(name, t) : tape.Constant(t));
  return vars;
}

ModelBatch MakeBatch(const std::vector<const FeatureTensor *> &utterances,
                     const PcenParams &pcen) {
  ModelBatch mb;
  if (utterances.empty()) return mb;
  mb.batch = utterances.size();
  mb.channels = utterances[0]->channels();
  mb.bins = utterances[0]->bins();
  for (const FeatureTensor *u : utterances) {
    if (u->channels() != mb.channels || u->bins() != mb.bins)
      throw DataError("MakeBatch: utterances disagree on channels/bins");
    mb.frames = std::max(mb.frames, u->frames());
    mb.lengths.push_back(u->frames());
  }
  const std::size_t rows = mb.frames * mb.batch * mb.channels;
  const std::size_t row = mb.channels * mb.bins;
  mb.energies = ad::Tensor({rows, mb.bins}, 0.0);
  mb.log_smoothed = ad::Tensor({rows, mb.bins}, std::log(pcen.eps));
  for (std::size_t b = 0; b < mb.batch; ++b) {
    const FeatureTensor &u = *utterances[b];
    const FeatureTensor m = PcenSmoother(u, pcen.s);
    for (std::size_t t = 0; t < u.frames(); ++t) {
      const std::size_t dst = (t * mb.batch + b) * row;
      const std::size_t src = t * row;
      for (std::size_t i = 0; i < row; ++i) {
        mb.energies[dst + i] = u.values()[src + i];
        mb.log_smoothed[dst + i] = std::log(pcen.eps + m.values()[src + i]);
      }
    }
  }
  return mb;
}

std::pair<ad::Var, ad::Var> AttendVars(const ad::Var &x, std::size_t channels,
                                       const ad::Var &w, const ad::Var &b,
                                       const ad::Var &v) {
  const std::size_t n = x.shape()[0], bins = x.shape()[1];
  if (n % channels != 0)
    throw std::invalid_argument("AttendVars: rows not a multiple of channels");
  const std::size_t rows = n / channels;
  // score_c = v . tanh(W x_c + b)
  ad::Var scores = ad::MatMul(ad::Tanh(ad::Add(ad::MatMul(x, w), b)), v);
  ad::Var weights = ad::Softmax(ad::Reshape(scores, {rows, channels}), 1);
  ad::Var weighted = ad::Mul(ad::Reshape(x, {rows, channels, bins}),
                             ad::Reshape(weights, {rows, channels, 1}));
  return {weights, ad::SumAxis(weighted, 1)};
}

GruVars GruLayer(const ParamVars &p, const std::string &prefix) {
  return GruVars{p.at(prefix + ".Wz"), p.at(prefix + ".Uz"), p.at(prefix + ".bz"),
                 p.at(prefix + ".Wr"), p.at(prefix + ".Ur"), p.at(prefix + ".br"),
                 p.at(prefix + ".Wh"), p.at(prefix + ".Uh"), p.at(prefix + ".bh")};
}

ad::Var GruStepVar(const ad::Var &x, const ad::Var &h, const GruVars &p) {
  using namespace ad;
  Var z = Sigmoid(Add(Add(MatMul(x, p.wz), MatMul(h, p.uz)), p.bz));
  Var r = Sigmoid(Add(Add(MatMul(x, p.wr), MatMul(h, p.ur)), p.br));
  Var cand = Tanh(Add(Add(MatMul(x, p.wh), MatMul(Mul(r, h), p.uh)), p.bh));
  // (1 - z) * h + z * cand
  return Add(h, Mul(z, Sub(cand, h)));
}

ad::Var GruSequence(const ad::Var &x, std::size_t frames, std::size_t batch,
                    std::size_t hidden, const GruVars &p) {
  using namespace ad;
  // Input projections of all frames in one product each.
  Var xz = Add(MatMul(x, p.wz), p.bz);
  Var xr = Add(MatMul(x, p.wr), p.br);
  Var xh = Add(MatMul(x, p.wh), p.bh);
  Var h = x.tape()->Constant(Tensor({batch, hidden}, 0.0));
  std::vector<Var> states;
  states.reserve(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t lo = t * batch, hi = lo + batch;
    Var z = Sigmoid(Add(SliceRows(xz, lo, hi), MatMul(h, p.uz)));
    Var r = Sigmoid(Add(SliceRows(xr, lo, hi), MatMul(h, p.ur)));
    Var cand = Tanh(Add(SliceRows(xh, lo, hi), MatMul(Mul(r, h), p.uh)));
    h = Add(h, Mul(z, Sub(cand, h)));
    states.push_back(h);
  }
  return ConcatRows(states);
}

ForwardResult Forward(ad::Tape &tape, const ParamVars &p,
                      const ModelConfig &config, const ModelBatch &batch,
                      Mode mode, std::mt19937_64 &rng) {
  using namespace ad;
  if (batch.channels != std::size_t(config.channels))
    throw DataError("Forward: batch has " + std::to_string(batch.channels) +
                    " channels, model expects " +
                    std::to_string(config.channels));
  if (batch.bins != std::size_t(config.bins))
    throw DataError("Forward: batch has " + std::to_string(batch.bins) +
                    " bins, model expects " + std::to_string(config.bins));
  ForwardResult result;
  const std::size_t T = batch.frames, B = batch.batch, C = batch.channels;
  const bool train = mode == Mode::kTrain;
  const double keep = config.dropout_keep;
  if (T == 0 || B == 0) return result;

  // PCEN on all rows at once: (E * exp(-g * log(eps + M)) + d)^r - d^r
  Var energies = tape.Constant(batch.energies);
  Var log_m = tape.Constant(batch.log_smoothed);
  const Var &g = p.at("pcen.g"), &d = p.at("pcen.d"), &r = p.at("pcen.r");
  Var gain = Exp(Mul(log_m, Affine(g, -1.0, 0.0)));
  Var pcen = Sub(Pow(Add(Mul(energies, gain), d), r), Pow(d, r));

  // Attention in groups of frames small enough to stay cache-resident.
  const std::size_t group = std::max<std::size_t>(1, kAttentionRows / (B * C));
  std::vector<Var> weight_parts, fused_parts;
  for (std::size_t t = 0; t < T; t += group) {
    const std::size_t end = std::min(T, t + group);
    auto [w, f] = AttendVars(SliceRows(pcen, t * B * C, end * B * C), C,
                             p.at("att.W"), p.at("att.b"), p.at("att.v"));
    weight_parts.push_back(w);
    fused_parts.push_back(f);
  }
  result.attention = ConcatRows(weight_parts);
  Var fused = ConcatRows(fused_parts);

  const std::size_t hidden = config.hidden;
  Var h1 = GruSequence(fused, T, B, hidden, GruLayer(p, "gru1"));
  Var h2 = GruSequence(Dropout(h1, keep, train, rng), T, B, hidden,
                       GruLayer(p, "gru2"));
  Var fc = Tanh(Linear(Dropout(h2, keep, train, rng), p, "fc"));
  Var fc_out = Dropout(fc, keep, train, rng);

  result.probs = Softmax(Linear(fc_out, p, "out"), 1);
  result.p_keyword = SliceCols(result.probs, 1, 2);
  for (const std::string &head : MapHeadNames(config.map_heads))
    result.map_outputs.push_back(Linear(fc_out, p, head));
  return result;
}

AttentionParams AttentionParamsOf(const ModelParams &params) {
  return {params.Get("att.W"), params.Get("att.b"), params.Get("att.v")};
}

GruParams GruParamsOf(const ModelParams &params, const std::string &prefix) {
  auto g = [&](const char *n) { return params.Get(prefix + "." + n); };
  return {g("Wz"), g("Uz"), g("bz"), g("Wr"), g("Ur"),
          g("br"), g("Wh"), g("Uh"), g("bh")};
}

AttentionResult Attend(const ad::Tensor &x, const AttentionParams &params) {
  if (x.rank() != 2) throw std::invalid_argument("Attend: x must be [channels, bins]");
  if (!x.AllFinite()) throw NumericError("Attend: non-finite input feature");
  ad::Tape tape;
  auto [weights, fused] =
      AttendVars(tape.Constant(x), x.dim(0), tape.Constant(params.w),
                 tape.Constant(params.b), tape.Constant(params.v));
  const auto wd = weights.value().data();
  const auto fd = fused.value().data();
  return {std::vector<double>(wd.begin(), wd.end()),
          std::vector<double>(fd.begin(), fd.end())};
}

std::vector<double> GruStep(const std::vector<double> &x,
                            const std::vector<double> &h_prev,
                            const GruParams &p) {
  ad::Tape tape;
  auto c = [&](const ad::Tensor &t) { return tape.Constant(t); };
  GruVars vars{c(p.wz), c(p.uz), c(p.bz), c(p.wr), c(p.ur),
               c(p.br), c(p.wh), c(p.uh), c(p.bh)};
  ad::Var h = GruStepVar(c(Row(x)), c(Row(h_prev)), vars);
  const auto hd = h.value().data();
  return std::vector<double>(hd.begin(), hd.end());
}

std::vector<PosteriorFrame> ForwardUtterance(const FeatureTensor &features,
                                             const ModelParams &params,
                                             Mode mode, std::mt19937_64 &rng) {
  const ModelConfig &cfg = params.config;
  if (features.channels() != std::size_t(cfg.channels))
    throw DataError("ForwardUtterance: features have " +
                    std::to_string(features.channels()) +
                    " channels, model expects " + std::to_string(cfg.channels));
  if (features.bins() != std::size_t(cfg.bins))
    throw DataError("ForwardUtterance: features have " +
                    std::to_string(features.bins()) + " bins, model expects " +
                    std::to_string(cfg.bins));
  std::vector<PosteriorFrame> out;
  if (features.frames() == 0) return out;
  ad::Tape tape;
  const ParamVars vars = BindParams(tape, params, false);
  const ModelBatch batch = MakeBatch({&features}, cfg.pcen);
  const ForwardResult res = Forward(tape, vars, cfg, batch, mode, rng);
  const ad::Tensor &probs = res.probs.value();
  out.resize(features.frames());
  for (std::size_t t = 0; t < out.size(); ++t) {
    out[t].p_filler = probs.at(t, 0);
    out[t].p_keyword = probs.at(t, 1);
    for (const ad::Var &m : res.map_outputs) {
      const ad::Tensor &mv = m.value();
      const std::size_t f = mv.dim(1);
      out[t].map_predictions.emplace_back(mv.raw() + t * f,
                                          mv.raw() + (t + 1) * f);
    }
  }
  return out;
}

std::vector<std::vector<double>> KeywordPosteriors(
    const std::vector<const FeatureTensor *> &utterances,
    const ModelParams &params, std::size_t batch_size) {
  std::vector<std::vector<double>> out(utterances.size());
  std::mt19937_64 unused(0);
  for (std::size_t start = 0; start < utterances.size(); start += batch_size) {
    const std::size_t end = std::min(utterances.size(), start + batch_size);
    std::vector<const FeatureTensor *> chunk(utterances.begin() + start,
                                             utterances.begin() + end);
    ad::Tape tape;
    const ParamVars vars = BindParams(tape, params, false);
    const ModelBatch batch = MakeBatch(chunk, params.config.pcen);
    if (batch.frames == 0) continue;
    const ForwardResult res =
        Forward(tape, vars, params.config, batch, Mode::kEval, unused);
    const ad::Tensor &p = res.p_keyword.value();
    for (std::size_t b = 0; b < chunk.size(); ++b) {
      auto &dst = out[start + b];
      dst.resize(batch.lengths[b]);
      for (std::size_t t = 0; t < dst.size(); ++t) dst[t] = p[t * batch.batch + b];
    }
  }
  return out;
}

}  // namespace mckws
