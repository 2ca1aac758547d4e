// src/losses.cc

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

#include "mckws/losses.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "mckws/errors.h"

namespace mckws {

namespace {

void CheckAlpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw ConfigError("loss alpha must lie in [0,1], got " +
                      std::to_string(alpha));
}

double MaskCount(const ad::Tensor &mask) {
  double n = 0.0;
  for (double m : mask.data()) n += m;
  if (n <= 0.0) throw DataError("loss: mask selects no frames");
  return n;
}

}  // namespace

LossWeights::LossWeights(double alpha, double beta, double theta, double delta)
    : alpha_(alpha), beta_(beta), theta_(theta), delta_(delta) {
  const char *names[] = {"alpha", "beta", "theta", "delta"};
  const double values[] = {alpha, beta, theta, delta};
  for (int i = 0; i < 4; ++i)
    if (!(values[i] >= 0.0))
      throw ConfigError(std::string("loss_weights.") + names[i] +
                        " must be >= 0");
  const double residual = alpha + beta + theta + delta - 1.0;
  if (std::abs(residual) > kSumTolerance) {
    std::ostringstream os;
    os << "loss_weights must sum to 1 (alpha+beta+theta+delta); residual "
       << residual;
    throw ConfigError(os.str());
  }
}

LossWeights LossWeights::Single(double alpha) {
  CheckAlpha(alpha);
  return LossWeights(alpha, 1.0 - alpha, 0.0, 0.0);
}

std::size_t KeywordEndFrame(std::size_t keyword_end_sample, std::size_t frames,
                            const FrameConfig &cfg) {
  const std::size_t win = cfg.window_samples(), hop = cfg.shift_samples();
  std::size_t end = keyword_end_sample > win ? (keyword_end_sample - win) / hop : 0;
  return frames ? std::min(end, frames - 1) : 0;
}

std::vector<double> MakeFrameLabels(std::size_t frames,
                                    std::optional<std::size_t> keyword_end_sample,
                                    const FrameConfig &cfg) {
  std::vector<double> labels(frames, 0.0);
  if (!keyword_end_sample || frames == 0) return labels;
  const std::size_t end = KeywordEndFrame(*keyword_end_sample, frames, cfg);
  const std::size_t begin = end >= kKeywordTailFrames ? end - kKeywordTailFrames : 0;
  for (std::size_t t = begin; t <= end; ++t) labels[t] = 1.0;
  return labels;
}

double KwsLoss(const std::vector<double> &p, const std::vector<double> &y) {
  if (p.size() != y.size())
    throw DataError("KwsLoss: " + std::to_string(p.size()) +
                    " posteriors vs " + std::to_string(y.size()) + " labels");
  if (p.empty()) throw DataError("KwsLoss: empty sequence");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kProbClamp, 1.0 - kProbClamp);
    total += y[i] * std::log(q) + (1.0 - y[i]) * std::log(1.0 - q);
  }
  return -total / p.size();
}

double MapLoss(const std::vector<std::vector<double>> &predicted,
               const FeatureTensor &target) {
  if (target.channels() != 1)
    throw DataError("MapLoss: target must be single-channel");
  if (predicted.size() != target.frames())
    throw DataError("MapLoss: " + std::to_string(predicted.size()) +
                    " predicted frames vs " + std::to_string(target.frames()) +
                    " target frames");
  if (predicted.empty()) throw DataError("MapLoss: empty sequence");
  double total = 0.0;
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    if (predicted[t].size() != target.bins())
      throw DataError("MapLoss: bin count mismatch at frame " + std::to_string(t));
    for (std::size_t b = 0; b < target.bins(); ++b) {
      const double e = predicted[t][b] - target.at(t, 0, b);
      total += e * e;
    }
  }
  return total / (predicted.size() * target.bins());
}

double CombineSingle(double kws, double map_clean, double alpha) {
  CheckAlpha(alpha);
  return alpha * kws + (1.0 - alpha) * map_clean;
}

double CombineMulti(double kws, double map_clean, double map_noise1,
                    double map_noise2, const LossWeights &w) {
  return w.alpha() * kws + w.beta() * map_clean + w.theta() * map_noise1 +
         w.delta() * map_noise2;
}

ad::Var KwsLossVar(const ad::Var &p, const ad::Tensor &labels,
                   const ad::Tensor &mask) {
  using namespace ad;
  if (labels.size() != p.value().size() || mask.size() != p.value().size())
    throw DataError("KwsLossVar: labels/mask do not match posterior rows");
  Tape &tape = *p.tape();
  const double n = MaskCount(mask);
  Tensor not_y(labels.shape());
  for (std::size_t i = 0; i < labels.size(); ++i) not_y[i] = 1.0 - labels[i];
  const Shape col = p.shape();
  Var q = Clamp(p, kProbClamp, 1.0 - kProbClamp);
  Var ll = Add(Mul(Log(q), tape.Constant(labels.Reshaped(col))),
               Mul(Log(Affine(q, -1.0, 1.0)), tape.Constant(not_y.Reshaped(col))));
  return Affine(Sum(Mul(ll, tape.Constant(mask.Reshaped(col)))), -1.0 / n, 0.0);
}

ad::Var MapLossVar(const ad::Var &predicted, const ad::Tensor &target,
                   const ad::Tensor &mask) {
  using namespace ad;
  if (target.shape() != predicted.shape())
    throw DataError("MapLossVar: target shape " + ShapeString(target.shape()) +
                    " vs prediction " + ShapeString(predicted.shape()));
  const std::size_t rows = predicted.shape()[0], bins = predicted.shape()[1];
  if (mask.size() != rows) throw DataError("MapLossVar: mask length mismatch");
  Tape &tape = *predicted.tape();
  const double n = MaskCount(mask) * bins;
  Var diff = Sub(predicted, tape.Constant(target));
  Var sq = Mul(diff, diff);
  return Affine(Sum(Mul(sq, tape.Constant(mask.Reshaped({rows, 1})))),
                1.0 / n, 0.0);
}

ad::Var CombineSingleVar(const ad::Var &kws, const ad::Var &map_clean,
                         double alpha) {
  CheckAlpha(alpha);
  return ad::Add(ad::Affine(kws, alpha, 0.0),
                 ad::Affine(map_clean, 1.0 - alpha, 0.0));
}

ad::Var CombineMultiVar(const ad::Var &kws, const ad::Var &map_clean,
                        const ad::Var &map_noise1, const ad::Var &map_noise2,
                        const LossWeights &w) {
  using ad::Add;
  using ad::Affine;
  return Add(Add(Affine(kws, w.alpha(), 0.0), Affine(map_clean, w.beta(), 0.0)),
             Add(Affine(map_noise1, w.theta(), 0.0),
                 Affine(map_noise2, w.delta(), 0.0)));
}

}  // namespace mckws
