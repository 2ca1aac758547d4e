// mckws/losses.h

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

#ifndef MCKWS_LOSSES_H_
#define MCKWS_LOSSES_H_

#include <optional>
#include <vector>

#include "mckws/autodiff.h"
#include "mckws/features.h"

namespace mckws {

// Task-mixing weights of the keyword loss and up to three mapping losses.
class LossWeights {
 public:
  static constexpr double kSumTolerance = 1e-6;

  /// Throws ConfigError if any weight is negative or the sum differs from 1
  /// by more than kSumTolerance (the message names the residual).
  LossWeights(double alpha, double beta, double theta, double delta);

  /// Single-target weights: (alpha, 1 - alpha, 0, 0).
  static LossWeights Single(double alpha);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double theta() const { return theta_; }
  double delta() const { return delta_; }

 private:
  double alpha_, beta_, theta_, delta_;
};

inline constexpr double kProbClamp = 1e-7;
// Frames before (and including) the keyword end that are labelled 1.
inline constexpr std::size_t kKeywordTailFrames = 15;

/// Per-frame keyword targets: frames from (end_frame - 15) through end_frame
/// are 1 where end_frame is the last frame starting before keyword_end_sample
/// completes; everything else (and every frame of a filler) is 0.
std::vector<double> MakeFrameLabels(std::size_t frames,
                                    std::optional<std::size_t> keyword_end_sample,
                                    const FrameConfig &cfg);

/// Frame index containing the keyword end sample.
std::size_t KeywordEndFrame(std::size_t keyword_end_sample, std::size_t frames,
                            const FrameConfig &cfg);

/// Mean binary cross-entropy with p clamped to [1e-7, 1 - 1e-7].
double KwsLoss(const std::vector<double> &p_keyword,
               const std::vector<double> &labels);

/// Mean squared error over frames x bins against a single-channel target.
double MapLoss(const std::vector<std::vector<double>> &predicted,
               const FeatureTensor &target);

double CombineSingle(double kws, double map_clean, double alpha);
double CombineMulti(double kws, double map_clean, double map_noise1,
                    double map_noise2, const LossWeights &w);

// ---- tape versions; `mask` is [rows, 1] with 1 on valid frames ----

ad::Var KwsLossVar(const ad::Var &p_keyword, const ad::Tensor &labels,
                   const ad::Tensor &mask);
ad::Var MapLossVar(const ad::Var &predicted, const ad::Tensor &target,
                   const ad::Tensor &mask);
ad::Var CombineSingleVar(const ad::Var &kws, const ad::Var &map_clean,
                         double alpha);
ad::Var CombineMultiVar(const ad::Var &kws, const ad::Var &map_clean,
                        const ad::Var &map_noise1, const ad::Var &map_noise2,
                        const LossWeights &w);

}  // namespace mckws

#endif  // MCKWS_LOSSES_H_
