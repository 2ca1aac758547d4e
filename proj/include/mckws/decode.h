// mckws/decode.h

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

#ifndef MCKWS_DECODE_H_
#define MCKWS_DECODE_H_

// Posterior smoothing, thresholded detection with hangover, and the
// false-alarms-per-hour / wake-up-rate evaluation and ROC sweep.

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mckws/features.h"
#include "mckws/manifest.h"
#include "mckws/model.h"

namespace mckws {

inline constexpr std::size_t kInfiniteHangover =
    std::numeric_limits<std::size_t>::max();

struct SmoothingConfig {
  std::size_t n = 12;
  double threshold = 0.5;
  // After an event at frame t the next event can fire at t + hangover
  // at the earliest (hangover 0 or 1: every qualifying frame fires).
  std::size_t hangover = 100;

  void Validate() const;
};

/// Trailing mean: s_t = mean(p[max(0, t-n+1) .. t]).
std::vector<double> Smooth(std::span<const double> posteriors, std::size_t n);

/// Frames where the smoothed posterior reaches the threshold, with
/// post-event suppression.
std::vector<std::size_t> Detect(std::span<const double> smoothed,
                                const SmoothingConfig &cfg);

// Keyword posteriors of an evaluation set, computed once and shared by
// every operating point.
struct ScoredSet {
  std::vector<std::vector<double>> positives;
  std::vector<std::vector<double>> negatives;
  double negative_hours = 0.0;
};

struct EvalResult {
  double fa_per_hour = 0.0;
  double wakeup_rate = 0.0;
  std::size_t false_alarms = 0;
  std::size_t woken = 0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double negative_hours = 0.0;
};

/// Scores utterances with `params` in eval mode, `threads` workers, results
/// ordered as the inputs.
ScoredSet ScoreExamples(const ModelParams &params,
                        const std::vector<const FeatureTensor *> &positives,
                        const std::vector<const FeatureTensor *> &negatives,
                        double negative_hours, unsigned threads = 1);

/// Loads both manifests' audio and scores it. Throws DataError when either
/// manifest is empty or the negatives have zero duration.
ScoredSet ScoreManifests(const ModelParams &params,
                         const std::vector<ManifestEntry> &positives,
                         const std::vector<ManifestEntry> &negatives,
                         const FrameConfig &features, unsigned threads = 1);

/// wakeup_rate: fraction of positives with at least one event;
/// fa_per_hour: events on negatives per negative hour.
EvalResult EvaluateScored(const ScoredSet &scored, const SmoothingConfig &cfg);

struct RocPoint {
  double threshold = 0.0;
  double fa_per_hour = 0.0;
  double wakeup_rate = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // ascending threshold

  /// Both rates non-increasing as the threshold increases.
  bool IsMonotone() const;
  /// Best wake-up rate among points with fa_per_hour <= max_fa (0 if none).
  double WakeupAtFa(double max_fa) const;
};

/// One evaluation per threshold (sorted ascending, else ConfigError).
RocCurve RocSweep(const ScoredSet &scored, const std::vector<double> &thresholds,
                  std::size_t n, std::size_t hangover);

/// "start:stop:step", inclusive of stop within rounding.
std::vector<double> ParseThresholdRange(const std::string &spec);

/// Header threshold,fa_per_hour,wakeup_rate; 6 significant digits.
std::string RocCsv(const RocCurve &curve);
void WriteRocCsv(const RocCurve &curve, const std::string &path);

}  // namespace mckws

#endif  // MCKWS_DECODE_H_
