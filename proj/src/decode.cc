// src/decode.cc

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

#include "mckws/decode.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mckws/errors.h"
#include "mckws/parallel.h"
#include "mckws/wav.h"

namespace mckws {

void SmoothingConfig::Validate() const {
  if (n < 1) throw ConfigError("decode.n must be >= 1");
  if (!(threshold >= 0.0) || std::isnan(threshold))
    throw ConfigError("decode.threshold must be >= 0");
}

std::vector<double> Smooth(std::span<const double> p, std::size_t n) {
  if (n < 1) throw ConfigError("Smooth: window n must be >= 1");
  std::vector<double> out(p.size());
  // Re-sum each window rather than keep a running sum so the result is
  // exactly the windowed mean.
  for (std::size_t t = 0; t < p.size(); ++t) {
    const std::size_t begin = t + 1 >= n ? t + 1 - n : 0;
    double acc = 0.0;
    for (std::size_t i = begin; i <= t; ++i) acc += p[i];
    out[t] = acc / double(t + 1 - begin);
  }
  return out;
}

std::vector<std::size_t> Detect(std::span<const double> s,
                                const SmoothingConfig &cfg) {
  std::vector<std::size_t> events;
  std::size_t next_allowed = 0;
  const std::size_t gap = std::max<std::size_t>(cfg.hangover, 1);
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (t < next_allowed || s[t] < cfg.threshold) continue;
    events.push_back(t);
    if (gap == kInfiniteHangover || t > kInfiniteHangover - gap)
      next_allowed = kInfiniteHangover;
    else
      next_allowed = t + gap;
  }
  return events;
}

ScoredSet ScoreExamples(const ModelParams &params,
                        const std::vector<const FeatureTensor *> &positives,
                        const std::vector<const FeatureTensor *> &negatives,
                        double negative_hours, unsigned threads) {
  std::vector<const FeatureTensor *> all(positives);
  all.insert(all.end(), negatives.begin(), negatives.end());
  std::vector<std::vector<double>> scores(all.size());
  // Fixed 64-utterance batches, independent of the worker count, so the
  // scores do not depend on --threads.
  constexpr std::size_t kBatch = 64;
  const std::size_t batches = (all.size() + kBatch - 1) / kBatch;
  ParallelFor(batches, threads, [&](std::size_t b) {
    const std::size_t begin = b * kBatch;
    const std::size_t end = std::min(all.size(), begin + kBatch);
    std::vector<const FeatureTensor *> chunk(all.begin() + begin,
                                             all.begin() + end);
    auto out = KeywordPosteriors(chunk, params, kBatch);
    for (std::size_t i = 0; i < out.size(); ++i)
      scores[begin + i] = std::move(out[i]);
  });

  ScoredSet set;
  set.positives.assign(scores.begin(), scores.begin() + positives.size());
  set.negatives.assign(scores.begin() + positives.size(), scores.end());
  set.negative_hours = negative_hours;
  return set;
}

ScoredSet ScoreManifests(const ModelParams &params,
                         const std::vector<ManifestEntry> &positives,
                         const std::vector<ManifestEntry> &negatives,
                         const FrameConfig &features, unsigned threads) {
  if (positives.empty() && negatives.empty())
    throw DataError("evaluate: no keyword or filler utterances");
  std::vector<FeatureTensor> pos, neg;
  double seconds = 0.0;
  for (const auto &e : positives)
    pos.push_back(FrameAndFilterbank(ReadWav(e.wav), features));
  for (const auto &e : negatives) {
    const Waveform w = ReadWav(e.wav);
    seconds += double(w.num_samples()) / w.sample_rate;
    neg.push_back(FrameAndFilterbank(w, features));
  }
  if (!negatives.empty() && seconds <= 0.0)
    throw DataError("evaluate: negatives have zero duration");
  std::vector<const FeatureTensor *> pp, np;
  for (const auto &f : pos) pp.push_back(&f);
  for (const auto &f : neg) np.push_back(&f);
  return ScoreExamples(params, pp, np, seconds / 3600.0, threads);
}

EvalResult EvaluateScored(const ScoredSet &scored, const SmoothingConfig &cfg) {
  cfg.Validate();
  if (scored.positives.empty() && scored.negatives.empty())
    throw DataError("evaluate: empty evaluation set");
  EvalResult r;
  r.positives = scored.positives.size();
  r.negatives = scored.negatives.size();
  r.negative_hours = scored.negative_hours;
  for (const auto &p : scored.positives)
    if (!Detect(Smooth(p, cfg.n), cfg).empty()) ++r.woken;
  for (const auto &p : scored.negatives)
    r.false_alarms += Detect(Smooth(p, cfg.n), cfg).size();
  r.wakeup_rate = r.positives ? double(r.woken) / r.positives : 0.0;
  r.fa_per_hour = r.negative_hours > 0 ? r.false_alarms / r.negative_hours : 0.0;
  return r;
}

bool RocCurve::IsMonotone() const {
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (points[i].fa_per_hour > points[i - 1].fa_per_hour) return false;
    if (points[i].wakeup_rate > points[i - 1].wakeup_rate) return false;
  }
  return true;
}

double RocCurve::WakeupAtFa(double max_fa) const {
  double best = 0.0;
  for (const RocPoint &p : points)
    if (p.fa_per_hour <= max_fa) best = std::max(best, p.wakeup_rate);
  return best;
}

RocCurve RocSweep(const ScoredSet &scored, const std::vector<double> &thresholds,
                  std::size_t n, std::size_t hangover) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw ConfigError("roc: thresholds must be sorted ascending");
  // smoothing does not depend on the threshold; do it once
  ScoredSet smoothed;
  smoothed.negative_hours = scored.negative_hours;
  for (const auto &p : scored.positives) smoothed.positives.push_back(Smooth(p, n));
  for (const auto &p : scored.negatives) smoothed.negatives.push_back(Smooth(p, n));
  RocCurve curve;
  for (double th : thresholds) {
    SmoothingConfig cfg{1, th, hangover};
    const EvalResult r = EvaluateScored(smoothed, cfg);
    curve.points.push_back({th, r.fa_per_hour, r.wakeup_rate});
  }
  return curve;
}

std::vector<double> ParseThresholdRange(const std::string &spec) {
  double start = 0, stop = 0, step = 0;
  char tail = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf%c", &start, &stop, &step, &tail) != 3)
    throw ConfigError("thresholds: expected start:stop:step, got '" + spec + "'");
  if (!(step > 0) || !(stop >= start))
    throw ConfigError("thresholds: need step > 0 and stop >= start");
  std::vector<double> out;
  const long count = long(std::floor((stop - start) / step + 1e-9)) + 1;
  for (long i = 0; i < count; ++i) out.push_back(start + i * step);
  return out;
}

std::string RocCsv(const RocCurve &curve) {
  std::string out = "threshold,fa_per_hour,wakeup_rate\n";
  char line[128];
  for (const RocPoint &p : curve.points) {
    std::snprintf(line, sizeof line, "%.6g,%.6g,%.6g\n", p.threshold,
                  p.fa_per_hour, p.wakeup_rate);
    out += line;
  }
  return out;
}

void WriteRocCsv(const RocCurve &curve, const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot create ROC csv " + path);
  out << RocCsv(curve);
  if (!out) throw DataError("write failed for " + path);
}

}  // namespace mckws
