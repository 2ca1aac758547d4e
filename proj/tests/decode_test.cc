// tests/decode_test.cc

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

#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "mckws/errors.h"
#include "test_util.h"

namespace mckws {
namespace {

std::vector<double> RandomPosteriors(std::size_t n, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> p(n);
  for (double &v : p) v = u(rng);
  return p;
}

// Straightforward state machine: idle until a frame reaches the threshold,
// then blocked for `hangover` frames including the firing frame.
std::vector<std::size_t> ReferenceDetect(const std::vector<double> &s, double threshold,
                                         std::size_t hangover) {
  std::vector<std::size_t> events;
  std::size_t blocked = 0;
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (blocked > 0) {
      --blocked;
      continue;
    }
    if (s[t] >= threshold) {
      events.push_back(t);
      blocked = hangover > 1 ? hangover - 1 : 0;
    }
  }
  return events;
}

TEST(SmoothTest, ConstantAndIdentityCases) {
  const std::vector<double> c(30, 0.37);
  for (double v : Smooth(c, 12)) EXPECT_NEAR(v, 0.37, 1e-15);
  std::mt19937_64 rng(1);
  const auto p = RandomPosteriors(40, rng);
  EXPECT_EQ(Smooth(p, 1), p);
  EXPECT_TRUE(Smooth(std::vector<double>{}, 12).empty());
  EXPECT_THROW(Smooth(p, 0), ConfigError);
}

TEST(SmoothTest, MatchesBruteForceWindowedMean) {
  std::mt19937_64 rng(2);
  for (std::size_t n = 1; n <= 50; ++n) {
    const auto p = RandomPosteriors(120, rng);
    const auto s = Smooth(p, n);
    ASSERT_EQ(s.size(), p.size());
    for (std::size_t t = 0; t < p.size(); ++t) {
      const std::size_t lo = t + 1 >= n ? t + 1 - n : 0;
      double acc = 0.0;
      for (std::size_t i = lo; i <= t; ++i) acc += p[i];
      ASSERT_EQ(s[t], acc / double(t - lo + 1)) << "n=" << n << " t=" << t;
    }
  }
}

TEST(SmoothTest, TrailingWindowIsCausal) {
  std::vector<double> p(20, 0.0);
  p[10] = 1.0;
  const auto s = Smooth(p, 4);
  for (std::size_t t = 0; t < 10; ++t) EXPECT_EQ(s[t], 0.0);
  for (std::size_t t = 10; t < 14; ++t) EXPECT_EQ(s[t], 0.25);
  for (std::size_t t = 14; t < 20; ++t) EXPECT_EQ(s[t], 0.0);
}

TEST(DetectTest, HandWorkedCases) {
  SmoothingConfig cfg;
  EXPECT_TRUE(Detect(std::vector<double>(300, 0.0), cfg).empty());
  std::vector<double> spike(300, 0.0);
  spike[40] = 0.9;
  EXPECT_EQ(Detect(spike, cfg), (std::vector<std::size_t>{40}));
  spike[90] = 0.9;  // 50 frames later, inside the hangover
  EXPECT_EQ(Detect(spike, cfg), (std::vector<std::size_t>{40}));
  spike[140] = 0.9;  // exactly 100 frames after the first event
  EXPECT_EQ(Detect(spike, cfg), (std::vector<std::size_t>{40, 140}));
  std::vector<double> edge{0.49, 0.5};
  EXPECT_EQ(Detect(edge, cfg), (std::vector<std::size_t>{1}));
}

TEST(DetectTest, MatchesReferenceAutomaton) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> len(1, 400), hang(0, 150);
  std::uniform_real_distribution<double> th(0.3, 0.95);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = RandomPosteriors(len(rng), rng);
    const auto s = Smooth(p, 1 + trial % 12);
    SmoothingConfig cfg{12, th(rng), hang(rng)};
    ASSERT_EQ(Detect(s, cfg), ReferenceDetect(s, cfg.threshold, cfg.hangover))
        << "trial " << trial;
    ASSERT_EQ(Detect(p, cfg), ReferenceDetect(p, cfg.threshold, cfg.hangover))
        << "trial " << trial;
  }
}

TEST(DetectTest, InfiniteHangoverFiresAtMostOnce) {
  std::mt19937_64 rng(4);
  SmoothingConfig cfg{1, 0.1, kInfiniteHangover};
  for (int trial = 0; trial < 100; ++trial)
    EXPECT_LE(Detect(RandomPosteriors(500, rng), cfg).size(), 1u);
}

TEST(DetectTest, ConfigValidation) {
  EXPECT_THROW((SmoothingConfig{0, 0.5, 10}.Validate()), ConfigError);
  EXPECT_THROW((SmoothingConfig{12, -0.1, 10}.Validate()), ConfigError);
  EXPECT_THROW((SmoothingConfig{12, NAN, 10}.Validate()), ConfigError);
  EXPECT_NO_THROW((SmoothingConfig{12, 1.5, 0}.Validate()));
}

ScoredSet PerfectScores() {
  ScoredSet set;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> p(98, 0.0);
    for (std::size_t t = 57; t <= 72; ++t) p[t] = 1.0;
    set.positives.push_back(p);
  }
  for (int i = 0; i < 7; ++i) set.negatives.push_back(std::vector<double>(98, 0.0));
  set.negative_hours = 7.0 / 3600.0;
  return set;
}

TEST(EvaluateTest, PerfectPosteriors) {
  const EvalResult r = EvaluateScored(PerfectScores(), SmoothingConfig{});
  EXPECT_EQ(r.wakeup_rate, 1.0);
  EXPECT_EQ(r.fa_per_hour, 0.0);
  EXPECT_EQ(r.woken, 5u);
  EXPECT_EQ(r.positives, 5u);
  EXPECT_EQ(r.negatives, 7u);
}

TEST(EvaluateTest, ZeroThresholdCountsEveryHangoverWindow) {
  std::mt19937_64 rng(5);
  ScoredSet set;
  set.positives.push_back(RandomPosteriors(98, rng));
  double seconds = 0.0;
  std::size_t expected = 0;
  for (std::size_t frames : {98u, 250u, 1000u, 17u, 201u}) {
    set.negatives.push_back(RandomPosteriors(frames, rng));
    seconds += frames / 100.0;
  }
  set.negative_hours = seconds / 3600.0;
  for (std::size_t hangover : {1u, 7u, 100u}) {
    expected = 0;
    for (const auto &n : set.negatives)
      expected += (n.size() + hangover - 1) / hangover;
    const EvalResult r = EvaluateScored(set, SmoothingConfig{12, 0.0, hangover});
    EXPECT_EQ(r.false_alarms, expected);
    EXPECT_NEAR(r.fa_per_hour, expected / set.negative_hours, 1e-9);
    EXPECT_EQ(r.wakeup_rate, 1.0);
  }
}

TEST(EvaluateTest, ThresholdAboveOneSilencesEverything) {
  std::mt19937_64 rng(6);
  ScoredSet set = PerfectScores();
  set.negatives.push_back(RandomPosteriors(98, rng));
  const EvalResult r = EvaluateScored(set, SmoothingConfig{12, 1.01, 100});
  EXPECT_EQ(r.fa_per_hour, 0.0);
  EXPECT_EQ(r.wakeup_rate, 0.0);
  EXPECT_THROW(EvaluateScored(ScoredSet{}, SmoothingConfig{}), DataError);
}

TEST(RocTest, SweepsAreMonotone) {
  std::mt19937_64 rng(7);
  const auto thresholds = ParseThresholdRange("0:1:0.01");
  ASSERT_EQ(thresholds.size(), 101u);
  for (int trial = 0; trial < 20; ++trial) {
    ScoredSet set;
    for (int i = 0; i < 20; ++i) set.positives.push_back(RandomPosteriors(98, rng));
    for (int i = 0; i < 20; ++i) set.negatives.push_back(RandomPosteriors(98, rng));
    set.negative_hours = 20.0 * 0.98 / 3600.0;
    const RocCurve roc = RocSweep(set, thresholds, 12, 100);
    ASSERT_EQ(roc.points.size(), thresholds.size());
    EXPECT_TRUE(roc.IsMonotone());
  }
}

TEST(RocTest, SweepAgreesWithPointEvaluation) {
  std::mt19937_64 rng(8);
  ScoredSet set;
  for (int i = 0; i < 10; ++i) set.positives.push_back(RandomPosteriors(98, rng));
  for (int i = 0; i < 10; ++i) set.negatives.push_back(RandomPosteriors(150, rng));
  set.negative_hours = 15.0 / 3600.0;
  const RocCurve roc = RocSweep(set, {0.2, 0.5, 0.55, 0.6}, 12, 100);
  for (const RocPoint &p : roc.points) {
    const EvalResult r = EvaluateScored(set, SmoothingConfig{12, p.threshold, 100});
    EXPECT_EQ(p.fa_per_hour, r.fa_per_hour);
    EXPECT_EQ(p.wakeup_rate, r.wakeup_rate);
  }
  EXPECT_THROW(RocSweep(set, {0.5, 0.2}, 12, 100), ConfigError);
}

TEST(RocTest, WakeupAtFaPicksBestQualifyingPoint) {
  RocCurve roc;
  roc.points = {{0.1, 9.0, 1.0}, {0.5, 1.0, 0.9}, {0.7, 0.4, 0.8}, {0.9, 0.0, 0.5}};
  EXPECT_EQ(roc.WakeupAtFa(0.5), 0.8);
  EXPECT_EQ(roc.WakeupAtFa(1.0), 0.9);
  EXPECT_EQ(roc.WakeupAtFa(0.0), 0.5);
  EXPECT_TRUE(roc.IsMonotone());
  roc.points.push_back({1.0, 0.5, 0.0});
  EXPECT_FALSE(roc.IsMonotone());
}

TEST(RocTest, ThresholdRangeParsing) {
  EXPECT_EQ(ParseThresholdRange("0.5:0.5:0.1"), std::vector<double>{0.5});
  EXPECT_EQ(ParseThresholdRange("0:1:0.25").size(), 5u);
  EXPECT_THROW(ParseThresholdRange("0:1"), ConfigError);
  EXPECT_THROW(ParseThresholdRange("0:1:0"), ConfigError);
  EXPECT_THROW(ParseThresholdRange("1:0:0.1"), ConfigError);
  EXPECT_THROW(ParseThresholdRange("0:1:0.1x"), ConfigError);
}

TEST(RocTest, CsvFormat) {
  RocCurve roc;
  roc.points = {{0.5, 1234.5678, 0.123456789}, {1.0, 0.0, 0.0}};
  EXPECT_EQ(RocCsv(roc),
            "threshold,fa_per_hour,wakeup_rate\n0.5,1234.57,0.123457\n1,0,0\n");
  testing::ScratchDir dir;
  WriteRocCsv(roc, dir / "roc.csv");
  std::ifstream in(dir / "roc.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "threshold,fa_per_hour,wakeup_rate");
}

}  // namespace
}  // namespace mckws
