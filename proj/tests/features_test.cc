// tests/features_test.cc

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

#include "mckws/features.h"

#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "mckws/errors.h"
#include "mckws/model.h"
#include "test_util.h"

namespace mckws {
namespace {

using testing::RandomFeatures;

Waveform Sine(double hz, double seconds, int channels = 1, double amp = 0.5) {
  Waveform w;
  const std::size_t n = std::size_t(seconds * w.sample_rate);
  w.channels.assign(channels, std::vector<double>(n));
  for (auto &ch : w.channels)
    for (std::size_t i = 0; i < n; ++i)
      ch[i] = amp * std::sin(2.0 * std::numbers::pi * hz * i / w.sample_rate);
  return w;
}

TEST(FrameConfigTest, DefaultGeometry) {
  FrameConfig cfg;
  EXPECT_EQ(cfg.window_samples(), 400u);
  EXPECT_EQ(cfg.shift_samples(), 160u);
  EXPECT_EQ(cfg.fft_size(), 512u);
  EXPECT_NO_THROW(cfg.Validate());
}

TEST(FrameConfigTest, ValidationNamesTheField) {
  FrameConfig cfg;
  cfg.shift = 0.05;
  try {
    cfg.Validate();
    FAIL();
  } catch (const ConfigError &e) {
    EXPECT_NE(std::string(e.what()).find("features.window"), std::string::npos);
  }
  cfg = FrameConfig();
  cfg.n_mels = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = FrameConfig();
  cfg.n_mels = 400;  // more filters than FFT bins can support
  EXPECT_THROW(MelFilterbank{cfg}, ConfigError);
}

TEST(FilterbankTest, OneSecondGivesNinetyEightFrames) {
  const FeatureTensor f = FrameAndFilterbank(Sine(440, 1.0, 6), FrameConfig());
  EXPECT_EQ(f.frames(), 98u);  // (16000 - 400) / 160 + 1
  EXPECT_EQ(f.channels(), 6u);
  EXPECT_EQ(f.bins(), 40u);
}

TEST(FilterbankTest, FrameCountFormula) {
  FrameConfig cfg;
  for (std::size_t n : {400u, 559u, 560u, 561u, 4321u}) {
    Waveform w;
    w.channels = {std::vector<double>(n, 0.1)};
    EXPECT_EQ(FrameAndFilterbank(w, cfg).frames(), (n - 400) / 160 + 1) << n;
  }
}

TEST(FilterbankTest, SilenceGivesZeroEnergy) {
  Waveform w;
  w.channels.assign(2, std::vector<double>(16000, 0.0));
  const FeatureTensor f = FrameAndFilterbank(w, FrameConfig());
  for (double v : f.values()) EXPECT_EQ(v, 0.0);
}

TEST(FilterbankTest, SineArgmaxIsNearestCenter) {
  const FrameConfig cfg;
  const MelFilterbank bank(cfg);
  const auto &centers = bank.center_frequencies();
  for (double hz : {300.0, 1000.0, 2500.0, 5000.0}) {
    std::size_t nearest = 0;
    for (std::size_t b = 1; b < centers.size(); ++b)
      if (std::abs(centers[b] - hz) < std::abs(centers[nearest] - hz)) nearest = b;
    const FeatureTensor f = FrameAndFilterbank(Sine(hz, 0.2), cfg);
    for (std::size_t t = 0; t < f.frames(); ++t) {
      std::size_t arg = 0;
      for (std::size_t b = 1; b < f.bins(); ++b)
        if (f.at(t, 0, b) > f.at(t, 0, arg)) arg = b;
      EXPECT_EQ(arg, nearest) << hz << " Hz frame " << t;
    }
  }
}

TEST(FilterbankTest, EnergiesNonNegativeAndDeterministic) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.3);
  Waveform w;
  w.channels.assign(3, std::vector<double>(5000));
  for (auto &ch : w.channels)
    for (double &v : ch) v = n(rng);
  const FeatureTensor a = FrameAndFilterbank(w, FrameConfig());
  for (double v : a.values()) EXPECT_GE(v, 0.0);
  EXPECT_EQ(a, FrameAndFilterbank(w, FrameConfig()));
  EXPECT_EQ(a.Channel(2).values()[5], a.at(0, 2, 5));
}

TEST(FilterbankTest, MelScaleRoundTrip) {
  for (double hz : {0.0, 100.0, 1000.0, 7999.0})
    EXPECT_NEAR(MelToHz(HzToMel(hz)), hz, 1e-9);
  EXPECT_NEAR(HzToMel(1000.0), 999.9855, 1e-3);
}

TEST(FilterbankTest, InputErrors) {
  Waveform w;
  EXPECT_THROW(FrameAndFilterbank(w, FrameConfig()), DataError);
  w.channels = {std::vector<double>(399, 0.0)};
  EXPECT_THROW(FrameAndFilterbank(w, FrameConfig()), DataError);
  w.channels = {std::vector<double>(1000, 0.0), std::vector<double>(999, 0.0)};
  EXPECT_THROW(FrameAndFilterbank(w, FrameConfig()), DataError);
}

TEST(PcenTest, SmootherRecursion) {
  FeatureTensor e(4, 1, 1);
  e.values() = {4.0, 0.0, 2.0, 8.0};
  const FeatureTensor m = PcenSmoother(e, 0.5);
  EXPECT_EQ(m.values(), (std::vector<double>{4.0, 2.0, 2.0, 5.0}));
}

TEST(PcenTest, ConstantInputClosedForm) {
  const PcenParams p;
  for (double c : {1e-3, 0.5, 3.0, 100.0}) {
    const FeatureTensor out = Pcen(FeatureTensor(20, 2, 5, c), p);
    const double expect =
        std::pow(c / std::pow(p.eps + c, p.g) + p.d, p.r) - std::pow(p.d, p.r);
    for (double v : out.values()) EXPECT_NEAR(v, expect, 1e-12 * std::abs(expect) + 1e-15);
  }
}

TEST(PcenTest, DegenerateParametersGiveNormalisedEnergy) {
  std::mt19937_64 rng(2);
  const FeatureTensor e = RandomFeatures(30, 2, 4, rng);
  PcenParams p;
  p.d = 0.0;
  p.r = 1.0;
  const FeatureTensor out = Pcen(e, p);
  const FeatureTensor m = PcenSmoother(e, p.s);
  for (std::size_t i = 0; i < e.values().size(); ++i)
    EXPECT_EQ(out.values()[i], e.values()[i] / std::pow(p.eps + m.values()[i], p.g));
}

TEST(PcenTest, ZeroInputGivesZero) {
  const FeatureTensor out = Pcen(FeatureTensor(10, 3, 4, 0.0), PcenParams());
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(PcenTest, GainInvarianceInTheLimit) {
  std::mt19937_64 rng(8);
  const FeatureTensor e = RandomFeatures(50, 2, 6, rng, 0.01, 1.0);
  FeatureTensor scaled = e;
  for (double &v : scaled.values()) v *= 10.0;
  PcenParams p;
  p.eps = 1e-12;
  p.g = 1.0;
  p.d = 0.0;
  p.r = 1.0;
  const FeatureTensor a = Pcen(e, p), b = Pcen(scaled, p);
  for (std::size_t i = 0; i < a.values().size(); ++i)
    EXPECT_LE(testing::RelError(a.values()[i], b.values()[i]), 1e-6);
}

TEST(PcenTest, RejectsNegativeEnergyAndBadParams) {
  FeatureTensor e(3, 1, 2, 1.0);
  e.at(1, 0, 1) = -1e-9;
  EXPECT_THROW(Pcen(e, PcenParams()), DataError);
  PcenParams p;
  p.r = 1.5;
  EXPECT_THROW(p.Validate(), ConfigError);
  p = PcenParams();
  p.s = 1.0;
  EXPECT_THROW(p.Validate(), ConfigError);
}

// The model evaluates PCEN on the tape; its value must match the reference
// implementation and its gradients finite differences.
ad::Var TapePcen(ad::Tape &tape, const FeatureTensor &e, const PcenParams &p,
                 const std::vector<ad::Var> &gdr) {
  const std::size_t rows = e.frames() * e.channels(), bins = e.bins();
  const FeatureTensor m = PcenSmoother(e, p.s);
  ad::Tensor log_m({rows, bins});
  for (std::size_t i = 0; i < log_m.size(); ++i) log_m[i] = std::log(p.eps + m.values()[i]);
  ad::Var energies = tape.Constant(ad::Tensor({rows, bins}, e.values()));
  ad::Var gain = ad::Exp(ad::Mul(tape.Constant(log_m), ad::Affine(gdr[0], -1.0, 0.0)));
  return ad::Sub(ad::Pow(ad::Add(ad::Mul(energies, gain), gdr[1]), gdr[2]),
                 ad::Pow(gdr[1], gdr[2]));
}

TEST(PcenTest, TapeFormMatchesReference) {
  std::mt19937_64 rng(21);
  const FeatureTensor e = RandomFeatures(25, 3, 5, rng);
  std::vector<double> g{0.9, 0.95, 0.98, 0.5, 1.2}, d{2.0, 1.0, 0.5, 3.0, 0.0},
      r{0.5, 0.25, 0.9, 1.0, 0.4};
  const FeatureTensor ref = PcenPerBin(e, PcenParams(), g, d, r);
  ad::Tape tape;
  ad::Var out = TapePcen(tape, e, PcenParams(),
                         {tape.Constant(ad::Tensor({5}, g)),
                          tape.Constant(ad::Tensor({5}, d)),
                          tape.Constant(ad::Tensor({5}, r))});
  for (std::size_t i = 0; i < ref.values().size(); ++i)
    EXPECT_NEAR(out.value()[i], ref.values()[i], 1e-12);
}

TEST(PcenTest, ParameterGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(22);
  const FeatureTensor e = RandomFeatures(12, 2, 4, rng, 0.0, 3.0);
  const std::vector<ad::Tensor> gdr{ad::Tensor({4}, {0.98, 0.7, 1.1, 0.3}),
                                    ad::Tensor({4}, {2.0, 0.5, 1.5, 3.0}),
                                    ad::Tensor({4}, {0.5, 0.3, 0.8, 1.0})};
  std::mt19937_64 wrng(5);
  const ad::Tensor w = testing::RandomTensor({24, 4}, wrng);
  const auto r = testing::GradCheck(
      [&](ad::Tape &tape, const std::vector<ad::Var> &x) {
        return ad::Sum(ad::Mul(TapePcen(tape, e, PcenParams(), x), tape.Constant(w)));
      },
      gdr);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

}  // namespace
}  // namespace mckws
