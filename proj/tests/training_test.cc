// tests/training_test.cc

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

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "mckws/checkpoint.h"
#include "mckws/datagen.h"
#include "mckws/errors.h"
#include "test_util.h"

namespace mckws {
namespace {

// Keyword and filler utterances with all three mapping targets attached.
std::vector<Example> SynthExamples(std::size_t keywords, std::size_t fillers,
                                   std::uint64_t seed, double filler_seconds = 1.0) {
  const FrameConfig fc;
  const auto geo = ArrayGeometry::DefaultSpeaker();
  std::vector<Example> out;
  for (std::size_t i = 0; i < keywords + fillers; ++i) {
    const bool kw = i < keywords;
    const UtteranceRecord clean = kw ? SynthKeyword(seed * 1000 + i, geo)
                                     : SynthFiller(seed * 1000 + i, geo, filler_seconds);
    const std::size_t n = clean.waveforms.num_samples();
    const Waveform music =
        RenderToArray(SynthMusic(seed * 1000 + i + 500, n + 4000, 16000.0),
                      ArrayGeometry::DefaultMusic(), 16000);
    std::mt19937_64 rng(seed + i);
    const UtteranceRecord rec = MakeMultitarget(clean, music, geo, {}, rng);
    Example x;
    x.id = (kw ? "kw" : "fl") + std::to_string(i);
    x.keyword = kw;
    x.features = FrameAndFilterbank(rec.waveforms, fc);
    x.labels = MakeFrameLabels(x.features.frames(), rec.keyword_end_sample, fc);
    x.seconds = n / 16000.0;
    for (const auto *t : {&rec.target_clean, &rec.target_noise1, &rec.target_noise2}) {
      Waveform w;
      w.sample_rate = 16000;
      w.channels = {*t};
      x.targets.push_back(FrameAndFilterbank(w, fc));
    }
    out.push_back(std::move(x));
  }
  return out;
}

const std::vector<Example> &SharedExamples() {
  static const std::vector<Example> examples = SynthExamples(6, 6, 1);
  return examples;
}

TrainConfig SmallTrainConfig(TrainMode mode = TrainMode::kAttention) {
  TrainConfig c;
  c.mode = mode;
  c.batch_size = 4;
  c.epochs = 1;
  c.model.attention_dim = 16;
  c.model.hidden = 16;
  return c;
}

double MaxAbsDiff(const ModelParams &a, const ModelParams &b) {
  double d = 0.0;
  for (const auto &[name, t] : a.tensors) {
    const ad::Tensor &u = b.tensors.at(name);
    for (std::size_t i = 0; i < t.size(); ++i) d = std::max(d, std::abs(t[i] - u[i]));
  }
  return d;
}

TEST(TrainModeTest, NamesAndHeads) {
  for (TrainMode m : {TrainMode::kAttention, TrainMode::kMapping, TrainMode::kTransfer,
                      TrainMode::kTransferMultiMap})
    EXPECT_EQ(ParseTrainMode(TrainModeName(m)), m);
  EXPECT_THROW(ParseTrainMode("fancy"), ConfigError);
  EXPECT_EQ(MapHeadsFor(TrainMode::kAttention), 0);
  EXPECT_EQ(MapHeadsFor(TrainMode::kMapping), 1);
  EXPECT_EQ(MapHeadsFor(TrainMode::kTransfer), 0);
  EXPECT_EQ(MapHeadsFor(TrainMode::kTransferMultiMap), 3);
  EXPECT_TRUE(IsTransfer(TrainMode::kTransfer));
  EXPECT_FALSE(IsTransfer(TrainMode::kMapping));
}

TEST(TrainConfigTest, DefaultWeightsFollowTheMode) {
  auto w = [](TrainMode m) {
    TrainConfig c;
    c.mode = m;
    return c.EffectiveWeights();
  };
  EXPECT_EQ(w(TrainMode::kAttention).alpha(), 1.0);
  EXPECT_EQ(w(TrainMode::kMapping).beta(), 0.5);
  const LossWeights multi = w(TrainMode::kTransferMultiMap);
  EXPECT_EQ(multi.alpha(), 0.5);
  EXPECT_EQ(multi.beta(), 0.2);
  EXPECT_EQ(multi.theta(), 0.2);
  EXPECT_EQ(multi.delta(), 0.1);
}

void ExpectConfigError(const TrainConfig &c, const std::string &field) {
  try {
    c.Validate();
    FAIL() << "expected a ConfigError naming " << field;
  } catch (const ConfigError &e) {
    EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
  }
}

TEST(TrainConfigTest, ValidationNamesTheField) {
  TrainConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.batch_size = 0;
  ExpectConfigError(c, "train.batch_size");
  c = TrainConfig();
  c.adam.learning_rate = -1;
  ExpectConfigError(c, "train.learning_rate");
  c = TrainConfig();
  c.adam.beta2 = 1.0;
  ExpectConfigError(c, "train.beta2");
  c = TrainConfig();
  c.mode = TrainMode::kTransfer;
  ExpectConfigError(c, "train.init_checkpoint");
  c = TrainConfig();
  c.loss_weights = LossWeights(0.5, 0.5, 0.0, 0.0);
  ExpectConfigError(c, "train.loss_weights");
  c.mode = TrainMode::kMapping;
  EXPECT_NO_THROW(c.Validate());
  c.loss_weights = LossWeights(0.5, 0.2, 0.2, 0.1);
  ExpectConfigError(c, "train.loss_weights");
}

TEST(AdamTest, FirstStepMovesByLearningRate) {
  std::map<std::string, ad::Tensor> params{{"w", ad::Tensor({3}, 1.0)}};
  const std::map<std::string, ad::Tensor> grads{{"w", ad::Tensor({3}, 0.0)}};
  ad::Tensor g({3});
  g[0] = 2.0;
  g[1] = -0.5;
  g[2] = 0.0;
  AdamState state;
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  AdamStep(params, {{"w", g}}, state, 1, cfg);
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
  EXPECT_NEAR(params["w"][0], 1.0 - 0.1 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_NEAR(params["w"][1], 1.0 + 0.1 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_EQ(params["w"][2], 1.0);
  EXPECT_EQ(state.step, 1u);
  EXPECT_NEAR(state.m["w"][0], 0.2, 1e-15);
  EXPECT_NEAR(state.v["w"][0], 0.004, 1e-15);
  EXPECT_THROW(AdamStep(params, grads, state, 0, cfg), std::invalid_argument);
}

TEST(AdamTest, SecondStepMatchesHandComputation) {
  std::map<std::string, ad::Tensor> params{{"w", ad::Tensor({1}, 0.0)}};
  AdamState state;
  AdamConfig cfg;
  AdamStep(params, {{"w", ad::Tensor({1}, 1.0)}}, state, 1, cfg);
  AdamStep(params, {{"w", ad::Tensor({1}, 3.0)}}, state, 2, cfg);
  const double m = 0.9 * 0.1 + 0.1 * 3.0, v = 0.999 * 0.001 + 0.001 * 9.0;
  const double m_hat = m / (1 - 0.81), v_hat = v / (1 - 0.999 * 0.999);
  const double first = -0.001 * 1.0 / (1.0 + 1e-8);
  EXPECT_NEAR(params["w"][0], first - 0.001 * m_hat / (std::sqrt(v_hat) + 1e-8), 1e-15);
}

TEST(AdamTest, ZeroLearningRateLeavesParametersUnchanged) {
  TrainConfig c = SmallTrainConfig();
  c.adam.learning_rate = 0.0;
  const auto &ex = SharedExamples();
  const TrainResult r = Train(c, ex, {});
  TrainConfig untrained = c;
  untrained.epochs = 0;
  EXPECT_EQ(r.last.params.tensors, Train(untrained, ex, {}).last.params.tensors);
  EXPECT_EQ(r.step_losses.size(), 3u);
}

TEST(BatchLossTest, PaddingDoesNotChangeTheLoss) {
  const std::vector<Example> ex = SynthExamples(2, 2, 3, 1.7);
  std::mt19937_64 rng(4);
  ModelConfig mc = SmallTrainConfig().model;
  mc.map_heads = 3;
  const ModelParams p = InitModelParams(mc, rng);
  const LossWeights w(0.5, 0.2, 0.2, 0.1);
  auto loss = [&](const std::vector<const Example *> &batch) {
    ad::Tape tape;
    return ComputeBatchLoss(tape, BindParams(tape, p, false), p, batch, w, Mode::kEval,
                            rng)
        .parts;
  };
  std::vector<const Example *> all;
  for (const auto &x : ex) all.push_back(&x);
  const LossParts joint = loss(all);
  double total = 0.0, kws = 0.0, frames = 0.0;
  for (const auto &x : ex) {
    const LossParts one = loss({&x});
    total += one.total * one.frames;
    kws += one.kws * one.frames;
    frames += one.frames;
  }
  EXPECT_EQ(joint.frames, std::size_t(frames));
  EXPECT_NEAR(joint.total, total / frames, 1e-10);
  EXPECT_NEAR(joint.kws, kws / frames, 1e-10);
  EXPECT_NEAR(joint.total,
              0.5 * joint.kws + 0.2 * joint.map_clean + 0.2 * joint.map_noise1 +
                  0.1 * joint.map_noise2,
              1e-12);
}

TEST(BatchLossTest, SmallStepsDescend) {
  const auto &ex = SharedExamples();
  std::mt19937_64 rng(5);
  ModelConfig mc = SmallTrainConfig().model;
  mc.map_heads = 3;
  ModelParams p = InitModelParams(mc, rng);
  const LossWeights w(0.5, 0.2, 0.2, 0.1);
  AdamConfig adam;
  adam.learning_rate = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<const Example *> batch;
    for (int k = 0; k < 4; ++k) batch.push_back(&ex[(trial * 5 + k * 3) % ex.size()]);
    ad::Tape tape;
    BatchLoss before =
        ComputeBatchLoss(tape, BindParams(tape, p, true), p, batch, w, Mode::kEval, rng);
    const auto grads = tape.Backward(before.total);
    ModelParams q = p;
    AdamState state;
    AdamStep(q.tensors, grads, state, 1, adam);
    ad::Tape tape2;
    const double after = ComputeBatchLoss(tape2, BindParams(tape2, q, false), q, batch, w,
                                          Mode::kEval, rng)
                             .parts.total;
    EXPECT_LT(after, before.parts.total) << "batch " << trial;
    p = q;
  }
}

TEST(TrainTest, SameSeedIsBitIdentical) {
  TrainConfig c = SmallTrainConfig(TrainMode::kMapping);
  c.epochs = 2;
  const auto &ex = SharedExamples();
  const std::vector<Example> valid(ex.begin(), ex.begin() + 3);
  const TrainResult a = Train(c, ex, valid), b = Train(c, ex, valid);
  EXPECT_EQ(a.step_losses, b.step_losses);
  EXPECT_EQ(a.last.params.tensors, b.last.params.tensors);
  EXPECT_EQ(a.last.rng_state, b.last.rng_state);
  ASSERT_EQ(a.log.size(), 4u);
  EXPECT_EQ(a.log[1].split, "valid");
  c.seed = 2;
  EXPECT_NE(Train(c, ex, valid).step_losses, a.step_losses);
}

TEST(TrainTest, MaxStepsCapsTraining) {
  TrainConfig c = SmallTrainConfig();
  c.epochs = 5;
  c.max_steps = 4;
  const TrainResult r = Train(c, SharedExamples(), {});
  EXPECT_EQ(r.step_losses.size(), 4u);
  EXPECT_EQ(r.last.optimizer.step, 4u);
}

TEST(TrainTest, BestCheckpointHasLowestValidationLoss) {
  TrainConfig c = SmallTrainConfig();
  c.epochs = 3;
  const auto &ex = SharedExamples();
  const std::vector<Example> valid(ex.begin() + 4, ex.begin() + 8);
  const TrainResult r = Train(c, ex, valid);
  double best = INFINITY;
  for (const auto &m : r.log)
    if (m.split == "valid") best = std::min(best, m.loss.total);
  const LossParts got =
      EvaluateLoss(r.best.params, valid, c.EffectiveWeights(), c.batch_size);
  EXPECT_NEAR(got.total, best, 1e-12);
}

TEST(TrainTest, ExplodingLearningRateIsReportedAsDivergence) {
  TrainConfig c = SmallTrainConfig();
  c.adam.learning_rate = 1e6;
  c.epochs = 50;
  try {
    Train(c, SharedExamples(), {});
    FAIL() << "training with lr 1e6 should diverge";
  } catch (const DivergenceError &e) {
    EXPECT_GE(e.step(), 1);
  }
}

TEST(TrainTest, EmptyTrainingSetIsADataError) {
  EXPECT_THROW(Train(SmallTrainConfig(), {}, {}), DataError);
}

TEST(TrainTest, OverfitsASingleBatch) {
  const std::vector<Example> ex = SynthExamples(4, 4, 7);
  TrainConfig c;
  c.batch_size = 8;
  c.epochs = 200;
  c.adam.learning_rate = 0.003;
  c.model.dropout_keep = 1.0;
  const auto start = std::chrono::steady_clock::now();
  const TrainResult r = Train(c, ex, {});
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const LossParts final_loss =
      EvaluateLoss(r.last.params, ex, c.EffectiveWeights(), c.batch_size);
  EXPECT_LT(final_loss.kws, 0.01);
  EXPECT_LT(seconds, 120.0);
}

TEST(TransferTest, CopiesSharedTensorsAndInitialisesHeads) {
  std::mt19937_64 rng(8);
  TrainConfig base_cfg = SmallTrainConfig();
  ModelConfig mc = base_cfg.model;
  Checkpoint base{InitModelParams(mc, rng), {}, "{}", ""};
  base.params.config.pcen.s = 0.04;
  TrainConfig c = SmallTrainConfig(TrainMode::kTransferMultiMap);
  c.init_checkpoint = "unused";
  const ModelParams p = TransferInit(base, c, rng);
  for (const auto &[name, t] : base.params.tensors) EXPECT_EQ(p.Get(name), t) << name;
  EXPECT_TRUE(p.tensors.count("map_noise2.W"));
  EXPECT_EQ(p.config.map_heads, 3);
  EXPECT_EQ(p.config.pcen.s, 0.04);

  c.model.hidden = 8;
  try {
    TransferInit(base, c, rng);
    FAIL();
  } catch (const ConfigError &e) {
    EXPECT_NE(std::string(e.what()).find("parameter fc.W has shape"), std::string::npos) << e.what();
  }
  c.model.hidden = 16;
  base.params.tensors.erase("fc.W");
  EXPECT_THROW(TransferInit(base, c, rng), ConfigError);
}

TEST(TransferTest, TrainingStartsFromTheBaseCheckpoint) {
  testing::ScratchDir dir;
  TrainConfig base_cfg = SmallTrainConfig();
  base_cfg.max_steps = 2;
  const auto &ex = SharedExamples();
  const TrainResult base = Train(base_cfg, ex, {});
  SaveCheckpoint(base.last, dir / "base.ckpt");
  TrainConfig c = SmallTrainConfig(TrainMode::kTransfer);
  c.init_checkpoint = dir / "base.ckpt";
  c.adam.learning_rate = 0.0;
  const TrainResult r = Train(c, ex, {});
  EXPECT_EQ(r.last.params.tensors, base.last.params.tensors);
  EXPECT_EQ(r.last.optimizer.step, 3u);
}

TEST(LoadExamplesTest, ReadsCorpusManifests) {
  testing::ScratchDir dir;
  CorpusConfig cc;
  cc.keywords = 2;
  cc.fillers = 2;
  cc.eval_keywords = 1;
  cc.eval_fillers = 1;
  cc.noisy_frac = 1.0;
  SynthesizeCorpus(cc, dir.path().string(), false);
  const auto noisy = ReadManifest(dir / "noisy_train.jsonl");
  const auto ex = LoadExamples(noisy, FrameConfig(), 3, 2);
  ASSERT_EQ(ex.size(), 4u);
  for (const auto &x : ex) {
    EXPECT_EQ(x.features.frames(), 98u);
    EXPECT_EQ(x.features.channels(), 6u);
    ASSERT_EQ(x.targets.size(), 3u);
    EXPECT_EQ(x.targets[2].channels(), 1u);
    double ones = 0;
    for (double y : x.labels) ones += y;
    EXPECT_EQ(ones > 0, x.keyword);
  }
  EXPECT_THROW(LoadExamples(ReadManifest(dir / "eval_clean.jsonl"), FrameConfig(), 1),
               DataError);
  FrameConfig wrong;
  wrong.sample_rate = 8000;
  EXPECT_THROW(LoadExamples(noisy, wrong, 0), DataError);
}

TEST(MetricsTest, CsvLayout) {
  testing::ScratchDir dir;
  LossParts l;
  l.total = 0.5;
  l.kws = 0.25;
  WriteMetricsCsv({{1, "train", l}}, dir / "m.csv");
  std::ifstream in(dir / "m.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "epoch,split,total,kws,map_clean,map_noise1,map_noise2");
  EXPECT_EQ(row, "1,train,0.5,0.25,0,0,0");
}

}  // namespace
}  // namespace mckws
