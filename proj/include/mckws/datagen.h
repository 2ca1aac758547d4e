// mckws/datagen.h

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

#ifndef MCKWS_DATAGEN_H_
#define MCKWS_DATAGEN_H_

// Synthetic multi-channel keyword corpus: keyword and filler sources rendered
// onto a simulated microphone array, SNR-exact noise mixing and the
// multi-target (clean, +5 dB, +10 dB) mapping-target construction.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mckws/wav.h"

namespace mckws {

// Integer per-channel delays (samples) and linear gains of a point source.
struct ArrayGeometry {
  std::vector<std::size_t> delays;
  std::vector<double> gains;

  std::size_t channels() const { return delays.size(); }
  void Validate() const;

  static ArrayGeometry DefaultSpeaker();
  static ArrayGeometry DefaultMusic();
};

enum class Label { kKeyword, kFiller };

const char *LabelName(Label label);
Label ParseLabel(const std::string &name);

struct UtteranceRecord {
  std::string id;
  Waveform waveforms;
  Label label = Label::kFiller;
  std::optional<std::size_t> keyword_end_sample;
  // Single-channel mapping targets; empty when absent.
  std::vector<double> target_clean;
  std::vector<double> target_noise1;
  std::vector<double> target_noise2;
  std::optional<double> snr_db;  // applied mixing SNR, if any
};

struct MixSpec {
  double snr_db = -10.0;
  double jitter_db = 0.0;  // uniform half-range added to snr_db

  void Validate() const;
};

struct SynthConfig {
  double sample_rate = 16000.0;
  double keyword_utterance_seconds = 1.0;
  double sensor_snr_db = 40.0;
};

// Length of the undistorted keyword prototype.
inline constexpr double kKeywordSeconds = 0.6;

/// Keyword utterance: the three-segment chirp prototype with seed-dependent
/// duration warp (+-10%), pitch shift (+-2 semitones) and gain [0.5, 1],
/// rendered to every channel of `geometry` plus independent sensor noise.
UtteranceRecord SynthKeyword(std::uint64_t seed, const ArrayGeometry &geometry,
                             const SynthConfig &cfg = {});

/// Filler utterance of `seconds`: steady tone bursts and band-noise bursts,
/// never a frequency sweep, so the keyword prototype cannot occur.
UtteranceRecord SynthFiller(std::uint64_t seed, const ArrayGeometry &geometry,
                            double seconds, const SynthConfig &cfg = {});

/// Music-like noise: slowly modulated harmonic note sequences plus pink noise.
std::vector<double> SynthMusic(std::uint64_t seed, std::size_t samples,
                               double sample_rate);

/// Source rendered on the array: channel k is gains[k] * s[n - delays[k]].
Waveform RenderToArray(std::span<const double> source,
                       const ArrayGeometry &geometry, int sample_rate);

/// Adds white Gaussian noise to each channel, `snr_db` below that channel's
/// power.
void AddSensorNoise(Waveform &wave, double snr_db, std::mt19937_64 &rng);

/// Oracle single-channel conversion: undoes the known delays and gains and
/// averages the channels.
std::vector<double> DelayAndSum(const Waveform &wave,
                                const ArrayGeometry &geometry);

double Power(std::span<const double> x);
double SnrDb(std::span<const double> signal, std::span<const double> noise);

struct MixResult {
  std::vector<double> mixed;
  std::vector<double> scaled_noise;  // the noise component actually added
  double scale = 1.0;
};

/// signal + scale * noise[offset, offset + len) where scale sets the SNR over
/// the signal extent to exactly snr_db. Throws DataError on zero-power signal
/// or noise, or when the noise is too short.
MixResult MixAtSnr(std::span<const double> signal,
                   std::span<const double> noise, double snr_db,
                   std::size_t offset = 0);

/// Random crop offset and SNR jitter drawn from `rng`.
MixResult MixAtSnr(std::span<const double> signal,
                   std::span<const double> noise, const MixSpec &spec,
                   std::mt19937_64 &rng);

/// Mixes a multi-channel noise rendering into every channel of `record` at
/// the same SNR per channel, with one shared crop offset. Returns the
/// cropped, unscaled noise rendering.
Waveform MixIntoRecord(UtteranceRecord &record, const Waveform &noise,
                       const MixSpec &spec, std::mt19937_64 &rng);

struct MultitargetConfig {
  MixSpec input{-10.0, 0.0};
  double target2_snr_db = 5.0;
  double target3_snr_db = 10.0;
};

/// Noisy input plus clean, +5 dB and +10 dB single-channel targets:
///   input  = clean channels + music (per channel, input SNR)
///   target1 = DelayAndSum(clean channels)
///   d       = DelayAndSum(cropped music rendering)
///   target2 = target1 + d at +5 dB, target3 = target1 + d at +10 dB.
/// `music` is the music rendered on the array (at least as long as the
/// record). Throws ConfigError when `geometry` is empty or does not match
/// the record's channel count.
UtteranceRecord MakeMultitarget(const UtteranceRecord &record,
                                const Waveform &music,
                                const ArrayGeometry &geometry,
                                const MultitargetConfig &cfg,
                                std::mt19937_64 &rng);

// ---- on-disk corpus ----

struct CorpusConfig {
  std::size_t keywords = 2000;
  std::size_t fillers = 2000;
  std::size_t eval_keywords = 200;
  std::size_t eval_fillers = 200;
  double noisy_frac = 0.5;
  std::uint64_t seed = 1;
  double snr_train = -10.0;
  double snr_eval_hard = -20.0;
  double snr_eval_easy = -18.0;
  double jitter_db = 0.0;
  double filler_seconds = 1.0;
  double valid_frac = 0.1;
  SynthConfig synth;
  ArrayGeometry speaker = ArrayGeometry::DefaultSpeaker();
  ArrayGeometry music = ArrayGeometry::DefaultMusic();
  unsigned threads = 1;

  void Validate() const;
};

/// Writes WAVs and the manifests train.jsonl (split train/valid),
/// noisy_train.jsonl, eval_clean.jsonl, eval_hard.jsonl and eval_easy.jsonl
/// under `out_dir`. Existing non-empty directories need `force`.
void SynthesizeCorpus(const CorpusConfig &cfg, const std::string &out_dir,
                      bool force);

}  // namespace mckws

#endif  // MCKWS_DATAGEN_H_
