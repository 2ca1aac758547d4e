// src/datagen.cc

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

#include "mckws/datagen.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <tuple>

#include "mckws/errors.h"
#include "mckws/manifest.h"
#include "mckws/parallel.h"
#include "mckws/rng.h"

namespace mckws {

namespace fs = std::filesystem;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double Uniform(std::mt19937_64 &rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t UniformIndex(std::mt19937_64 &rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Raised-cosine fade in and out of `fade` samples.
double Fade(std::size_t i, std::size_t len, std::size_t fade) {
  if (fade == 0) return 1.0;
  const std::size_t edge = std::min(i, len - 1 - i);
  if (edge >= fade) return 1.0;
  return 0.5 - 0.5 * std::cos(std::numbers::pi * edge / fade);
}

void RenderBurstTone(std::vector<double> &out, std::size_t start,
                     std::size_t len, double freq, double amp, double sr) {
  const std::size_t fade = std::min<std::size_t>(len / 2, std::size_t(0.01 * sr));
  double phase = 0.0;
  for (std::size_t i = 0; i < len && start + i < out.size(); ++i) {
    phase += kTwoPi * freq / sr;
    const double v = std::sin(phase) + 0.4 * std::sin(2.0 * phase);
    out[start + i] += amp * Fade(i, len, fade) * v;
  }
}

void RenderNoiseBurst(std::vector<double> &out, std::size_t start,
                      std::size_t len, double center, double amp, double sr,
                      std::mt19937_64 &rng) {
  std::normal_distribution<double> white(0.0, 1.0);
  const double radius = std::exp(-std::numbers::pi * 250.0 / sr);
  const double c1 = 2.0 * radius * std::cos(kTwoPi * center / sr);
  const double c2 = -radius * radius;
  std::vector<double> burst(len);
  double y1 = 0.0, y2 = 0.0, energy = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double y = white(rng) + c1 * y1 + c2 * y2;
    y2 = y1;
    y1 = y;
    burst[i] = y;
    energy += y * y;
  }
  const double rms = std::sqrt(energy / std::max<std::size_t>(len, 1));
  const std::size_t fade = std::min<std::size_t>(len / 2, std::size_t(0.01 * sr));
  for (std::size_t i = 0; i < len && start + i < out.size(); ++i)
    out[start + i] += amp * 0.7 * Fade(i, len, fade) * burst[i] / rms;
}

std::size_t MaxDelay(const ArrayGeometry &g) {
  return g.delays.empty() ? 0 : *std::max_element(g.delays.begin(), g.delays.end());
}

}  // namespace

// ---- geometry / labels ----

void ArrayGeometry::Validate() const {
  if (delays.empty()) throw ConfigError("geometry: no channels");
  if (delays.size() != gains.size())
    throw ConfigError("geometry: delays and gains differ in length");
  for (double g : gains)
    if (!(g > 0.0)) throw ConfigError("geometry: gains must be > 0");
}

ArrayGeometry ArrayGeometry::DefaultSpeaker() {
  return {{0, 3, 5, 8, 4, 2}, {1.0, 0.9, 0.8, 0.85, 0.95, 0.75}};
}

ArrayGeometry ArrayGeometry::DefaultMusic() {
  return {{7, 5, 2, 0, 3, 6}, {0.6, 0.8, 1.0, 0.9, 0.7, 0.5}};
}

const char *LabelName(Label label) {
  return label == Label::kKeyword ? "keyword" : "filler";
}

Label ParseLabel(const std::string &name) {
  if (name == "keyword") return Label::kKeyword;
  if (name == "filler") return Label::kFiller;
  throw DataError("unknown label '" + name + "'");
}

void MixSpec::Validate() const {
  if (!std::isfinite(snr_db)) throw ConfigError("mix.snr_db must be finite");
  if (!(jitter_db >= 0.0)) throw ConfigError("mix.jitter_db must be >= 0");
}

// ---- sources ----

UtteranceRecord SynthKeyword(std::uint64_t seed, const ArrayGeometry &geometry,
                             const SynthConfig &cfg) {
  geometry.Validate();
  std::mt19937_64 rng(seed);
  const double sr = cfg.sample_rate;
  const double warp = Uniform(rng, 0.9, 1.1);
  const double pitch = std::pow(2.0, Uniform(rng, -2.0, 2.0) / 12.0);
  const double gain = Uniform(rng, 0.5, 1.0);

  const std::size_t n = std::size_t(std::lround(cfg.keyword_utterance_seconds * sr));
  const std::size_t seg = std::size_t(std::lround(kKeywordSeconds * warp * sr / 3.0));
  const std::size_t dur = 3 * seg;
  const std::size_t lo = std::size_t(0.1 * sr);
  const std::size_t tail = MaxDelay(geometry) + std::size_t(0.05 * sr);
  if (n < lo + dur + tail)
    throw ConfigError("synth: keyword utterance too short for the prototype");
  const std::size_t start = UniformIndex(rng, lo, n - dur - tail);

  // three chirp segments (start Hz, end Hz), Hann envelope per segment
  static constexpr double kSweeps[3][2] = {{500, 1000}, {1600, 1100}, {800, 1800}};
  std::vector<double> source(n, 0.0);
  double phase = 0.0;
  for (int s = 0; s < 3; ++s) {
    for (std::size_t i = 0; i < seg; ++i) {
      const double tau = double(i) / seg;
      const double f = pitch * (kSweeps[s][0] + (kSweeps[s][1] - kSweeps[s][0]) * tau);
      phase += kTwoPi * f / sr;
      const double env = std::pow(std::sin(std::numbers::pi * tau), 2);
      source[start + s * seg + i] =
          0.5 * gain * env * (std::sin(phase) + 0.5 * std::sin(2.0 * phase));
    }
  }

  UtteranceRecord rec;
  rec.label = Label::kKeyword;
  rec.keyword_end_sample = start + dur;
  rec.waveforms = RenderToArray(source, geometry, int(sr));
  AddSensorNoise(rec.waveforms, cfg.sensor_snr_db, rng);
  return rec;
}

UtteranceRecord SynthFiller(std::uint64_t seed, const ArrayGeometry &geometry,
                            double seconds, const SynthConfig &cfg) {
  geometry.Validate();
  std::mt19937_64 rng(seed);
  const double sr = cfg.sample_rate;
  const std::size_t n = std::size_t(std::lround(seconds * sr));
  const double gain = Uniform(rng, 0.5, 1.0);
  std::vector<double> source(n, 0.0);
  std::size_t pos = std::size_t(Uniform(rng, 0.0, 0.1) * sr);
  while (pos < n) {
    const std::size_t len = std::size_t(Uniform(rng, 0.06, 0.2) * sr);
    const double amp = 0.5 * gain * Uniform(rng, 0.3, 1.0);
    if (Uniform(rng, 0.0, 1.0) < 0.6)
      RenderBurstTone(source, pos, len, Uniform(rng, 250.0, 2500.0), amp, sr);
    else
      RenderNoiseBurst(source, pos, len, Uniform(rng, 300.0, 3000.0), amp, sr, rng);
    pos += len + std::size_t(Uniform(rng, 0.0, 0.08) * sr);
  }
  UtteranceRecord rec;
  rec.label = Label::kFiller;
  rec.waveforms = RenderToArray(source, geometry, int(sr));
  AddSensorNoise(rec.waveforms, cfg.sensor_snr_db, rng);
  return rec;
}

std::vector<double> SynthMusic(std::uint64_t seed, std::size_t samples,
                               double sr) {
  std::mt19937_64 rng(seed);
  std::vector<double> tones(samples, 0.0);
  static constexpr int kScale[] = {0, 2, 4, 7, 9};
  for (int voice = 0; voice < 3; ++voice) {
    const double am_rate = Uniform(rng, 0.5, 3.0);
    const double am_phase = Uniform(rng, 0.0, kTwoPi);
    const double level = Uniform(rng, 0.5, 1.0);
    std::size_t pos = 0;
    while (pos < samples) {
      const std::size_t len = std::size_t(Uniform(rng, 0.2, 0.6) * sr);
      const int step = kScale[UniformIndex(rng, 0, 4)] + 12 * int(UniformIndex(rng, 0, 2));
      const double freq = 220.0 * std::pow(2.0, step / 12.0);
      const std::size_t fade = std::min<std::size_t>(len / 2, std::size_t(0.01 * sr));
      double phase = 0.0;
      for (std::size_t i = 0; i < len && pos + i < samples; ++i) {
        const double t = double(pos + i) / sr;
        const double vib = 1.0 + 0.005 * std::sin(kTwoPi * 5.0 * t);
        phase += kTwoPi * freq * vib / sr;
        const double am = 1.0 + 0.3 * std::sin(kTwoPi * am_rate * t + am_phase);
        const double v = std::sin(phase) + 0.5 * std::sin(2.0 * phase) +
                         0.25 * std::sin(3.0 * phase);
        tones[pos + i] += level * am * Fade(i, len, fade) * v;
      }
      pos += len;
    }
  }
  // pink noise (Kellet's economy filter) 10 dB below the tones
  std::normal_distribution<double> white(0.0, 1.0);
  std::vector<double> pink(samples);
  double b0 = 0, b1 = 0, b2 = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double w = white(rng);
    b0 = 0.99765 * b0 + w * 0.0990460;
    b1 = 0.96300 * b1 + w * 0.2965164;
    b2 = 0.57000 * b2 + w * 1.0526913;
    pink[i] = b0 + b1 + b2 + w * 0.1848;
  }
  const double pt = Power(tones), pp = Power(pink);
  const double pink_scale = pp > 0 ? std::sqrt(0.1 * pt / pp) : 0.0;
  std::vector<double> out(samples);
  for (std::size_t i = 0; i < samples; ++i) out[i] = tones[i] + pink_scale * pink[i];
  const double p = Power(out);
  if (p > 0)
    for (double &v : out) v *= 0.1 / std::sqrt(p);
  return out;
}

Waveform RenderToArray(std::span<const double> source,
                       const ArrayGeometry &geometry, int sample_rate) {
  geometry.Validate();
  Waveform w;
  w.sample_rate = sample_rate;
  w.channels.assign(geometry.channels(), std::vector<double>(source.size(), 0.0));
  for (std::size_t k = 0; k < geometry.channels(); ++k) {
    const std::size_t d = geometry.delays[k];
    for (std::size_t n = d; n < source.size(); ++n)
      w.channels[k][n] = geometry.gains[k] * source[n - d];
  }
  return w;
}

void AddSensorNoise(Waveform &wave, double snr_db, std::mt19937_64 &rng) {
  std::normal_distribution<double> white(0.0, 1.0);
  for (auto &ch : wave.channels) {
    const double p = Power(ch);
    if (p <= 0.0) continue;
    const double sigma = std::sqrt(p / std::pow(10.0, snr_db / 10.0));
    for (double &v : ch) v += sigma * white(rng);
  }
}

std::vector<double> DelayAndSum(const Waveform &wave,
                                const ArrayGeometry &geometry) {
  geometry.Validate();
  if (geometry.channels() != wave.num_channels())
    throw ConfigError("DelayAndSum: geometry has " +
                      std::to_string(geometry.channels()) +
                      " channels, waveform has " +
                      std::to_string(wave.num_channels()));
  const std::size_t n = wave.num_samples();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < geometry.channels(); ++k) {
      const std::size_t j = i + geometry.delays[k];
      if (j >= n) continue;
      acc += wave.channels[k][j] / geometry.gains[k];
      ++used;
    }
    out[i] = used ? acc / used : 0.0;
  }
  return out;
}

// ---- mixing ----

double Power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / x.size();
}

double SnrDb(std::span<const double> signal, std::span<const double> noise) {
  return 10.0 * std::log10(Power(signal) / Power(noise));
}

MixResult MixAtSnr(std::span<const double> signal,
                   std::span<const double> noise, double snr_db,
                   std::size_t offset) {
  if (signal.empty()) throw DataError("MixAtSnr: empty signal");
  if (offset + signal.size() > noise.size())
    throw DataError("MixAtSnr: noise (" + std::to_string(noise.size()) +
                    " samples) shorter than signal (" +
                    std::to_string(signal.size()) + ") at offset " +
                    std::to_string(offset));
  const auto crop = noise.subspan(offset, signal.size());
  const double ps = Power(signal), pn = Power(crop);
  if (ps <= 0.0) throw DataError("MixAtSnr: signal has zero power");
  if (pn <= 0.0) throw DataError("MixAtSnr: noise has zero power");
  MixResult r;
  r.scale = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  r.mixed.resize(signal.size());
  r.scaled_noise.resize(signal.size());
  for (std::size_t i = 0; i < signal.size(); ++i) {
    r.scaled_noise[i] = r.scale * crop[i];
    r.mixed[i] = signal[i] + r.scaled_noise[i];
  }
  return r;
}

MixResult MixAtSnr(std::span<const double> signal,
                   std::span<const double> noise, const MixSpec &spec,
                   std::mt19937_64 &rng) {
  spec.Validate();
  if (noise.size() < signal.size())
    throw DataError("MixAtSnr: noise shorter than signal");
  const std::size_t offset = UniformIndex(rng, 0, noise.size() - signal.size());
  const double snr =
      spec.jitter_db > 0 ? spec.snr_db + Uniform(rng, -spec.jitter_db, spec.jitter_db)
                         : spec.snr_db;
  return MixAtSnr(signal, noise, snr, offset);
}

Waveform MixIntoRecord(UtteranceRecord &record, const Waveform &noise,
                       const MixSpec &spec, std::mt19937_64 &rng) {
  spec.Validate();
  const std::size_t len = record.waveforms.num_samples();
  if (noise.num_channels() != record.waveforms.num_channels())
    throw DataError("MixIntoRecord: noise has " +
                    std::to_string(noise.num_channels()) + " channels, record " +
                    std::to_string(record.waveforms.num_channels()));
  if (noise.num_samples() < len)
    throw DataError("MixIntoRecord: noise shorter than record " + record.id);
  const std::size_t offset = UniformIndex(rng, 0, noise.num_samples() - len);
  const double snr =
      spec.jitter_db > 0 ? spec.snr_db + Uniform(rng, -spec.jitter_db, spec.jitter_db)
                         : spec.snr_db;
  Waveform cropped;
  cropped.sample_rate = noise.sample_rate;
  for (std::size_t c = 0; c < noise.num_channels(); ++c) {
    const std::vector<double> &src = noise.channels[c];
    cropped.channels.emplace_back(src.begin() + offset, src.begin() + offset + len);
    MixResult r = MixAtSnr(record.waveforms.channels[c], cropped.channels[c], snr);
    record.waveforms.channels[c] = std::move(r.mixed);
  }
  record.snr_db = snr;
  return cropped;
}

UtteranceRecord MakeMultitarget(const UtteranceRecord &record,
                                const Waveform &music,
                                const ArrayGeometry &geometry,
                                const MultitargetConfig &cfg,
                                std::mt19937_64 &rng) {
  if (geometry.channels() == 0)
    throw ConfigError("MakeMultitarget: missing array geometry");
  geometry.Validate();
  if (geometry.channels() != record.waveforms.num_channels())
    throw ConfigError("MakeMultitarget: geometry does not match the record's " +
                      std::to_string(record.waveforms.num_channels()) +
                      " channels");
  UtteranceRecord out = record;
  out.target_clean = DelayAndSum(record.waveforms, geometry);
  const Waveform cropped = MixIntoRecord(out, music, cfg.input, rng);
  const std::vector<double> d = DelayAndSum(cropped, geometry);
  out.target_noise1 = MixAtSnr(out.target_clean, d, cfg.target2_snr_db).mixed;
  out.target_noise2 = MixAtSnr(out.target_clean, d, cfg.target3_snr_db).mixed;
  return out;
}

// ---- corpus ----

void CorpusConfig::Validate() const {
  if (keywords + fillers == 0)
    throw ConfigError("corpus: --keywords and --fillers are both 0");
  if (!(noisy_frac >= 0.0 && noisy_frac <= 1.0))
    throw ConfigError("corpus.noisy_frac must lie in [0,1]");
  if (!(valid_frac >= 0.0 && valid_frac < 1.0))
    throw ConfigError("corpus.valid_frac must lie in [0,1)");
  if (!(filler_seconds >= 0.1)) throw ConfigError("corpus.filler_seconds must be >= 0.1");
  if (!(jitter_db >= 0.0)) throw ConfigError("corpus.jitter_db must be >= 0");
  for (double s : {snr_train, snr_eval_hard, snr_eval_easy})
    if (!std::isfinite(s)) throw ConfigError("corpus SNRs must be finite");
  speaker.Validate();
  music.Validate();
  if (speaker.channels() != music.channels())
    throw ConfigError("corpus: speaker and music geometries differ in channels");
  if (threads == 0) throw ConfigError("corpus.threads must be >= 1");
}

namespace {

// Scales everything by a common factor when the joint peak exceeds 0.9 so
// 16-bit output never clips; SNRs are unchanged.
double PeakScale(std::initializer_list<const std::vector<double> *> parts) {
  double peak = 0.0;
  for (const auto *p : parts)
    for (double v : *p) peak = std::max(peak, std::abs(v));
  return peak > 0.9 ? 0.9 / peak : 1.0;
}

void WriteScaled(const fs::path &path, std::vector<std::vector<double>> chans,
                 double scale, int sr) {
  Waveform w;
  w.sample_rate = sr;
  w.channels = std::move(chans);
  for (auto &ch : w.channels)
    for (double &v : ch) v *= scale;
  WriteWav(path.string(), w);
}

struct CorpusWriter {
  const CorpusConfig &cfg;
  fs::path root;
  int sr;

  std::string Rel(const fs::path &p) const {
    return p.lexically_relative(root).generic_string();
  }

  // Input WAV (peak-normalised) plus whichever targets are present.
  ManifestEntry Write(const UtteranceRecord &rec, const std::string &subdir,
                      const std::string &split) const {
    const fs::path dir = root / "wav" / subdir;
    ManifestEntry e;
    e.id = rec.id;
    e.label = rec.label;
    e.keyword_end_sample = rec.keyword_end_sample;
    e.snr_db = rec.snr_db;
    e.split = split;

    double peak = 0.0;
    for (const auto &ch : rec.waveforms.channels)
      for (double v : ch) peak = std::max(peak, std::abs(v));
    const double in_scale = peak > 0.9 ? 0.9 / peak : 1.0;
    const fs::path wav = dir / (rec.id + ".wav");
    WriteScaled(wav, rec.waveforms.channels, in_scale, sr);
    e.wav = Rel(wav);

    if (!rec.target_clean.empty()) {
      const double t_scale = PeakScale(
          {&rec.target_clean, &rec.target_noise1, &rec.target_noise2});
      auto put = [&](const std::string &key, const std::vector<double> &x) {
        if (x.empty()) return;
        const fs::path p = dir / (rec.id + "." + key + ".wav");
        WriteScaled(p, {x}, t_scale, sr);
        e.targets[key] = Rel(p);
      };
      put("clean", rec.target_clean);
      put("noise1", rec.target_noise1);
      put("noise2", rec.target_noise2);
    }
    return e;
  }
};

// Fraction test on a stable hash of (seed, tag, id).
bool HashFraction(std::uint64_t seed, std::uint64_t tag, const std::string &id,
                  double frac) {
  const std::uint64_t h = DeriveSeed(DeriveSeed(seed, tag), HashString(id));
  return double(h >> 11) / double(1ULL << 53) < frac;
}

constexpr std::uint64_t kTagSource = 1, kTagSplit = 2, kTagNoisy = 3,
                        kTagMusic = 4, kTagMix = 5, kTagHard = 6, kTagEasy = 7;

std::string MakeId(const char *prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%06zu", prefix, i);
  return buf;
}

}  // namespace

void SynthesizeCorpus(const CorpusConfig &cfg, const std::string &out_dir,
                      bool force) {
  cfg.Validate();
  const fs::path root(out_dir);
  static const char *const kManifests[] = {"train.jsonl", "noisy_train.jsonl",
                                           "eval_clean.jsonl", "eval_hard.jsonl",
                                           "eval_easy.jsonl"};
  if (fs::exists(root) && !fs::is_empty(root)) {
    if (!force)
      throw ConfigError("output directory " + out_dir +
                        " exists and is not empty (use --force)");
    fs::remove_all(root / "wav");
    for (const char *m : kManifests) fs::remove(root / m);
  }
  for (const char *sub : {"train", "noisy", "eval_clean", "eval_hard", "eval_easy"})
    fs::create_directories(root / "wav" / sub);

  const int sr = int(cfg.synth.sample_rate);
  const CorpusWriter writer{cfg, root, sr};
  const std::size_t pad = std::size_t(0.5 * cfg.synth.sample_rate);

  auto source = [&](const std::string &id, bool keyword, double filler_seconds) {
    const std::uint64_t seed = DeriveSeed(DeriveSeed(cfg.seed, kTagSource), HashString(id));
    UtteranceRecord rec = keyword ? SynthKeyword(seed, cfg.speaker, cfg.synth)
                                  : SynthFiller(seed, cfg.speaker, filler_seconds, cfg.synth);
    rec.id = id;
    return rec;
  };
  auto music_for = [&](const std::string &id, std::uint64_t tag, std::size_t len) {
    const std::uint64_t seed = DeriveSeed(DeriveSeed(cfg.seed, tag), HashString(id));
    const std::vector<double> m = SynthMusic(seed, len + pad, cfg.synth.sample_rate);
    return RenderToArray(m, cfg.music, sr);
  };
  auto mix_rng = [&](const std::string &id, std::uint64_t tag) {
    return std::mt19937_64(DeriveSeed(DeriveSeed(cfg.seed, kTagMix ^ (tag << 8)),
                                      HashString(id)));
  };

  // training corpus plus noisy multi-target copies
  const std::size_t n_train = cfg.keywords + cfg.fillers;
  std::vector<ManifestEntry> train(n_train);
  std::vector<std::optional<ManifestEntry>> noisy(n_train);
  ParallelFor(n_train, cfg.threads, [&](std::size_t i) {
    const bool kw = i < cfg.keywords;
    const std::string id = kw ? MakeId("kw", i) : MakeId("fl", i - cfg.keywords);
    UtteranceRecord rec = source(id, kw, cfg.filler_seconds);
    rec.target_clean = DelayAndSum(rec.waveforms, cfg.speaker);
    const std::string split =
        HashFraction(cfg.seed, kTagSplit, id, cfg.valid_frac) ? "valid" : "train";
    train[i] = writer.Write(rec, "train", split);
    if (HashFraction(cfg.seed, kTagNoisy, id, cfg.noisy_frac)) {
      UtteranceRecord clean = rec;
      clean.target_clean.clear();
      const Waveform music = music_for(id, kTagMusic, rec.waveforms.num_samples());
      std::mt19937_64 rng = mix_rng(id, kTagNoisy);
      MultitargetConfig mt;
      mt.input = MixSpec{cfg.snr_train, cfg.jitter_db};
      UtteranceRecord n = MakeMultitarget(clean, music, cfg.speaker, mt, rng);
      n.id = id + "_n";
      noisy[i] = writer.Write(n, "noisy", split);
    }
  });

  // evaluation: clean, hard-noisy and easy-noisy versions of fresh records
  const std::size_t n_eval = cfg.eval_keywords + cfg.eval_fillers;
  std::vector<ManifestEntry> eval_clean(n_eval), eval_hard(n_eval), eval_easy(n_eval);
  ParallelFor(n_eval, cfg.threads, [&](std::size_t i) {
    const bool kw = i < cfg.eval_keywords;
    const std::string id = kw ? MakeId("ekw", i) : MakeId("efl", i - cfg.eval_keywords);
    const UtteranceRecord rec = source(id, kw, cfg.filler_seconds);
    eval_clean[i] = writer.Write(rec, "eval_clean", "eval");
    const std::size_t len = rec.waveforms.num_samples();
    for (auto [tag, snr, out, sub] :
         {std::tuple{kTagHard, cfg.snr_eval_hard, &eval_hard, "eval_hard"},
          std::tuple{kTagEasy, cfg.snr_eval_easy, &eval_easy, "eval_easy"}}) {
      UtteranceRecord noisy_rec = rec;
      std::mt19937_64 rng = mix_rng(id, tag);
      MixIntoRecord(noisy_rec, music_for(id, kTagMusic ^ (tag << 8), len),
                    MixSpec{snr, cfg.jitter_db}, rng);
      noisy_rec.id = id + (tag == kTagHard ? "_hard" : "_easy");
      (*out)[i] = writer.Write(noisy_rec, sub, "eval");
    }
  });

  std::vector<ManifestEntry> noisy_entries;
  for (auto &e : noisy)
    if (e) noisy_entries.push_back(*e);
  WriteManifest(train, (root / "train.jsonl").string());
  WriteManifest(noisy_entries, (root / "noisy_train.jsonl").string());
  WriteManifest(eval_clean, (root / "eval_clean.jsonl").string());
  WriteManifest(eval_hard, (root / "eval_hard.jsonl").string());
  WriteManifest(eval_easy, (root / "eval_easy.jsonl").string());
}

}  // namespace mckws
