// src/features.cc

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
#include <complex>
#include <numbers>
#include <string>

#include <unsupported/Eigen/FFT>

#include "mckws/errors.h"

namespace mckws {

std::size_t FrameConfig::window_samples() const {
  return static_cast<std::size_t>(std::lround(window * sample_rate));
}

std::size_t FrameConfig::shift_samples() const {
  return static_cast<std::size_t>(std::lround(shift * sample_rate));
}

std::size_t FrameConfig::fft_size() const {
  std::size_t n = 1;
  while (n < window_samples()) n <<= 1;
  return n;
}

void FrameConfig::Validate() const {
  if (!(sample_rate > 0)) throw ConfigError("features.sample_rate must be > 0");
  if (!(shift > 0)) throw ConfigError("features.shift must be > 0");
  if (!(window >= shift)) throw ConfigError("features.window must be >= shift");
  if (n_mels < 1) throw ConfigError("features.n_mels must be >= 1");
  if (shift_samples() == 0)
    throw ConfigError("features.shift is shorter than one sample");
}

FeatureTensor FeatureTensor::Channel(std::size_t c) const {
  FeatureTensor out(frames_, 1, bins_);
  for (std::size_t t = 0; t < frames_; ++t)
    for (std::size_t b = 0; b < bins_; ++b) out.at(t, 0, b) = at(t, c, b);
  return out;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank(const FrameConfig &cfg) {
  cfg.Validate();
  const std::size_t n_fft = cfg.fft_size();
  const std::size_t n_bins = n_fft / 2 + 1;
  const double nyquist = cfg.sample_rate / 2.0;
  const double mel_hi = HzToMel(nyquist);
  const int m = cfg.n_mels;

  std::vector<double> edges(m + 2);
  for (int i = 0; i < m + 2; ++i) edges[i] = MelToHz(mel_hi * i / (m + 1));

  for (int i = 0; i < m; ++i) {
    const double lo = edges[i], mid = edges[i + 1], hi = edges[i + 2];
    Filter f;
    std::vector<double> w(n_bins, 0.0);
    double area = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double hz = k * cfg.sample_rate / n_fft;
      double v = 0.0;
      if (hz > lo && hz <= mid) v = (hz - lo) / (mid - lo);
      else if (hz > mid && hz < hi) v = (hi - hz) / (hi - mid);
      w[k] = v;
      area += v;
    }
    if (area <= 0.0)
      throw ConfigError("features.n_mels: filter " + std::to_string(i) +
                        " covers no FFT bin; lower n_mels or lengthen window");
    std::size_t first = 0;
    while (w[first] == 0.0) ++first;
    std::size_t last = n_bins;
    while (w[last - 1] == 0.0) --last;
    f.first = first;
    for (std::size_t k = first; k < last; ++k) f.weights.push_back(w[k] / area);
    filters_.push_back(std::move(f));
    centers_.push_back(mid);
  }
}

void MelFilterbank::Apply(const std::vector<double> &power, double *out) const {
  for (std::size_t i = 0; i < filters_.size(); ++i) {
    const Filter &f = filters_[i];
    double acc = 0.0;
    for (std::size_t k = 0; k < f.weights.size(); ++k)
      acc += f.weights[k] * power[f.first + k];
    out[i] = acc;
  }
}

FeatureTensor FrameAndFilterbank(const Waveform &pcm, const FrameConfig &cfg) {
  cfg.Validate();
  if (pcm.channels.empty()) throw DataError("FrameAndFilterbank: no channels");
  const std::size_t n = pcm.channels[0].size();
  for (std::size_t c = 1; c < pcm.channels.size(); ++c)
    if (pcm.channels[c].size() != n)
      throw DataError("FrameAndFilterbank: channel " + std::to_string(c) +
                      " has " + std::to_string(pcm.channels[c].size()) +
                      " samples, channel 0 has " + std::to_string(n));
  const std::size_t win = cfg.window_samples();
  const std::size_t hop = cfg.shift_samples();
  if (n < win)
    throw DataError("FrameAndFilterbank: " + std::to_string(n) +
                    " samples is shorter than one window (" +
                    std::to_string(win) + ")");

  const std::size_t frames = (n - win) / hop + 1;
  const std::size_t n_fft = cfg.fft_size();
  const MelFilterbank bank(cfg);
  FeatureTensor out(frames, pcm.channels.size(), bank.num_bins());

  std::vector<double> hann(win);
  for (std::size_t i = 0; i < win; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (win - 1));

  Eigen::FFT<double> fft;
  std::vector<double> frame(n_fft, 0.0);
  std::vector<std::complex<double>> spectrum;
  std::vector<double> power(n_fft / 2 + 1);
  for (std::size_t c = 0; c < pcm.channels.size(); ++c) {
    const std::vector<double> &x = pcm.channels[c];
    for (std::size_t t = 0; t < frames; ++t) {
      const std::size_t start = t * hop;
      for (std::size_t i = 0; i < win; ++i) frame[i] = x[start + i] * hann[i];
      fft.fwd(spectrum, frame);
      for (std::size_t k = 0; k < power.size(); ++k) power[k] = std::norm(spectrum[k]);
      bank.Apply(power, &out.at(t, c, 0));
    }
  }
  return out;
}

void PcenParams::Validate() const {
  if (!(s > 0.0 && s < 1.0)) throw ConfigError("pcen.s must lie in (0,1)");
  if (!(g > 0.0)) throw ConfigError("pcen.g must be > 0");
  if (!(d >= 0.0)) throw ConfigError("pcen.d must be >= 0");
  if (!(r > 0.0 && r <= 1.0)) throw ConfigError("pcen.r must lie in (0,1]");
  if (!(eps > 0.0)) throw ConfigError("pcen.eps must be > 0");
}

FeatureTensor PcenSmoother(const FeatureTensor &fb, double s) {
  FeatureTensor m(fb.frames(), fb.channels(), fb.bins());
  if (fb.frames() == 0) return m;
  const std::size_t row = fb.channels() * fb.bins();
  const std::vector<double> &e = fb.values();
  std::vector<double> &mv = m.values();
  for (std::size_t i = 0; i < row; ++i) mv[i] = e[i];
  for (std::size_t t = 1; t < fb.frames(); ++t)
    for (std::size_t i = 0; i < row; ++i)
      mv[t * row + i] = (1.0 - s) * mv[(t - 1) * row + i] + s * e[t * row + i];
  return m;
}

FeatureTensor Pcen(const FeatureTensor &fb, const PcenParams &p) {
  p.Validate();
  const std::vector<double> g(fb.bins(), p.g), d(fb.bins(), p.d),
      r(fb.bins(), p.r);
  return PcenPerBin(fb, p, g, d, r);
}

FeatureTensor PcenPerBin(const FeatureTensor &fb, const PcenParams &fixed,
                         std::span<const double> g, std::span<const double> d,
                         std::span<const double> r) {
  const std::size_t bins = fb.bins();
  if (g.size() != bins || d.size() != bins || r.size() != bins)
    throw DataError("PcenPerBin: parameter vectors must have one value per bin");
  for (double v : fb.values())
    if (v < 0.0) throw DataError("Pcen: negative filterbank energy");
  const FeatureTensor m = PcenSmoother(fb, fixed.s);
  FeatureTensor out(fb.frames(), fb.channels(), bins);
  std::vector<double> offset(bins);
  for (std::size_t b = 0; b < bins; ++b) offset[b] = std::pow(d[b], r[b]);
  for (std::size_t i = 0; i < out.values().size(); ++i) {
    const std::size_t b = i % bins;
    const double e = fb.values()[i];
    const double norm = e / std::pow(fixed.eps + m.values()[i], g[b]);
    out.values()[i] = std::pow(norm + d[b], r[b]) - offset[b];
  }
  return out;
}

}  // namespace mckws
