// mckws/features.h

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

#ifndef MCKWS_FEATURES_H_
#define MCKWS_FEATURES_H_

#include <cstddef>
#include <span>
#include <vector>

#include "mckws/wav.h"

namespace mckws {

struct FrameConfig {
  double sample_rate = 16000.0;
  double window = 0.025;  // seconds
  double shift = 0.010;   // seconds
  int n_mels = 40;

  std::size_t window_samples() const;
  std::size_t shift_samples() const;
  // Smallest power of two holding one window.
  std::size_t fft_size() const;
  // Throws ConfigError naming the violated constraint.
  void Validate() const;
};

// Frames x channels x bins, row-major.
class FeatureTensor {
 public:
  FeatureTensor() = default;
  FeatureTensor(std::size_t frames, std::size_t channels, std::size_t bins,
                double fill = 0.0)
      : frames_(frames), channels_(channels), bins_(bins),
        values_(frames * channels * bins, fill) {}

  std::size_t frames() const { return frames_; }
  std::size_t channels() const { return channels_; }
  std::size_t bins() const { return bins_; }

  double &at(std::size_t t, std::size_t c, std::size_t b) {
    return values_[(t * channels_ + c) * bins_ + b];
  }
  double at(std::size_t t, std::size_t c, std::size_t b) const {
    return values_[(t * channels_ + c) * bins_ + b];
  }
  std::vector<double> &values() { return values_; }
  const std::vector<double> &values() const { return values_; }

  // Single channel `c` as a frames x 1 x bins tensor.
  FeatureTensor Channel(std::size_t c) const;

  bool operator==(const FeatureTensor &) const = default;

 private:
  std::size_t frames_ = 0, channels_ = 0, bins_ = 0;
  std::vector<double> values_;
};

// HTK-style mel filterbank: triangles evenly spaced on the mel scale from 0 Hz
// to Nyquist, each normalised to unit area over the FFT bins it covers.
class MelFilterbank {
 public:
  explicit MelFilterbank(const FrameConfig &cfg);

  // Weighted sums of a power spectrum of fft_size/2 + 1 bins.
  void Apply(const std::vector<double> &power, double *out) const;
  const std::vector<double> &center_frequencies() const { return centers_; }
  std::size_t num_bins() const { return centers_.size(); }

 private:
  struct Filter {
    std::size_t first = 0;
    std::vector<double> weights;
  };
  std::vector<Filter> filters_;
  std::vector<double> centers_;
};

double HzToMel(double hz);
double MelToHz(double mel);

/// Hann-windowed power spectra of each frame reduced by the mel filterbank.
/// Produces floor((N - window) / shift) + 1 frames per channel, where N is the
/// common channel length. Throws DataError on empty input, unequal channel
/// lengths, or input shorter than one window.
FeatureTensor FrameAndFilterbank(const Waveform &pcm, const FrameConfig &cfg);

// Per-channel energy normalisation parameters. Only g, d and r are trained;
// s and eps stay fixed.
struct PcenParams {
  double s = 0.025;
  double g = 0.98;
  double d = 2.0;
  double r = 0.5;
  double eps = 1e-6;

  void Validate() const;
  bool operator==(const PcenParams &) const = default;
};

// Projection bounds applied after every optimizer step.
inline constexpr double kPcenMinGain = 1e-4;
inline constexpr double kPcenMinRoot = 1e-3;

/// First-order IIR smoother M_t = (1 - s) M_{t-1} + s E_t, M_0 = E_0, run
/// independently per channel and bin.
FeatureTensor PcenSmoother(const FeatureTensor &fb, double s);

/// (E / (eps + M)^g + d)^r - d^r with M from PcenSmoother(). Negative
/// energies throw DataError.
FeatureTensor Pcen(const FeatureTensor &fb, const PcenParams &p);

/// Pcen() with per-bin g, d and r (one value per bin each); s and eps are
/// taken from `fixed`.
FeatureTensor PcenPerBin(const FeatureTensor &fb, const PcenParams &fixed,
                         std::span<const double> g, std::span<const double> d,
                         std::span<const double> r);

}  // namespace mckws

#endif  // MCKWS_FEATURES_H_
