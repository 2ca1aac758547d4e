// mckws/wav.h

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

#ifndef MCKWS_WAV_H_
#define MCKWS_WAV_H_

#include <cstddef>
#include <string>
#include <vector>

namespace mckws {

// Multi-channel audio, samples in [-1, 1). channels[c][n].
struct Waveform {
  int sample_rate = 16000;
  std::vector<std::vector<double>> channels;

  std::size_t num_channels() const { return channels.size(); }
  std::size_t num_samples() const {
    return channels.empty() ? 0 : channels[0].size();
  }
};

// 16-bit little-endian PCM, any channel count. Samples are divided by 32768
// on read; on write they are scaled by 32768, rounded and saturated.
// Failures throw DataError.
Waveform ReadWav(const std::string &path);
void WriteWav(const std::string &path, const Waveform &wave);

}  // namespace mckws

#endif  // MCKWS_WAV_H_
