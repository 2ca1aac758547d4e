// src/wav.cc

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

#include "mckws/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mckws/errors.h"

namespace mckws {

namespace {

std::uint32_t ReadU32(const unsigned char *p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 |
         std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

std::uint16_t ReadU16(const unsigned char *p) {
  return std::uint16_t(p[0] | p[1] << 8);
}

void PutU32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void PutU16(std::string &out, std::uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char(v >> 8));
}

}  // namespace

Waveform ReadWav(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open wav file " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw DataError(path + ": not a RIFF/WAVE file");

  std::size_t pos = 12;
  int channels = 0, rate = 0, bits = 0;
  bool have_fmt = false;
  const unsigned char *data = nullptr;
  std::size_t data_size = 0;
  while (pos + 8 <= bytes.size()) {
    const unsigned char *chunk = bytes.data() + pos;
    const std::size_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // tolerate a truncated data chunk, nothing else
      if (std::memcmp(chunk, "data", 4) != 0)
        throw DataError(path + ": truncated chunk");
    }
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw DataError(path + ": short fmt chunk");
      const std::uint16_t format = ReadU16(chunk + 8);
      channels = ReadU16(chunk + 10);
      rate = int(ReadU32(chunk + 12));
      bits = ReadU16(chunk + 22);
      // 0xFFFE (extensible) is accepted when it carries PCM samples
      if (format != 1 && format != 0xFFFE)
        throw DataError(path + ": unsupported wav format " +
                        std::to_string(format));
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min(size, bytes.size() - body);
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt || data == nullptr) throw DataError(path + ": missing fmt or data chunk");
  if (bits != 16) throw DataError(path + ": only 16-bit PCM supported, got " +
                                  std::to_string(bits) + " bits");
  if (channels <= 0) throw DataError(path + ": zero channels");

  Waveform wave;
  wave.sample_rate = rate;
  const std::size_t frames = data_size / (2 * std::size_t(channels));
  wave.channels.assign(channels, std::vector<double>(frames));
  for (std::size_t n = 0; n < frames; ++n)
    for (int c = 0; c < channels; ++c) {
      const auto raw = std::int16_t(ReadU16(data + 2 * (n * channels + c)));
      wave.channels[c][n] = raw / 32768.0;
    }
  return wave;
}

void WriteWav(const std::string &path, const Waveform &wave) {
  const std::size_t channels = wave.num_channels();
  const std::size_t frames = wave.num_samples();
  if (channels == 0) throw DataError("WriteWav: no channels for " + path);
  for (const auto &ch : wave.channels)
    if (ch.size() != frames)
      throw DataError("WriteWav: channel length mismatch for " + path);

  const std::uint32_t data_bytes = std::uint32_t(frames * channels * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  PutU32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, 1);
  PutU16(out, std::uint16_t(channels));
  PutU32(out, std::uint32_t(wave.sample_rate));
  PutU32(out, std::uint32_t(wave.sample_rate * channels * 2));
  PutU16(out, std::uint16_t(channels * 2));
  PutU16(out, 16);
  out += "data";
  PutU32(out, data_bytes);
  for (std::size_t n = 0; n < frames; ++n)
    for (std::size_t c = 0; c < channels; ++c) {
      const double scaled = std::round(wave.channels[c][n] * 32768.0);
      const auto v = std::int16_t(std::clamp(scaled, -32768.0, 32767.0));
      PutU16(out, std::uint16_t(v));
    }

  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot create wav file " + path);
  file.write(out.data(), std::streamsize(out.size()));
  if (!file) throw DataError("write failed for " + path);
}

}  // namespace mckws
