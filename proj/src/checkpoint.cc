// src/checkpoint.cc

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

#include "mckws/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mckws/config.h"
#include "mckws/errors.h"

namespace mckws {

namespace {

constexpr char kMagic[8] = {'M', 'C', 'K', 'W', 'S', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
void PutLe(std::string &out, T v) {
  static_assert(std::is_integral_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(char((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

void PutString(std::string &out, const std::string &s) {
  PutLe<std::uint32_t>(out, std::uint32_t(s.size()));
  out += s;
}

void PutTensor(std::string &out, const std::string &name, const ad::Tensor &t) {
  PutString(out, name);
  PutLe<std::uint32_t>(out, std::uint32_t(t.rank()));
  for (std::size_t d : t.shape()) PutLe<std::uint64_t>(out, d);
  for (double v : t.data()) PutLe<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  Reader(std::string bytes, std::string path)
      : bytes_(std::move(bytes)), path_(std::move(path)) {}

  template <typename T>
  T Le() {
    Need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::string String() {
    const std::uint32_t n = Le<std::uint32_t>();
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::pair<std::string, ad::Tensor> Tensor() {
    std::string name = String();
    const std::uint32_t rank = Le<std::uint32_t>();
    if (rank > 8) Fail("implausible tensor rank for " + name);
    ad::Shape shape(rank);
    std::size_t count = 1;
    for (auto &d : shape) {
      d = Le<std::uint64_t>();
      count *= d;
    }
    Need(count * 8);
    std::vector<double> values(count);
    for (double &v : values) v = std::bit_cast<double>(Le<std::uint64_t>());
    return {std::move(name), ad::Tensor(std::move(shape), std::move(values))};
  }

  void Magic() {
    Need(sizeof kMagic);
    if (std::memcmp(bytes_.data(), kMagic, sizeof kMagic) != 0)
      Fail("not a checkpoint (bad magic)");
    pos_ = sizeof kMagic;
  }

  bool AtEnd() const { return pos_ == bytes_.size(); }

  [[noreturn]] void Fail(const std::string &why) const {
    throw DataError(path_ + ": " + why);
  }

 private:
  void Need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) Fail("truncated checkpoint");
  }

  std::string bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void SaveCheckpoint(const Checkpoint &ckpt, const std::string &path) {
  Json snapshot = Json::parse(ckpt.config_json.empty() ? "{}" : ckpt.config_json,
                              nullptr, false);
  if (snapshot.is_discarded() || !snapshot.is_object()) snapshot = Json::object();
  snapshot["model"] = ToJson(ckpt.params.config);

  std::string out(kMagic, sizeof kMagic);
  PutLe<std::uint32_t>(out, kCheckpointVersion);
  PutLe<std::uint32_t>(out, std::uint32_t(ckpt.params.tensors.size()));
  for (const auto &[name, t] : ckpt.params.tensors) PutTensor(out, name, t);
  PutLe<std::uint32_t>(out, std::uint32_t(ckpt.optimizer.m.size() + ckpt.optimizer.v.size()));
  for (const auto &[name, t] : ckpt.optimizer.m) PutTensor(out, "m/" + name, t);
  for (const auto &[name, t] : ckpt.optimizer.v) PutTensor(out, "v/" + name, t);
  PutLe<std::uint64_t>(out, ckpt.optimizer.step);
  PutString(out, snapshot.dump());
  PutString(out, ckpt.rng_state);

  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot create checkpoint " + path);
  file.write(out.data(), std::streamsize(out.size()));
  if (!file) throw DataError("write failed for checkpoint " + path);
}

Checkpoint LoadCheckpoint(const std::string &path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open checkpoint " + path);
  Reader in(std::string((std::istreambuf_iterator<char>(file)),
                        std::istreambuf_iterator<char>()),
            path);
  in.Magic();
  const std::uint32_t version = in.Le<std::uint32_t>();
  if (version != kCheckpointVersion)
    in.Fail("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  const std::uint32_t params = in.Le<std::uint32_t>();
  for (std::uint32_t i = 0; i < params; ++i) {
    auto [name, t] = in.Tensor();
    ckpt.params.tensors.emplace(std::move(name), std::move(t));
  }
  const std::uint32_t moments = in.Le<std::uint32_t>();
  for (std::uint32_t i = 0; i < moments; ++i) {
    auto [name, t] = in.Tensor();
    if (name.rfind("m/", 0) == 0)
      ckpt.optimizer.m.emplace(name.substr(2), std::move(t));
    else if (name.rfind("v/", 0) == 0)
      ckpt.optimizer.v.emplace(name.substr(2), std::move(t));
    else
      in.Fail("unknown optimizer tensor " + name);
  }
  ckpt.optimizer.step = in.Le<std::uint64_t>();
  ckpt.config_json = in.String();
  ckpt.rng_state = in.String();
  if (!in.AtEnd()) in.Fail("trailing bytes after checkpoint");

  const Json snapshot = Json::parse(ckpt.config_json, nullptr, false);
  if (snapshot.is_discarded() || !snapshot.contains("model"))
    in.Fail("config snapshot lacks the model section");
  try {
    ckpt.params.config = ModelConfigFromJson(snapshot.at("model"));
  } catch (const ConfigError &e) {
    in.Fail(std::string("bad model config: ") + e.what());
  }
  return ckpt;
}

}  // namespace mckws
