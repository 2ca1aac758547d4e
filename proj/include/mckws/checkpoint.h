// mckws/checkpoint.h

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

#ifndef MCKWS_CHECKPOINT_H_
#define MCKWS_CHECKPOINT_H_

// Versioned little-endian binary checkpoint:
//   "MCKWSCKP" | u32 version | u32 param count
//   per tensor: u32 name length | name | u32 rank | u64 dims[rank] | f64 values
//   u32 moment count | moment tensors ("m/<name>", "v/<name>") as above
//   u64 optimizer step | u32 length + JSON config snapshot
//   u32 length + RNG state text

#include <cstdint>
#include <map>
#include <string>

#include "mckws/autodiff.h"
#include "mckws/model.h"

namespace mckws {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct AdamState {
  std::map<std::string, ad::Tensor> m;
  std::map<std::string, ad::Tensor> v;
  std::uint64_t step = 0;

  bool operator==(const AdamState &) const = default;
};

struct Checkpoint {
  ModelParams params;
  AdamState optimizer;
  std::string config_json;  // run configuration snapshot
  std::string rng_state;    // std::mt19937_64 text state
};

/// Throws DataError on I/O failure.
void SaveCheckpoint(const Checkpoint &ckpt, const std::string &path);

/// Throws DataError on I/O failure, bad magic, unsupported version or a
/// truncated file. The model configuration is restored from the snapshot.
Checkpoint LoadCheckpoint(const std::string &path);

}  // namespace mckws

#endif  // MCKWS_CHECKPOINT_H_
