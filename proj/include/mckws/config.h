// mckws/config.h

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

#ifndef MCKWS_CONFIG_H_
#define MCKWS_CONFIG_H_

// Run configuration: defaults, overlaid by a JSON file, overlaid by
// `--set section.key=value` overrides. Parsing is strict: unknown keys and
// invalid values raise ConfigError naming the field.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mckws/datagen.h"
#include "mckws/decode.h"
#include "mckws/features.h"
#include "mckws/model.h"
#include "mckws/training.h"

namespace mckws {

using Json = nlohmann::json;

// Logical core count, at least 1.
unsigned DefaultThreads();

struct RunConfig {
  TrainConfig train;  // also carries the model and feature settings
  SmoothingConfig decode;
  CorpusConfig corpus;
  unsigned threads = DefaultThreads();
};

Json ToJson(const FrameConfig &cfg);
Json ToJson(const ModelConfig &cfg);
Json ToJson(const RunConfig &cfg);

FrameConfig FrameConfigFromJson(const Json &j);
ModelConfig ModelConfigFromJson(const Json &j);
RunConfig RunConfigFromJson(const Json &j);

/// Applies "a.b.c=value"; value is parsed as JSON, falling back to a string.
void ApplyOverride(Json &root, const std::string &assignment);

/// Defaults <- file (if non-empty path) <- overrides, then validated.
RunConfig LoadRunConfig(const std::string &file,
                        const std::vector<std::string> &overrides);

}  // namespace mckws

#endif  // MCKWS_CONFIG_H_
