// mckws/manifest.h

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

#ifndef MCKWS_MANIFEST_H_
#define MCKWS_MANIFEST_H_

// JSON-lines corpus manifests, one object per utterance:
//   {"id", "wav", "targets": {"clean", "noise1", "noise2"}, "label",
//    "keyword_end_sample", "snr_db", "split"}
// Paths are stored relative to the manifest's directory.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mckws/datagen.h"

namespace mckws {

struct ManifestEntry {
  std::string id;
  std::string wav;
  std::map<std::string, std::string> targets;  // clean / noise1 / noise2
  Label label = Label::kFiller;
  std::optional<std::size_t> keyword_end_sample;
  std::optional<double> snr_db;
  std::string split = "train";

  bool operator==(const ManifestEntry &) const = default;
};

/// Reads a manifest; relative paths are resolved against its directory.
/// Throws DataError on I/O or schema errors (with the line number).
std::vector<ManifestEntry> ReadManifest(const std::string &path);

/// Writes entries verbatim (paths as given), one JSON object per line.
void WriteManifest(const std::vector<ManifestEntry> &entries,
                   const std::string &path);

std::vector<ManifestEntry> FilterBySplit(const std::vector<ManifestEntry> &in,
                                         const std::string &split);
std::vector<ManifestEntry> FilterByLabel(const std::vector<ManifestEntry> &in,
                                         Label label);

}  // namespace mckws

#endif  // MCKWS_MANIFEST_H_
