// src/manifest.cc

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

#include "mckws/manifest.h"

#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mckws/errors.h"

namespace mckws {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string Resolve(const fs::path &base, const std::string &p) {
  fs::path path(p);
  return path.is_absolute() ? p : (base / path).lexically_normal().string();
}

json ToJson(const ManifestEntry &e) {
  json j;
  j["id"] = e.id;
  j["wav"] = e.wav;
  json targets = json::object();
  for (const auto &[k, v] : e.targets) targets[k] = v;
  j["targets"] = targets;
  j["label"] = LabelName(e.label);
  j["keyword_end_sample"] =
      e.keyword_end_sample ? json(*e.keyword_end_sample) : json(nullptr);
  j["snr_db"] = e.snr_db ? json(*e.snr_db) : json(nullptr);
  j["split"] = e.split;
  return j;
}

}  // namespace

std::vector<ManifestEntry> ReadManifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path);
  const fs::path base = fs::path(path).parent_path();
  std::vector<ManifestEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ManifestEntry e;
      e.id = j.at("id").get<std::string>();
      e.wav = Resolve(base, j.at("wav").get<std::string>());
      if (j.contains("targets"))
        for (const auto &[k, v] : j.at("targets").items())
          e.targets[k] = Resolve(base, v.get<std::string>());
      e.label = ParseLabel(j.at("label").get<std::string>());
      if (j.contains("keyword_end_sample") && !j["keyword_end_sample"].is_null())
        e.keyword_end_sample = j["keyword_end_sample"].get<std::size_t>();
      if (j.contains("snr_db") && !j["snr_db"].is_null())
        e.snr_db = j["snr_db"].get<double>();
      if (j.contains("split")) e.split = j["split"].get<std::string>();
      if (e.label == Label::kKeyword && !e.keyword_end_sample)
        throw DataError("keyword entry without keyword_end_sample");
      out.push_back(std::move(e));
    } catch (const json::exception &ex) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + ex.what());
    } catch (const DataError &ex) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

void WriteManifest(const std::vector<ManifestEntry> &entries,
                   const std::string &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot create manifest " + path);
  for (const ManifestEntry &e : entries) out << ToJson(e).dump() << '\n';
  if (!out) throw DataError("write failed for manifest " + path);
}

std::vector<ManifestEntry> FilterBySplit(const std::vector<ManifestEntry> &in,
                                         const std::string &split) {
  std::vector<ManifestEntry> out;
  for (const auto &e : in)
    if (e.split == split) out.push_back(e);
  return out;
}

std::vector<ManifestEntry> FilterByLabel(const std::vector<ManifestEntry> &in,
                                         Label label) {
  std::vector<ManifestEntry> out;
  for (const auto &e : in)
    if (e.label == label) out.push_back(e);
  return out;
}

}  // namespace mckws
