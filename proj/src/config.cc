// src/config.cc

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

#include "mckws/config.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <thread>

#include "mckws/errors.h"

namespace mckws {

namespace {

// Strict reader over one JSON object; every key must be consumed.
class Section {
 public:
  Section(const Json &j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto &[key, _] : j_.items())
      if (!seen_.count(key)) throw ConfigError(Name(key) + ": unknown field");
  }

  bool Has(const std::string &key) const { return j_.contains(key); }

  template <typename T>
  void Get(const std::string &key, T &out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const Json::exception &) {
      throw ConfigError(Name(key) + ": wrong type (" +
                        std::string(j_.at(key).type_name()) + ")");
    }
  }

  void Get(const std::string &key, std::size_t &out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    const Json &v = j_.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(Name(key) + ": expected a non-negative integer");
    out = v.get<std::size_t>();
  }

  const Json &Child(const std::string &key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string Name(const std::string &key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const Json &j_;
  std::string path_;
  std::set<std::string> seen_;
};

Json ToJson(const PcenParams &p) {
  return {{"s", p.s}, {"g", p.g}, {"d", p.d}, {"r", p.r}, {"eps", p.eps}};
}

PcenParams PcenFromJson(const Json &j, const std::string &path) {
  PcenParams p;
  Section s(j, path);
  s.Get("s", p.s);
  s.Get("g", p.g);
  s.Get("d", p.d);
  s.Get("r", p.r);
  s.Get("eps", p.eps);
  return p;
}

Json ToJson(const ArrayGeometry &g) {
  return {{"delays", g.delays}, {"gains", g.gains}};
}

ArrayGeometry GeometryFromJson(const Json &j, const std::string &path) {
  ArrayGeometry g;
  Section s(j, path);
  s.Get("delays", g.delays);
  s.Get("gains", g.gains);
  return g;
}

// Validation errors are re-raised with the section prefix when they lack it.
template <typename F>
void Checked(const std::string &section, F &&validate) {
  try {
    validate();
  } catch (const ConfigError &e) {
    const std::string what = e.what();
    if (what.rfind(section + ".", 0) == 0 || what.rfind(section, 0) == 0) throw;
    throw ConfigError(section + ": " + what);
  }
}

}  // namespace

unsigned DefaultThreads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

Json ToJson(const FrameConfig &c) {
  return {{"sample_rate", c.sample_rate},
          {"window", c.window},
          {"shift", c.shift},
          {"n_mels", c.n_mels}};
}

FrameConfig FrameConfigFromJson(const Json &j) {
  FrameConfig c;
  {
    Section s(j, "features");
    s.Get("sample_rate", c.sample_rate);
    s.Get("window", c.window);
    s.Get("shift", c.shift);
    s.Get("n_mels", c.n_mels);
  }
  c.Validate();
  return c;
}

Json ToJson(const ModelConfig &c) {
  return {{"channels", c.channels},         {"bins", c.bins},
          {"attention_dim", c.attention_dim}, {"hidden", c.hidden},
          {"map_heads", c.map_heads},       {"dropout_keep", c.dropout_keep},
          {"pcen", ToJson(c.pcen)}};
}

ModelConfig ModelConfigFromJson(const Json &j) {
  ModelConfig c;
  {
    Section s(j, "model");
    s.Get("channels", c.channels);
    s.Get("bins", c.bins);
    s.Get("attention_dim", c.attention_dim);
    s.Get("hidden", c.hidden);
    s.Get("map_heads", c.map_heads);
    s.Get("dropout_keep", c.dropout_keep);
    if (s.Has("pcen")) c.pcen = PcenFromJson(s.Child("pcen"), "model.pcen");
  }
  c.Validate();
  return c;
}

Json ToJson(const RunConfig &c) {
  const TrainConfig &t = c.train;
  Json weights = nullptr;
  if (t.loss_weights)
    weights = {t.loss_weights->alpha(), t.loss_weights->beta(),
               t.loss_weights->theta(), t.loss_weights->delta()};
  Json train = {{"mode", TrainModeName(t.mode)},
                {"batch_size", t.batch_size},
                {"learning_rate", t.adam.learning_rate},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"adam_eps", t.adam.eps},
                {"epochs", t.epochs},
                {"seed", t.seed},
                {"loss_weights", weights},
                {"init_checkpoint", t.init_checkpoint ? Json(*t.init_checkpoint) : Json(nullptr)},
                {"max_steps", t.max_steps}};
  const CorpusConfig &k = c.corpus;
  Json corpus = {{"keywords", k.keywords},
                 {"fillers", k.fillers},
                 {"eval_keywords", k.eval_keywords},
                 {"eval_fillers", k.eval_fillers},
                 {"noisy_frac", k.noisy_frac},
                 {"seed", k.seed},
                 {"snr_train", k.snr_train},
                 {"snr_eval_hard", k.snr_eval_hard},
                 {"snr_eval_easy", k.snr_eval_easy},
                 {"jitter_db", k.jitter_db},
                 {"filler_seconds", k.filler_seconds},
                 {"keyword_seconds", k.synth.keyword_utterance_seconds},
                 {"sensor_snr_db", k.synth.sensor_snr_db},
                 {"valid_frac", k.valid_frac},
                 {"speaker", ToJson(k.speaker)},
                 {"music", ToJson(k.music)}};
  Json model = ToJson(t.model);
  model.erase("map_heads");  // follows train.mode
  return {{"features", ToJson(t.features)},
          {"model", model},
          {"train", train},
          {"decode",
           {{"n", c.decode.n},
            {"threshold", c.decode.threshold},
            {"hangover", c.decode.hangover}}},
          {"corpus", corpus},
          {"threads", c.threads}};
}

RunConfig RunConfigFromJson(const Json &j) {
  RunConfig c;
  Section root(j, "");
  if (root.Has("features")) c.train.features = FrameConfigFromJson(root.Child("features"));
  if (root.Has("model")) {
    Json model = root.Child("model");
    if (model.contains("map_heads"))
      throw ConfigError("model.map_heads: set implicitly by train.mode");
    c.train.model = ModelConfigFromJson(model);
  }
  if (root.Has("train")) {
    Section s(root.Child("train"), "train");
    std::string mode = TrainModeName(c.train.mode);
    s.Get("mode", mode);
    Checked("train.mode", [&] { c.train.mode = ParseTrainMode(mode); });
    s.Get("batch_size", c.train.batch_size);
    s.Get("learning_rate", c.train.adam.learning_rate);
    s.Get("beta1", c.train.adam.beta1);
    s.Get("beta2", c.train.adam.beta2);
    s.Get("adam_eps", c.train.adam.eps);
    s.Get("epochs", c.train.epochs);
    s.Get("seed", c.train.seed);
    s.Get("max_steps", c.train.max_steps);
    if (s.Has("loss_weights")) {
      const Json &w = s.Child("loss_weights");
      if (!w.is_null()) {
        if (!w.is_array() || w.size() != 4 ||
            !std::all_of(w.begin(), w.end(), [](const Json &x) { return x.is_number(); }))
          throw ConfigError("train.loss_weights: expected [alpha, beta, theta, delta]");
        Checked("train.loss_weights", [&] {
          c.train.loss_weights = LossWeights(w[0].get<double>(), w[1].get<double>(),
                                             w[2].get<double>(), w[3].get<double>());
        });
      }
    }
    if (s.Has("init_checkpoint")) {
      const Json &p = s.Child("init_checkpoint");
      if (p.is_string()) c.train.init_checkpoint = p.get<std::string>();
      else if (!p.is_null()) throw ConfigError("train.init_checkpoint: expected a path");
    }
  }
  c.train.model.map_heads = MapHeadsFor(c.train.mode);
  if (root.Has("decode")) {
    Section s(root.Child("decode"), "decode");
    s.Get("n", c.decode.n);
    s.Get("threshold", c.decode.threshold);
    s.Get("hangover", c.decode.hangover);
  }
  if (root.Has("corpus")) {
    CorpusConfig &k = c.corpus;
    Section s(root.Child("corpus"), "corpus");
    s.Get("keywords", k.keywords);
    s.Get("fillers", k.fillers);
    s.Get("eval_keywords", k.eval_keywords);
    s.Get("eval_fillers", k.eval_fillers);
    s.Get("noisy_frac", k.noisy_frac);
    s.Get("seed", k.seed);
    s.Get("snr_train", k.snr_train);
    s.Get("snr_eval_hard", k.snr_eval_hard);
    s.Get("snr_eval_easy", k.snr_eval_easy);
    s.Get("jitter_db", k.jitter_db);
    s.Get("filler_seconds", k.filler_seconds);
    s.Get("keyword_seconds", k.synth.keyword_utterance_seconds);
    s.Get("sensor_snr_db", k.synth.sensor_snr_db);
    s.Get("valid_frac", k.valid_frac);
    if (s.Has("speaker")) k.speaker = GeometryFromJson(s.Child("speaker"), "corpus.speaker");
    if (s.Has("music")) k.music = GeometryFromJson(s.Child("music"), "corpus.music");
  }
  root.Get("threads", c.threads);
  c.corpus.threads = c.threads;
  c.corpus.synth.sample_rate = c.train.features.sample_rate;

  if (c.threads == 0) throw ConfigError("threads: must be >= 1");
  Checked("decode", [&] { c.decode.Validate(); });
  Checked("corpus", [&] { c.corpus.Validate(); });
  Checked("train", [&] { c.train.Validate(); });
  return c;
}

void ApplyOverride(Json &root, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  Json *node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("--set: malformed key '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      break;
    }
    Json &child = (*node)[part];
    if (!child.is_object()) {
      if (!child.is_null())
        throw ConfigError("--set: '" + key.substr(0, dot) + "' is not a section");
      child = Json::object();
    }
    node = &child;
    start = dot + 1;
  }
}

RunConfig LoadRunConfig(const std::string &file,
                        const std::vector<std::string> &overrides) {
  Json j = Json::object();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file " + file);
    try {
      j = Json::parse(in);
    } catch (const Json::exception &e) {
      throw ConfigError(file + ": " + e.what());
    }
  }
  for (const std::string &o : overrides) ApplyOverride(j, o);
  return RunConfigFromJson(j);
}

}  // namespace mckws
