// tests/test_util.h

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

#ifndef MCKWS_TESTS_TEST_UTIL_H_
#define MCKWS_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "mckws/autodiff.h"
#include "mckws/features.h"
#include "mckws/model.h"

#include <gtest/gtest.h>

namespace mckws {
namespace testing {

inline ad::Tensor RandomTensor(ad::Shape shape, std::mt19937_64 &rng,
                               double lo = -1.0, double hi = 1.0) {
  ad::Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double &v : t.data()) v = u(rng);
  return t;
}

inline FeatureTensor RandomFeatures(std::size_t frames, std::size_t channels,
                                    std::size_t bins, std::mt19937_64 &rng,
                                    double lo = 0.0, double hi = 2.0) {
  FeatureTensor f(frames, channels, bins);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double &v : f.values()) v = u(rng);
  return f;
}

// Builds a scalar loss from leaves bound in `inputs` order.
using LossFn =
    std::function<ad::Var(ad::Tape &, const std::vector<ad::Var> &)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "input[i] element j"
};

// |a - n| / max(|a|, |n|, floor)
inline double RelError(double a, double n, double floor = 1e-6) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

/// Compares backprop gradients of `fn` at `inputs` with central finite
/// differences of step h.
inline GradCheckResult GradCheck(const LossFn &fn,
                                 const std::vector<ad::Tensor> &inputs,
                                 double h = 1e-5) {
  auto eval = [&](const std::vector<ad::Tensor> &xs) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (std::size_t i = 0; i < xs.size(); ++i)
      vars.push_back(tape.Param("x" + std::to_string(i), xs[i]));
    return fn(tape, vars).value()[0];
  };
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    vars.push_back(tape.Param("x" + std::to_string(i), inputs[i]));
  const auto grads = tape.Backward(fn(tape, vars));

  GradCheckResult out;
  std::vector<ad::Tensor> xs = inputs;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const ad::Tensor &g = grads.at("x" + std::to_string(i));
    for (std::size_t j = 0; j < xs[i].size(); ++j) {
      const double saved = xs[i][j];
      xs[i][j] = saved + h;
      const double up = eval(xs);
      xs[i][j] = saved - h;
      const double down = eval(xs);
      xs[i][j] = saved;
      const double err = RelError(g[j], (up - down) / (2.0 * h));
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.worst = "input[" + std::to_string(i) + "] element " + std::to_string(j);
      }
    }
  }
  return out;
}

/// Backprop versus central differences for every element of every model
/// parameter; `loss` builds a scalar from the bound parameters.
inline GradCheckResult ModelGradCheck(
    const ModelParams &params,
    const std::function<ad::Var(ad::Tape &, const ParamVars &)> &loss,
    double h = 1e-5) {
  auto eval = [&](const ModelParams &p) {
    ad::Tape tape;
    return loss(tape, BindParams(tape, p, true)).value()[0];
  };
  ad::Tape tape;
  const auto grads = tape.Backward(loss(tape, BindParams(tape, params, true)));
  GradCheckResult out;
  ModelParams p = params;
  for (auto &[name, tensor] : p.tensors) {
    const ad::Tensor &g = grads.at(name);
    for (std::size_t j = 0; j < tensor.size(); ++j) {
      const double saved = tensor[j];
      tensor[j] = saved + h;
      const double up = eval(p);
      tensor[j] = saved - h;
      const double down = eval(p);
      tensor[j] = saved;
      const double err = RelError(g[j], (up - down) / (2.0 * h));
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.worst = name + "[" + std::to_string(j) + "]";
      }
    }
  }
  return out;
}

// Fresh directory named after the running test, removed on destruction.
class ScratchDir {
 public:
  ScratchDir() {
    const auto *info = ::testing::UnitTest::GetInstance()->current_test_info();
    std::string name = std::string(info->test_suite_name()) + "_" + info->name();
    for (char &c : name)
      if (c == '/') c = '_';
    path_ = std::filesystem::path(::testing::TempDir()) / ("mckws_" + name);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir &) = delete;
  ScratchDir &operator=(const ScratchDir &) = delete;

  const std::filesystem::path &path() const { return path_; }
  std::string operator/(const std::string &leaf) const { return (path_ / leaf).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
}  // namespace mckws

#endif  // MCKWS_TESTS_TEST_UTIL_H_
