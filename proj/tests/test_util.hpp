// Copyright (c) 2026 The emtf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "emtf/autograd.hpp"
#include "emtf/rng.hpp"

namespace emtf::test {

inline ag::Mat random_mat(int rows, int cols, std::mt19937_64& rng,
                          double scale = 1.0) {
  ag::Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = scale * normal(rng);
  return m;
}

// Central-difference oracle: rebuilds the graph twice per input cell, so the
// checked function must be pure in its leaf. Returns max |fd - autograd|.
inline double fd_gradient_gap(
    const std::function<ag::Var(const ag::Var&)>& f, const ag::Mat& x0,
    double h = 1e-6) {
  ag::Var x = ag::leaf(x0, true);
  ag::Var y = f(x);
  ag::backward(y);
  ag::Mat analytic = x->grad;

  double worst = 0.0;
  for (Eigen::Index r = 0; r < x0.rows(); ++r) {
    for (Eigen::Index c = 0; c < x0.cols(); ++c) {
      ag::Mat xp = x0, xm = x0;
      xp(r, c) += h;
      xm(r, c) -= h;
      double fp = f(ag::leaf(xp, false))->value(0, 0);
      double fm = f(ag::leaf(xm, false))->value(0, 0);
      double fd = (fp - fm) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - analytic(r, c)));
    }
  }
  return worst;
}

// Unique scratch directory per test site; lives under the build tree.
inline std::string scratch_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() /
             ("emtf_test_" + tag + "_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace emtf::test
