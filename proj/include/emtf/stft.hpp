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

#include <complex>
#include <vector>

#include "emtf/mel.hpp"

namespace emtf {

// Centre-padded short-time power spectrum, [T x (n_fft/2 + 1)] with
// T = floor(N / hop) + 1. Periodic Hann window of win samples.
MatRM stft_power(const std::vector<double>& x, int n_fft, int hop, int win);

// Complex STFT with the same framing (used by Griffin-Lim).
using CMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic,
                           Eigen::Dynamic, Eigen::RowMajor>;
CMat stft_complex(const std::vector<double>& x, int n_fft, int hop, int win);

// Inverse STFT by windowed overlap-add; returns n_samples samples (the
// centre-padding is trimmed).
std::vector<double> istft(const CMat& spec, int n_fft, int hop, int win,
                          long n_samples);

std::vector<double> hann_periodic(int n);

}  // namespace emtf
