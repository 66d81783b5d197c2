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

#include <string>
#include <vector>

#include "emtf/mel.hpp"

namespace emtf {

// Iterative phase reconstruction from a log-mel spectrogram. Zero-phase
// initialization keeps the output deterministic. Output length is
// (T - 1) * hop samples.
std::vector<double> griffin_lim(const MatRM& log_mel, const MelConfig& cfg,
                                int n_iters = 60);

// 16-bit PCM mono writer (values clipped to [-1, 1]).
void write_wav(const std::string& path, const std::vector<double>& samples,
               int sample_rate_hz);

}  // namespace emtf
