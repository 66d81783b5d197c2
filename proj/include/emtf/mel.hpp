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

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace emtf {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MelConfig {
  int sample_rate_hz = 24000;
  int n_mels = 80;
  double frame_shift_ms = 12.5;
  double frame_length_ms = 50.0;
  double fmin_hz = 0.0;
  double fmax_hz = 12000.0;
  double log_floor = 1e-10;

  int hop_samples() const;     // throws config error when non-integer
  int win_samples() const;
  void validate() const;
};

// Frame-major log-mel energies; every cell is >= log(log_floor).
struct MelSpectrogram {
  MatRM frames;  // [T x n_mels]
  MelConfig config;

  int n_frames() const { return static_cast<int>(frames.rows()); }
};

// Short-time analysis with centre padding: T = floor(N / hop) + 1.
MelSpectrogram compute_mel(const std::vector<double>& waveform,
                           const MelConfig& cfg);

// Slaney-style triangular filterbank, [n_mels x (n_fft/2 + 1)].
MatRM mel_filterbank(const MelConfig& cfg, int n_fft);

// Mean of frame_values over each phoneme's frame span; zero-duration
// phonemes yield 0.
std::vector<double> phone_average(const std::vector<double>& frame_values,
                                  const std::vector<int>& durations);

// Per-frame L2 norm of the mel rows (the energy proxy used for targets).
std::vector<double> frame_energy(const MelSpectrogram& mel);

// exp-weighted mean mel-bin index per frame, averaged over frames; the
// objective pitch proxy used by evaluation.
double mel_pitch_proxy(const MatRM& mel);

void save_mel(const std::string& path, const MelSpectrogram& mel);
MatRM load_mel_frames(const std::string& path);
// Reads only the header and returns T without loading the payload.
int peek_mel_frames(const std::string& path);

}  // namespace emtf
