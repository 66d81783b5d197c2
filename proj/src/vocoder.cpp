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

#include "emtf/vocoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "emtf/error.hpp"
#include "emtf/feature_io.hpp"
#include "emtf/stft.hpp"

namespace emtf {

std::vector<double> griffin_lim(const MatRM& log_mel, const MelConfig& cfg,
                                int n_iters) {
  cfg.validate();
  if (log_mel.cols() != cfg.n_mels)
    fail(ErrorKind::kShape, "griffin_lim: mel dim mismatch");
  const int hop = cfg.hop_samples();
  const int win = cfg.win_samples();
  const int n_fft = win;
  const int n_bins = n_fft / 2 + 1;
  const int t_frames = static_cast<int>(log_mel.rows());

  // Mel -> linear power via the filterbank pseudo-inverse, clamped to >= 0.
  MatRM fb = mel_filterbank(cfg, n_fft);  // [n_mels x n_bins]
  Eigen::MatrixXd fbd = fb;
  Eigen::MatrixXd pinv =
      fbd.completeOrthogonalDecomposition().pseudoInverse();  // [n_bins x n_mels]
  MatRM mel_power = log_mel.array().exp().matrix();
  MatRM power = (mel_power * pinv.transpose()).cwiseMax(0.0);  // [T x n_bins]
  MatRM magnitude = power.array().sqrt().matrix();

  const long n_samples = static_cast<long>(t_frames - 1) * hop;
  if (n_samples <= 0) return std::vector<double>(hop, 0.0);

  // Zero phase init.
  CMat spec(t_frames, n_bins);
  for (int t = 0; t < t_frames; ++t)
    for (int k = 0; k < n_bins; ++k) spec(t, k) = {magnitude(t, k), 0.0};

  std::vector<double> wave = istft(spec, n_fft, hop, win, n_samples);
  for (int it = 0; it < n_iters; ++it) {
    CMat est = stft_complex(wave, n_fft, hop, win);
    const int rows = std::min<int>(t_frames, static_cast<int>(est.rows()));
    for (int t = 0; t < t_frames; ++t) {
      for (int k = 0; k < n_bins; ++k) {
        std::complex<double> v =
            t < rows ? est(t, k) : std::complex<double>(1.0, 0.0);
        double a = std::abs(v);
        std::complex<double> phase = a > 1e-12 ? v / a : std::complex<double>(1.0, 0.0);
        spec(t, k) = magnitude(t, k) * phase;
      }
    }
    wave = istft(spec, n_fft, hop, win, n_samples);
  }
  return wave;
}

void write_wav(const std::string& path, const std::vector<double>& samples,
               int sample_rate_hz) {
  const uint32_t n = static_cast<uint32_t>(samples.size());
  const uint32_t data_bytes = n * 2;
  const uint32_t byte_rate = static_cast<uint32_t>(sample_rate_hz) * 2;

  std::string out;
  out.reserve(44 + data_bytes);
  auto put_u32 = [&out](uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto put_u16 = [&out](uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
  };
  out.append("RIFF", 4);
  put_u32(36 + data_bytes);
  out.append("WAVE", 4);
  out.append("fmt ", 4);
  put_u32(16);
  put_u16(1);  // PCM
  put_u16(1);  // mono
  put_u32(static_cast<uint32_t>(sample_rate_hz));
  put_u32(byte_rate);
  put_u16(2);   // block align
  put_u16(16);  // bits per sample
  out.append("data", 4);
  put_u32(data_bytes);
  for (double s : samples) {
    double clipped = std::clamp(s, -1.0, 1.0);
    auto v = static_cast<int16_t>(std::lround(clipped * 32767.0));
    put_u16(static_cast<uint16_t>(v));
  }
  io::atomic_write_file(path, out);
}

}  // namespace emtf
