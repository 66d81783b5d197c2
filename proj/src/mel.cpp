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

#include "emtf/mel.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "emtf/error.hpp"
#include "emtf/feature_io.hpp"
#include "emtf/stft.hpp"

namespace emtf {

int MelConfig::hop_samples() const {
  double hop = sample_rate_hz * frame_shift_ms / 1000.0;
  double rounded = std::round(hop);
  if (std::abs(hop - rounded) > 1e-9 || rounded < 1.0)
    fail(ErrorKind::kConfig,
         "frame shift does not give an integer hop: " + std::to_string(hop) +
             " samples");
  return static_cast<int>(rounded);
}

int MelConfig::win_samples() const {
  double win = sample_rate_hz * frame_length_ms / 1000.0;
  double rounded = std::round(win);
  if (std::abs(win - rounded) > 1e-9 || rounded < 1.0)
    fail(ErrorKind::kConfig, "frame length does not give an integer window");
  return static_cast<int>(rounded);
}

void MelConfig::validate() const {
  if (frame_shift_ms >= frame_length_ms)
    fail(ErrorKind::kConfig, "frame_shift_ms must be < frame_length_ms");
  if (n_mels < 1) fail(ErrorKind::kConfig, "n_mels must be >= 1");
  if (log_floor <= 0.0) fail(ErrorKind::kConfig, "log_floor must be > 0");
  hop_samples();
  win_samples();
}

namespace {

// Slaney mel scale (linear below 1 kHz), matching the librosa default.
double hz_to_mel(double hz) {
  constexpr double kLin = 200.0 / 3.0;
  constexpr double kMinLogHz = 1000.0;
  constexpr double kMinLogMel = 15.0;
  const double log_step = std::log(6.4) / 27.0;
  if (hz < kMinLogHz) return hz / kLin;
  return kMinLogMel + std::log(hz / kMinLogHz) / log_step;
}

double mel_to_hz(double mel) {
  constexpr double kLin = 200.0 / 3.0;
  constexpr double kMinLogHz = 1000.0;
  constexpr double kMinLogMel = 15.0;
  const double log_step = std::log(6.4) / 27.0;
  if (mel < kMinLogMel) return mel * kLin;
  return kMinLogHz * std::exp((mel - kMinLogMel) * log_step);
}

}  // namespace

MatRM mel_filterbank(const MelConfig& cfg, int n_fft) {
  const int n_bins = n_fft / 2 + 1;
  const double fmax = cfg.fmax_hz > 0.0 ? cfg.fmax_hz : cfg.sample_rate_hz / 2.0;
  const double mel_lo = hz_to_mel(cfg.fmin_hz);
  const double mel_hi = hz_to_mel(fmax);

  std::vector<double> mel_f(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    mel_f[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));

  MatRM fb = MatRM::Zero(cfg.n_mels, n_bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    for (int k = 0; k < n_bins; ++k) {
      double f = static_cast<double>(k) * cfg.sample_rate_hz / n_fft;
      double lower = (f - mel_f[m]) / std::max(mel_f[m + 1] - mel_f[m], 1e-10);
      double upper =
          (mel_f[m + 2] - f) / std::max(mel_f[m + 2] - mel_f[m + 1], 1e-10);
      fb(m, k) = std::max(0.0, std::min(lower, upper));
    }
    double enorm = 2.0 / std::max(mel_f[m + 2] - mel_f[m], 1e-10);
    fb.row(m) *= enorm;
  }
  return fb;
}

MelSpectrogram compute_mel(const std::vector<double>& waveform,
                           const MelConfig& cfg) {
  if (waveform.empty())
    fail(ErrorKind::kInvalidInput, "compute_mel: empty waveform");
  cfg.validate();
  const int hop = cfg.hop_samples();
  const int win = cfg.win_samples();
  const int n_fft = win;

  MatRM power = stft_power(waveform, n_fft, hop, win);  // [T x n_bins]
  MatRM fb = mel_filterbank(cfg, n_fft);                // [n_mels x n_bins]

  MelSpectrogram mel;
  mel.config = cfg;
  mel.frames = (power * fb.transpose())
                   .cwiseMax(cfg.log_floor)
                   .array()
                   .log()
                   .matrix();
  return mel;
}

std::vector<double> phone_average(const std::vector<double>& frame_values,
                                  const std::vector<int>& durations) {
  long total = 0;
  for (int d : durations) {
    if (d < 0) fail(ErrorKind::kInvalidInput, "negative duration");
    total += d;
  }
  if (total != static_cast<long>(frame_values.size()))
    fail(ErrorKind::kAlignment,
         "duration sum " + std::to_string(total) + " != frame count " +
             std::to_string(frame_values.size()));
  std::vector<double> out(durations.size(), 0.0);
  long pos = 0;
  for (size_t i = 0; i < durations.size(); ++i) {
    if (durations[i] == 0) continue;
    double acc = 0.0;
    for (int k = 0; k < durations[i]; ++k) acc += frame_values[pos++];
    out[i] = acc / durations[i];
  }
  return out;
}

std::vector<double> frame_energy(const MelSpectrogram& mel) {
  std::vector<double> e(mel.n_frames());
  for (int t = 0; t < mel.n_frames(); ++t) e[t] = mel.frames.row(t).norm();
  return e;
}

double mel_pitch_proxy(const MatRM& mel) {
  if (mel.rows() == 0) fail(ErrorKind::kInvalidInput, "empty mel");
  double acc = 0.0;
  for (Eigen::Index t = 0; t < mel.rows(); ++t) {
    double wsum = 0.0, bsum = 0.0;
    for (Eigen::Index b = 0; b < mel.cols(); ++b) {
      double w = std::exp(mel(t, b));
      wsum += w;
      bsum += w * static_cast<double>(b);
    }
    acc += bsum / wsum;
  }
  return acc / static_cast<double>(mel.rows());
}

void save_mel(const std::string& path, const MelSpectrogram& mel) {
  std::vector<float> data(static_cast<size_t>(mel.frames.size()));
  size_t i = 0;
  for (Eigen::Index r = 0; r < mel.frames.rows(); ++r)
    for (Eigen::Index c = 0; c < mel.frames.cols(); ++c)
      data[i++] = static_cast<float>(mel.frames(r, c));
  io::write_feature_file(
      path, io::make_rank2(static_cast<uint32_t>(mel.frames.rows()),
                           static_cast<uint32_t>(mel.frames.cols()),
                           std::move(data)));
}

MatRM load_mel_frames(const std::string& path) {
  io::FeatureFile f = io::read_feature_file(path);
  if (f.rank != 2)
    fail(ErrorKind::kFormat, "expected rank-2 mel file: " + path);
  MatRM m(f.dims[0], f.dims[1]);
  size_t i = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = static_cast<double>(f.data[i++]);
  return m;
}

int peek_mel_frames(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open: " + path);
  char header[14];
  in.read(header, 14);
  if (!in || std::memcmp(header, "EMTF", 4) != 0 || header[5] != 2)
    fail(ErrorKind::kFormat, "not a rank-2 feature file: " + path);
  uint32_t t;
  std::memcpy(&t, header + 6, 4);
  return static_cast<int>(t);
}

}  // namespace emtf
