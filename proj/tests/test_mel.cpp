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

#include <doctest.h>

#include <cmath>
#include <vector>

#include "emtf/error.hpp"
#include "emtf/mel.hpp"
#include "test_util.hpp"

using namespace emtf;

namespace {

// Self-contained short-time mel oracle: naive DFT, its own Slaney filterbank
// and framing. Deliberately shares no code with the library path.
MatRM oracle_mel(const std::vector<double>& x, const MelConfig& cfg) {
  const int hop = static_cast<int>(cfg.sample_rate_hz * cfg.frame_shift_ms / 1000.0);
  const int win = static_cast<int>(cfg.sample_rate_hz * cfg.frame_length_ms / 1000.0);
  const int n_fft = win;
  const int n_bins = n_fft / 2 + 1;
  const int pad = n_fft / 2;
  const int t_frames = static_cast<int>(x.size()) / hop + 1;

  auto sample = [&](long i) -> double {
    long j = i - pad;
    return (j >= 0 && j < static_cast<long>(x.size())) ? x[j] : 0.0;
  };

  auto hz2mel = [](double hz) {
    return hz < 1000.0 ? hz / (200.0 / 3.0)
                       : 15.0 + std::log(hz / 1000.0) / (std::log(6.4) / 27.0);
  };
  auto mel2hz = [](double mel) {
    return mel < 15.0 ? mel * (200.0 / 3.0)
                      : 1000.0 * std::exp((mel - 15.0) * (std::log(6.4) / 27.0));
  };
  double fmax = cfg.fmax_hz > 0 ? cfg.fmax_hz : cfg.sample_rate_hz / 2.0;
  std::vector<double> centers(cfg.n_mels + 2);
  for (int i = 0; i < cfg.n_mels + 2; ++i)
    centers[i] = mel2hz(hz2mel(cfg.fmin_hz) +
                        (hz2mel(fmax) - hz2mel(cfg.fmin_hz)) * i / (cfg.n_mels + 1));

  MatRM out(t_frames, cfg.n_mels);
  for (int t = 0; t < t_frames; ++t) {
    std::vector<double> power(n_bins);
    for (int k = 0; k < n_bins; ++k) {
      double re = 0.0, im = 0.0;
      for (int i = 0; i < win; ++i) {
        double w = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / win));
        double v = sample(static_cast<long>(t) * hop + i) * w;
        double ang = 2.0 * M_PI * k * i / n_fft;
        re += v * std::cos(ang);
        im -= v * std::sin(ang);
      }
      power[k] = re * re + im * im;
    }
    for (int m = 0; m < cfg.n_mels; ++m) {
      double acc = 0.0;
      for (int k = 0; k < n_bins; ++k) {
        double f = static_cast<double>(k) * cfg.sample_rate_hz / n_fft;
        double lo = (f - centers[m]) / (centers[m + 1] - centers[m]);
        double hi = (centers[m + 2] - f) / (centers[m + 2] - centers[m + 1]);
        double tri = std::max(0.0, std::min(lo, hi));
        tri *= 2.0 / (centers[m + 2] - centers[m]);
        acc += tri * power[k];
      }
      out(t, m) = std::log(std::max(acc, cfg.log_floor));
    }
  }
  return out;
}

std::vector<double> sine_wave(double freq_hz, double seconds, int sr) {
  std::vector<double> x(static_cast<size_t>(seconds * sr));
  for (size_t i = 0; i < x.size(); ++i)
    x[i] = 0.5 * std::sin(2.0 * M_PI * freq_hz * i / sr);
  return x;
}

}  // namespace

TEST_SUITE_BEGIN("mel");

TEST_CASE("defaults reproduce the documented feature configuration") {
  MelConfig cfg;
  CHECK(cfg.sample_rate_hz == 24000);
  CHECK(cfg.n_mels == 80);
  CHECK(cfg.frame_shift_ms == 12.5);
  CHECK(cfg.frame_length_ms == 50.0);
  CHECK(cfg.hop_samples() == 300);
  CHECK(cfg.win_samples() == 1200);
}

TEST_CASE("one second at defaults gives 81 x 80 frames") {
  MelConfig cfg;
  auto x = sine_wave(440.0, 1.0, cfg.sample_rate_hz);
  auto mel = compute_mel(x, cfg);
  CHECK(mel.n_frames() == 81);  // floor(24000 / 300) + 1
  CHECK(mel.frames.cols() == 80);
  // floor invariant
  CHECK(mel.frames.minCoeff() >= std::log(cfg.log_floor) - 1e-12);
}

TEST_CASE("all-zero waveform clamps every cell to log(log_floor)") {
  MelConfig cfg;
  std::vector<double> x(6000, 0.0);
  auto mel = compute_mel(x, cfg);
  double expect = std::log(cfg.log_floor);
  CHECK((mel.frames.array() - expect).abs().maxCoeff() == 0.0);
}

TEST_CASE("library mel matches the brute-force oracle") {
  MelConfig cfg;
  auto rng = make_rng(41);
  std::vector<double> x(3600);  // 0.15 s -> 13 frames
  for (auto& v : x) v = 0.3 * normal(rng);
  auto mel = compute_mel(x, cfg);
  auto expect = oracle_mel(x, cfg);
  REQUIRE(mel.frames.rows() == expect.rows());
  CHECK((mel.frames - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("length covariance: doubling by hop multiples extends T linearly") {
  MelConfig cfg;
  auto rng = make_rng(42);
  std::vector<double> x(3000);
  for (auto& v : x) v = normal(rng);
  auto t1 = compute_mel(x, cfg).n_frames();
  std::vector<double> xx = x;
  xx.insert(xx.end(), x.begin(), x.end());
  auto t2 = compute_mel(xx, cfg).n_frames();
  CHECK(t2 - t1 == static_cast<int>(x.size()) / cfg.hop_samples());
  // determinism
  auto again = compute_mel(x, cfg);
  CHECK((again.frames - compute_mel(x, cfg).frames).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("input and config errors") {
  MelConfig cfg;
  CHECK_THROWS_WITH_AS(compute_mel({}, cfg), doctest::Contains("empty"), Error);
  MelConfig bad = cfg;
  bad.sample_rate_hz = 22050;  // 22050 * 12.5 / 1000 = 275.625
  CHECK_THROWS_WITH_AS(compute_mel({0.0, 0.1}, bad),
                       doctest::Contains("integer hop"), Error);
}

TEST_CASE("phone_average piecewise means") {
  CHECK(phone_average({1, 1, 4, 4, 4}, {2, 3}) ==
        std::vector<double>{1.0, 4.0});
  CHECK(phone_average({2, 2, 2, 2, 2}, {0, 5}) ==
        std::vector<double>{0.0, 2.0});
  auto rng = make_rng(43);
  std::vector<double> vals(17);
  for (auto& v : vals) v = normal(rng);
  CHECK(phone_average(vals, std::vector<int>(17, 1)) == vals);
  CHECK_THROWS_AS(phone_average({1, 2, 3}, {2, 2}), Error);
}

TEST_CASE("phone_average is idempotent under broadcast") {
  auto rng = make_rng(44);
  std::vector<int> durs = {3, 0, 2, 5, 1};
  std::vector<double> vals(11);
  for (auto& v : vals) v = normal(rng);
  auto avg = phone_average(vals, durs);
  std::vector<double> broadcast;
  for (size_t i = 0; i < durs.size(); ++i)
    for (int k = 0; k < durs[i]; ++k) broadcast.push_back(avg[i]);
  auto again = phone_average(broadcast, durs);
  for (size_t i = 0; i < avg.size(); ++i)
    CHECK(again[i] == doctest::Approx(avg[i]).epsilon(1e-12));
}

TEST_SUITE_END();
