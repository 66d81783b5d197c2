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

#include "emtf/stft.hpp"

#include <fftw3.h>

#include <cmath>

#include "emtf/error.hpp"

namespace emtf {

namespace {

// RAII around one r2c/c2r plan pair of a fixed size. FFTW_ESTIMATE keeps
// planning deterministic; buffers are fftw-aligned.
class FftPlan {
 public:
  explicit FftPlan(int n) : n_(n) {
    real_ = fftw_alloc_real(n);
    cplx_ = fftw_alloc_complex(n / 2 + 1);
    fwd_ = fftw_plan_dft_r2c_1d(n, real_, cplx_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(n, cplx_, real_, FFTW_ESTIMATE);
  }
  ~FftPlan() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(real_);
    fftw_free(cplx_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  double* real() { return real_; }
  fftw_complex* cplx() { return cplx_; }
  void forward() { fftw_execute(fwd_); }
  void inverse() { fftw_execute(inv_); }
  int size() const { return n_; }

 private:
  int n_;
  double* real_;
  fftw_complex* cplx_;
  fftw_plan fwd_, inv_;
};

std::vector<double> center_pad(const std::vector<double>& x, int pad) {
  std::vector<double> padded(x.size() + 2 * static_cast<size_t>(pad), 0.0);
  std::copy(x.begin(), x.end(), padded.begin() + pad);
  return padded;
}

}  // namespace

std::vector<double> hann_periodic(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n));
  return w;
}

MatRM stft_power(const std::vector<double>& x, int n_fft, int hop, int win) {
  if (x.empty()) fail(ErrorKind::kInvalidInput, "stft: empty input");
  if (win > n_fft) fail(ErrorKind::kConfig, "stft: win > n_fft");
  const int n_bins = n_fft / 2 + 1;
  const int pad = n_fft / 2;
  const auto padded = center_pad(x, pad);
  const auto window = hann_periodic(win);
  const int t_frames = static_cast<int>(x.size() / hop) + 1;
  const int offset = (n_fft - win) / 2;

  FftPlan plan(n_fft);
  MatRM power(t_frames, n_bins);
  for (int t = 0; t < t_frames; ++t) {
    std::fill(plan.real(), plan.real() + n_fft, 0.0);
    const long start = static_cast<long>(t) * hop;
    for (int i = 0; i < win; ++i) {
      size_t src = static_cast<size_t>(start + i);
      double v = src < padded.size() ? padded[src] : 0.0;
      plan.real()[offset + i] = v * window[i];
    }
    plan.forward();
    for (int k = 0; k < n_bins; ++k) {
      double re = plan.cplx()[k][0];
      double im = plan.cplx()[k][1];
      power(t, k) = re * re + im * im;
    }
  }
  return power;
}

CMat stft_complex(const std::vector<double>& x, int n_fft, int hop, int win) {
  if (x.empty()) fail(ErrorKind::kInvalidInput, "stft: empty input");
  const int n_bins = n_fft / 2 + 1;
  const int pad = n_fft / 2;
  const auto padded = center_pad(x, pad);
  const auto window = hann_periodic(win);
  const int t_frames = static_cast<int>(x.size() / hop) + 1;
  const int offset = (n_fft - win) / 2;

  FftPlan plan(n_fft);
  CMat spec(t_frames, n_bins);
  for (int t = 0; t < t_frames; ++t) {
    std::fill(plan.real(), plan.real() + n_fft, 0.0);
    const long start = static_cast<long>(t) * hop;
    for (int i = 0; i < win; ++i) {
      size_t src = static_cast<size_t>(start + i);
      double v = src < padded.size() ? padded[src] : 0.0;
      plan.real()[offset + i] = v * window[i];
    }
    plan.forward();
    for (int k = 0; k < n_bins; ++k)
      spec(t, k) = {plan.cplx()[k][0], plan.cplx()[k][1]};
  }
  return spec;
}

std::vector<double> istft(const CMat& spec, int n_fft, int hop, int win,
                          long n_samples) {
  const int n_bins = n_fft / 2 + 1;
  if (spec.cols() != n_bins) fail(ErrorKind::kShape, "istft: bin mismatch");
  const int t_frames = static_cast<int>(spec.rows());
  const int pad = n_fft / 2;
  const int offset = (n_fft - win) / 2;
  const auto window = hann_periodic(win);

  const long padded_len = static_cast<long>(t_frames - 1) * hop + n_fft;
  std::vector<double> acc(padded_len, 0.0);
  std::vector<double> wsum(padded_len, 0.0);

  FftPlan plan(n_fft);
  const double inv_n = 1.0 / n_fft;
  for (int t = 0; t < t_frames; ++t) {
    for (int k = 0; k < n_bins; ++k) {
      plan.cplx()[k][0] = spec(t, k).real();
      plan.cplx()[k][1] = spec(t, k).imag();
    }
    plan.inverse();
    const long start = static_cast<long>(t) * hop;
    for (int i = 0; i < win; ++i) {
      double v = plan.real()[offset + i] * inv_n;
      acc[start + i] += v * window[i];
      wsum[start + i] += window[i] * window[i];
    }
  }
  std::vector<double> out(static_cast<size_t>(n_samples), 0.0);
  for (long i = 0; i < n_samples; ++i) {
    long j = i + pad;  // back into the centre-padded domain
    if (j >= 0 && j < padded_len && wsum[j] > 1e-9) out[i] = acc[j] / wsum[j];
  }
  return out;
}

}  // namespace emtf
