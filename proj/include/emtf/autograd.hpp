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
#include <functional>
#include <memory>
#include <random>
#include <vector>

namespace emtf::ag {

// All graph values are dense row-major double matrices. Vectors are [1 x C]
// rows, scalars are [1 x 1]. Row-major keeps time-major framing contiguous.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class Node;
using Var = std::shared_ptr<Node>;

// One value in the computation graph. backward_fn reads this node's grad and
// accumulates into the parents' grads; the graph is a DAG (children hold
// parents, never the reverse), so plain shared_ptr ownership is cycle-free.
class Node {
 public:
  Mat value;
  Mat grad;
  bool requires_grad = false;
  bool grad_ready = false;  // grad matrix allocated and zeroed
  std::vector<Var> parents;
  std::function<void(Node&)> backward_fn;

  void ensure_grad() {
    if (!grad_ready) {
      grad = Mat::Zero(value.rows(), value.cols());
      grad_ready = true;
    }
  }
};

Var constant(Mat v);
Var leaf(Mat v, bool requires_grad = true);

// Elementwise / scalar
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);

// Broadcast a [1 x C] row over every row of m.
Var add_row_broadcast(const Var& m, const Var& v);
Var mul_row_broadcast(const Var& m, const Var& v);

// Matrix products; _nt is a * b^T, _tn is a^T * b.
Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);
Var matmul_tn(const Var& a, const Var& b);

// Activations
Var relu(const Var& x);
Var gelu(const Var& x);
Var tanh_act(const Var& x);
Var sigmoid(const Var& x);

// Row-wise zero-mean / unit-variance; affine transforms are applied by the
// caller so conditional layer norm can reuse the same primitive.
Var layer_norm_rows(const Var& x, double eps = 1e-5);
Var softmax_rows(const Var& x);

// Structure ops
Var slice_rows(const Var& x, int start, int len);
Var slice_cols(const Var& x, int start, int len);
Var concat_cols(const Var& a, const Var& b);
Var mean_over_rows(const Var& x);
Var sum_all(const Var& x);
Var mean_all(const Var& x);
Var cell(const Var& x, int r, int c);

// Shift rows in time: offset > 0 moves content down (later), zero-filled.
Var shift_rows(const Var& x, int offset);

// Repeat row i durations[i] times (the length regulator kernel).
Var repeat_rows(const Var& x, const std::vector<int>& durations);

// Gather rows of a table by index; backward scatter-adds.
Var embedding_rows(const Var& table, const std::vector<int>& ids);

// out = sum_i w(0, i) * mats[i]; all mats share a shape.
Var weighted_sum(const std::vector<Var>& mats, const Var& w);

// General 1-D convolution over rows. x: [T x Cin], w: [K*Cin x Cout],
// b: [1 x Cout]. pad_left + pad_right must equal K - 1 (length preserving).
// Output row t depends on input rows [t - pad_left, t + pad_right].
Var conv1d(const Var& x, const Var& w, const Var& b, int kernel, int pad_left,
           int pad_right);

// Per-channel convolution. w: [K x C], b: [1 x C].
Var depthwise_conv1d(const Var& x, const Var& w, const Var& b, int pad_left,
                     int pad_right);

// Inverted-dropout; identity when !training or p == 0.
Var dropout(const Var& x, double p, std::mt19937_64& rng, bool training);

// Losses (scalar [1 x 1] outputs)
Var mse_loss(const Var& a, const Var& b);
Var l1_loss(const Var& a, const Var& b);
Var cross_entropy_logits(const Var& logits, int label);

// Straight-through: value is q, gradient passes to h unchanged.
Var straight_through(const Var& h, const Mat& q);

// Reverse-mode sweep from a [1 x 1] root. Accumulates into leaf grads.
void backward(const Var& root);

}  // namespace emtf::ag
