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

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "emtf/autograd.hpp"

namespace emtf::nn {

using ag::Mat;
using ag::Var;

// Per-call context. Training mode enables dropout and stateful updates
// (VQ codebook EMA); rng must be set when training.
struct Ctx {
  bool training = false;
  std::mt19937_64* rng = nullptr;
};

Mat xavier_init(int rows, int cols, std::mt19937_64& rng);
Mat normal_init(int rows, int cols, double stddev, std::mt19937_64& rng);

// Base class handling parameter/buffer registration. Registration order is
// fixed by construction order, which makes checkpoint layout deterministic.
class Module {
 public:
  virtual ~Module() = default;
  Module() = default;
  Module(const Module&) = delete;
  Module& operator=(const Module&) = delete;

  void collect_parameters(const std::string& prefix,
                          std::vector<std::pair<std::string, Var>>* out) const;
  void collect_buffers(const std::string& prefix,
                       std::vector<std::pair<std::string, Mat*>>* out) const;
  std::vector<std::pair<std::string, Var>> named_parameters() const;

 protected:
  Var add_param(const std::string& name, Mat init);
  void add_buffer(const std::string& name, Mat* buffer);
  void add_child(const std::string& name, Module* child);

 private:
  std::vector<std::pair<std::string, Var>> params_;
  std::vector<std::pair<std::string, Mat*>> buffers_;
  std::vector<std::pair<std::string, Module*>> children_;
};

class Linear : public Module {
 public:
  Linear(int in_dim, int out_dim, std::mt19937_64& rng, bool zero_init = false,
         double bias_init = 0.0);
  Var forward(const Var& x) const;
  const Var& weight() const { return w_; }
  const Var& bias() const { return b_; }

 private:
  Var w_;  // [in x out]
  Var b_;  // [1 x out]
};

class Embedding : public Module {
 public:
  Embedding(int n_rows, int dim, std::mt19937_64& rng, double stddev = 0.5);
  Var forward(const std::vector<int>& ids) const;
  Var row(int id) const;
  const Var& table() const { return table_; }

 private:
  Var table_;
};

class Conv1dLayer : public Module {
 public:
  Conv1dLayer(int in_dim, int out_dim, int kernel, int pad_left, int pad_right,
              std::mt19937_64& rng);
  Var forward(const Var& x) const;

 private:
  Var w_;
  Var b_;
  int kernel_, pad_left_, pad_right_;
};

class DepthwiseConv1d : public Module {
 public:
  DepthwiseConv1d(int channels, int kernel, std::mt19937_64& rng);
  Var forward(const Var& x) const;

 private:
  Var w_;
  Var b_;
  int pad_left_, pad_right_;
};

// Normalization interface shared by plain and conditional layer norm so a
// conformer block can host either.
class NormLayer : public Module {
 public:
  virtual Var apply(const Var& x, const Var& cond, const Ctx& ctx) const = 0;
};

class LayerNorm : public NormLayer {
 public:
  explicit LayerNorm(int dim);
  Var apply(const Var& x, const Var& cond, const Ctx& ctx) const override;

 private:
  Var gain_;
  Var bias_;
};

// Conditional layer norm: scale and bias are each one fully connected layer
// over the conditioning vector. Zero weights with gain bias 1 / shift bias 0
// make it exactly plain layer norm at initialization.
class CondLayerNorm : public NormLayer {
 public:
  CondLayerNorm(int dim, int cond_dim, std::mt19937_64& rng);
  Var apply(const Var& x, const Var& cond, const Ctx& ctx) const override;

 private:
  Linear gain_fc_;
  Linear bias_fc_;
};

class MultiHeadAttention : public Module {
 public:
  MultiHeadAttention(int dim, int n_heads, std::mt19937_64& rng);
  Var forward(const Var& x, const Ctx& ctx) const;

 private:
  Linear wq_, wk_, wv_, wo_;
  int n_heads_;
  int head_dim_;
};

class FeedForward : public Module {
 public:
  FeedForward(int dim, int hidden, double dropout, std::mt19937_64& rng);
  Var forward(const Var& x, const Ctx& ctx) const;

 private:
  Linear fc1_, fc2_;
  double dropout_;
};

// Macaron-style block: half-step FFN, self-attention, conv module, half-step
// FFN, final norm. All norms come from the factory so the decoder variant can
// swap in conditional layer norm.
class ConformerBlock : public Module {
 public:
  using NormFactory = std::function<std::unique_ptr<NormLayer>()>;
  ConformerBlock(int dim, int n_heads, int conv_kernel, int ff_mult,
                 double dropout, const NormFactory& make_norm,
                 std::mt19937_64& rng);
  Var forward(const Var& x, const Var& cond, const Ctx& ctx) const;

 private:
  std::unique_ptr<NormLayer> norm_ff1_, norm_mha_, norm_conv_, norm_ff2_,
      norm_out_;
  FeedForward ff1_, ff2_;
  MultiHeadAttention mha_;
  Linear conv_pw1_, conv_pw2_;
  DepthwiseConv1d conv_dw_;
  double dropout_;
};

// Two conv layers with ReLU + layer norm + dropout, then a linear head to a
// single per-position scalar.
class VariancePredictor : public Module {
 public:
  VariancePredictor(int dim, int kernel, double dropout, std::mt19937_64& rng);
  Var forward(const Var& x, const Ctx& ctx) const;  // [N x 1]

 private:
  Conv1dLayer conv1_, conv2_;
  LayerNorm ln1_, ln2_;
  Linear out_;
  double dropout_;
};

class Adam {
 public:
  Adam(std::vector<std::pair<std::string, Var>> params, double lr,
       double beta1, double beta2, double eps);
  void step();
  void zero_grad();
  long t() const { return t_; }

  // Checkpoint access
  const std::vector<std::pair<std::string, Var>>& params() const {
    return params_;
  }
  Mat& slot_m(size_t i) { return m_[i]; }
  Mat& slot_v(size_t i) { return v_[i]; }
  void set_t(long t) { t_ = t; }

 private:
  std::vector<std::pair<std::string, Var>> params_;
  std::vector<Mat> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

}  // namespace emtf::nn
