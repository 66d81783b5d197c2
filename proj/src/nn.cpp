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

#include "emtf/nn.hpp"

#include <cmath>

#include "emtf/error.hpp"
#include "emtf/rng.hpp"

namespace emtf::nn {

Mat xavier_init(int rows, int cols, std::mt19937_64& rng) {
  double bound = std::sqrt(6.0 / (rows + cols));
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = uniform(rng, -bound, bound);
  return m;
}

Mat normal_init(int rows, int cols, double stddev, std::mt19937_64& rng) {
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = stddev * normal(rng);
  return m;
}

void Module::collect_parameters(
    const std::string& prefix,
    std::vector<std::pair<std::string, Var>>* out) const {
  for (const auto& [name, var] : params_) out->emplace_back(prefix + name, var);
  for (const auto& [name, child] : children_)
    child->collect_parameters(prefix + name + ".", out);
}

void Module::collect_buffers(
    const std::string& prefix,
    std::vector<std::pair<std::string, Mat*>>* out) const {
  for (const auto& [name, buf] : buffers_) out->emplace_back(prefix + name, buf);
  for (const auto& [name, child] : children_)
    child->collect_buffers(prefix + name + ".", out);
}

std::vector<std::pair<std::string, Var>> Module::named_parameters() const {
  std::vector<std::pair<std::string, Var>> out;
  collect_parameters("", &out);
  return out;
}

Var Module::add_param(const std::string& name, Mat init) {
  Var v = ag::leaf(std::move(init), true);
  params_.emplace_back(name, v);
  return v;
}

void Module::add_buffer(const std::string& name, Mat* buffer) {
  buffers_.emplace_back(name, buffer);
}

void Module::add_child(const std::string& name, Module* child) {
  children_.emplace_back(name, child);
}

Linear::Linear(int in_dim, int out_dim, std::mt19937_64& rng, bool zero_init,
               double bias_init) {
  Mat w = zero_init ? Mat::Zero(in_dim, out_dim)
                    : xavier_init(in_dim, out_dim, rng);
  w_ = add_param("w", std::move(w));
  b_ = add_param("b", Mat::Constant(1, out_dim, bias_init));
}

Var Linear::forward(const Var& x) const {
  return ag::add_row_broadcast(ag::matmul(x, w_), b_);
}

Embedding::Embedding(int n_rows, int dim, std::mt19937_64& rng,
                     double stddev) {
  table_ = add_param("table", normal_init(n_rows, dim, stddev, rng));
}

Var Embedding::forward(const std::vector<int>& ids) const {
  return ag::embedding_rows(table_, ids);
}

Var Embedding::row(int id) const { return ag::embedding_rows(table_, {id}); }

Conv1dLayer::Conv1dLayer(int in_dim, int out_dim, int kernel, int pad_left,
                         int pad_right, std::mt19937_64& rng)
    : kernel_(kernel), pad_left_(pad_left), pad_right_(pad_right) {
  w_ = add_param("w", xavier_init(kernel * in_dim, out_dim, rng));
  b_ = add_param("b", Mat::Zero(1, out_dim));
}

Var Conv1dLayer::forward(const Var& x) const {
  return ag::conv1d(x, w_, b_, kernel_, pad_left_, pad_right_);
}

DepthwiseConv1d::DepthwiseConv1d(int channels, int kernel,
                                 std::mt19937_64& rng)
    : pad_left_((kernel - 1) / 2), pad_right_(kernel / 2) {
  double bound = std::sqrt(1.0 / kernel);
  Mat w(kernel, channels);
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      w(r, c) = uniform(rng, -bound, bound);
  w_ = add_param("w", std::move(w));
  b_ = add_param("b", Mat::Zero(1, channels));
}

Var DepthwiseConv1d::forward(const Var& x) const {
  return ag::depthwise_conv1d(x, w_, b_, pad_left_, pad_right_);
}

LayerNorm::LayerNorm(int dim) {
  gain_ = add_param("g", Mat::Ones(1, dim));
  bias_ = add_param("b", Mat::Zero(1, dim));
}

Var LayerNorm::apply(const Var& x, const Var& /*cond*/,
                     const Ctx& /*ctx*/) const {
  Var normed = ag::layer_norm_rows(x);
  return ag::add_row_broadcast(ag::mul_row_broadcast(normed, gain_), bias_);
}

CondLayerNorm::CondLayerNorm(int dim, int cond_dim, std::mt19937_64& rng)
    : gain_fc_(cond_dim, dim, rng, /*zero_init=*/true, /*bias_init=*/1.0),
      bias_fc_(cond_dim, dim, rng, /*zero_init=*/true, /*bias_init=*/0.0) {
  add_child("gain_fc", &gain_fc_);
  add_child("bias_fc", &bias_fc_);
}

Var CondLayerNorm::apply(const Var& x, const Var& cond,
                         const Ctx& /*ctx*/) const {
  if (!cond) fail(ErrorKind::kShape, "conditional layer norm needs cond");
  Var gamma = gain_fc_.forward(cond);  // [1 x dim]
  Var beta = bias_fc_.forward(cond);
  Var normed = ag::layer_norm_rows(x);
  return ag::add_row_broadcast(ag::mul_row_broadcast(normed, gamma), beta);
}

MultiHeadAttention::MultiHeadAttention(int dim, int n_heads,
                                       std::mt19937_64& rng)
    : wq_(dim, dim, rng),
      wk_(dim, dim, rng),
      wv_(dim, dim, rng),
      wo_(dim, dim, rng),
      n_heads_(n_heads),
      head_dim_(dim / n_heads) {
  if (dim % n_heads != 0)
    fail(ErrorKind::kConfig, "hidden_dim must be divisible by n_heads");
  add_child("wq", &wq_);
  add_child("wk", &wk_);
  add_child("wv", &wv_);
  add_child("wo", &wo_);
}

Var MultiHeadAttention::forward(const Var& x, const Ctx& /*ctx*/) const {
  Var q = wq_.forward(x);
  Var k = wk_.forward(x);
  Var v = wv_.forward(x);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim_));
  Var out;
  for (int h = 0; h < n_heads_; ++h) {
    Var qh = ag::slice_cols(q, h * head_dim_, head_dim_);
    Var kh = ag::slice_cols(k, h * head_dim_, head_dim_);
    Var vh = ag::slice_cols(v, h * head_dim_, head_dim_);
    Var scores = ag::scale(ag::matmul_nt(qh, kh), inv_sqrt);
    Var attn = ag::softmax_rows(scores);
    Var ctx_h = ag::matmul(attn, vh);
    out = out ? ag::concat_cols(out, ctx_h) : ctx_h;
  }
  return wo_.forward(out);
}

FeedForward::FeedForward(int dim, int hidden, double dropout,
                         std::mt19937_64& rng)
    : fc1_(dim, hidden, rng), fc2_(hidden, dim, rng), dropout_(dropout) {
  add_child("fc1", &fc1_);
  add_child("fc2", &fc2_);
}

Var FeedForward::forward(const Var& x, const Ctx& ctx) const {
  Var h = ag::gelu(fc1_.forward(x));
  if (ctx.training && dropout_ > 0.0)
    h = ag::dropout(h, dropout_, *ctx.rng, true);
  Var out = fc2_.forward(h);
  if (ctx.training && dropout_ > 0.0)
    out = ag::dropout(out, dropout_, *ctx.rng, true);
  return out;
}

ConformerBlock::ConformerBlock(int dim, int n_heads, int conv_kernel,
                               int ff_mult, double dropout,
                               const NormFactory& make_norm,
                               std::mt19937_64& rng)
    : norm_ff1_(make_norm()),
      norm_mha_(make_norm()),
      norm_conv_(make_norm()),
      norm_ff2_(make_norm()),
      norm_out_(make_norm()),
      ff1_(dim, dim * ff_mult, dropout, rng),
      ff2_(dim, dim * ff_mult, dropout, rng),
      mha_(dim, n_heads, rng),
      conv_pw1_(dim, dim, rng),
      conv_pw2_(dim, dim, rng),
      conv_dw_(dim, conv_kernel, rng),
      dropout_(dropout) {
  add_child("norm_ff1", norm_ff1_.get());
  add_child("norm_mha", norm_mha_.get());
  add_child("norm_conv", norm_conv_.get());
  add_child("norm_ff2", norm_ff2_.get());
  add_child("norm_out", norm_out_.get());
  add_child("ff1", &ff1_);
  add_child("ff2", &ff2_);
  add_child("mha", &mha_);
  add_child("conv_pw1", &conv_pw1_);
  add_child("conv_pw2", &conv_pw2_);
  add_child("conv_dw", &conv_dw_);
}

Var ConformerBlock::forward(const Var& x, const Var& cond,
                            const Ctx& ctx) const {
  Var h = ag::add(x, ag::scale(ff1_.forward(norm_ff1_->apply(x, cond, ctx), ctx), 0.5));
  h = ag::add(h, mha_.forward(norm_mha_->apply(h, cond, ctx), ctx));
  Var c = conv_pw1_.forward(norm_conv_->apply(h, cond, ctx));
  c = ag::gelu(c);
  c = conv_dw_.forward(c);
  c = ag::gelu(c);
  c = conv_pw2_.forward(c);
  if (ctx.training && dropout_ > 0.0) c = ag::dropout(c, dropout_, *ctx.rng, true);
  h = ag::add(h, c);
  h = ag::add(h, ag::scale(ff2_.forward(norm_ff2_->apply(h, cond, ctx), ctx), 0.5));
  return norm_out_->apply(h, cond, ctx);
}

VariancePredictor::VariancePredictor(int dim, int kernel, double dropout,
                                     std::mt19937_64& rng)
    : conv1_(dim, dim, kernel, (kernel - 1) / 2, kernel / 2, rng),
      conv2_(dim, dim, kernel, (kernel - 1) / 2, kernel / 2, rng),
      ln1_(dim),
      ln2_(dim),
      out_(dim, 1, rng),
      dropout_(dropout) {
  add_child("conv1", &conv1_);
  add_child("conv2", &conv2_);
  add_child("ln1", &ln1_);
  add_child("ln2", &ln2_);
  add_child("out", &out_);
}

Var VariancePredictor::forward(const Var& x, const Ctx& ctx) const {
  Var h = ag::relu(conv1_.forward(x));
  h = ln1_.apply(h, nullptr, ctx);
  if (ctx.training && dropout_ > 0.0) h = ag::dropout(h, dropout_, *ctx.rng, true);
  h = ag::relu(conv2_.forward(h));
  h = ln2_.apply(h, nullptr, ctx);
  if (ctx.training && dropout_ > 0.0) h = ag::dropout(h, dropout_, *ctx.rng, true);
  return out_.forward(h);
}

Adam::Adam(std::vector<std::pair<std::string, Var>> params, double lr,
           double beta1, double beta2, double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& [name, p] : params_) {
    m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Var& p = params_[i].second;
    if (!p->grad_ready) continue;  // parameter unused this step
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * p->grad;
    v_[i] = (beta2_ * v_[i].array() +
             (1.0 - beta2_) * p->grad.array().square()).matrix();
    Mat m_hat = m_[i] / bc1;
    Mat v_hat = v_[i] / bc2;
    p->value.array() -= lr_ * m_hat.array() / (v_hat.array().sqrt() + eps_);
  }
}

void Adam::zero_grad() {
  // Mark stale; ensure_grad() re-zeros lazily on next use. Parameters that
  // receive no gradient in a step are skipped entirely by step().
  for (auto& [name, p] : params_) p->grad_ready = false;
}

}  // namespace emtf::nn
