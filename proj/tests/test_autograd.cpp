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

#include "emtf/autograd.hpp"
#include "emtf/error.hpp"
#include "emtf/nn.hpp"
#include "test_util.hpp"

using namespace emtf;
using emtf::test::fd_gradient_gap;
using emtf::test::random_mat;

TEST_SUITE_BEGIN("autograd");

TEST_CASE("elementwise ops match finite differences") {
  auto rng = make_rng(7);
  ag::Mat x0 = random_mat(4, 5, rng);
  ag::Mat other = random_mat(4, 5, rng);

  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::sum_all(ag::mul(ag::add(x, ag::constant(other)), x));
        }, x0) < 1e-6);
  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::mean_all(ag::sub(ag::scale(x, 3.0), ag::constant(other)));
        }, x0) < 1e-6);
}

TEST_CASE("activations match finite differences") {
  auto rng = make_rng(8);
  ag::Mat x0 = random_mat(3, 4, rng);
  for (auto f : {ag::relu, ag::gelu, ag::tanh_act, ag::sigmoid}) {
    CHECK(fd_gradient_gap([&](const ag::Var& x) {
            return ag::sum_all(f(x));
          }, x0, 1e-6) < 1e-5);
  }
}

TEST_CASE("matmul family matches finite differences") {
  auto rng = make_rng(9);
  ag::Mat a0 = random_mat(3, 4, rng);
  ag::Mat b = random_mat(4, 2, rng);
  ag::Mat c = random_mat(3, 2, rng);

  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::sum_all(ag::matmul(x, ag::constant(b)));
        }, a0) < 1e-6);
  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::sum_all(ag::matmul_nt(ag::constant(c), x));
        }, random_mat(5, 2, rng)) < 1e-6);
  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::sum_all(ag::matmul_tn(x, ag::constant(a0)));
        }, random_mat(3, 2, rng)) < 1e-6);
  // both operands trainable
  ag::Var a = ag::leaf(a0, true);
  ag::Var bb = ag::leaf(b, true);
  ag::backward(ag::sum_all(ag::matmul(a, bb)));
  ag::Mat expect_da = ag::Mat::Ones(3, 2) * b.transpose();
  CHECK((a->grad - expect_da).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("broadcast ops match finite differences") {
  auto rng = make_rng(10);
  ag::Mat m = random_mat(4, 3, rng);
  ag::Mat v0 = random_mat(1, 3, rng);
  CHECK(fd_gradient_gap([&](const ag::Var& v) {
          return ag::sum_all(ag::add_row_broadcast(ag::constant(m), v));
        }, v0) < 1e-6);
  CHECK(fd_gradient_gap([&](const ag::Var& v) {
          return ag::sum_all(ag::mul_row_broadcast(ag::constant(m), v));
        }, v0) < 1e-6);
  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::sum_all(ag::mul_row_broadcast(x, ag::constant(v0)));
        }, m) < 1e-6);
}

TEST_CASE("layer norm and softmax match finite differences") {
  auto rng = make_rng(11);
  ag::Mat x0 = random_mat(3, 6, rng);
  ag::Mat w = random_mat(3, 6, rng);
  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::sum_all(ag::mul(ag::layer_norm_rows(x), ag::constant(w)));
        }, x0, 1e-6) < 1e-5);
  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::sum_all(ag::mul(ag::softmax_rows(x), ag::constant(w)));
        }, x0, 1e-6) < 1e-5);
}

TEST_CASE("structure ops match finite differences") {
  auto rng = make_rng(12);
  ag::Mat x0 = random_mat(5, 4, rng);
  ag::Mat w = random_mat(2, 4, rng);
  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::sum_all(ag::mul(ag::slice_rows(x, 1, 2), ag::constant(w)));
        }, x0) < 1e-6);
  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::sum_all(ag::concat_cols(x, ag::scale(x, 2.0)));
        }, x0) < 1e-6);
  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::sum_all(ag::mul(ag::shift_rows(x, 2), ag::constant(x0)));
        }, x0) < 1e-6);
  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::sum_all(ag::mul(ag::shift_rows(x, -2), ag::constant(x0)));
        }, x0) < 1e-6);
  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::scale(ag::cell(x, 2, 1), 3.0);
        }, x0) < 1e-6);
  ag::Mat row_probe = random_mat(1, 4, rng);
  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::sum_all(
              ag::mul(ag::mean_over_rows(x), ag::constant(row_probe)));
        }, x0) < 1e-6);
}

TEST_CASE("repeat_rows expands and backpropagates") {
  auto rng = make_rng(13);
  ag::Mat x0 = random_mat(3, 2, rng);
  std::vector<int> durs = {2, 0, 3};
  ag::Var x = ag::leaf(x0, true);
  ag::Var y = ag::repeat_rows(x, durs);
  CHECK(y->value.rows() == 5);
  CHECK((y->value.row(0) - x0.row(0)).norm() == 0.0);
  CHECK((y->value.row(2) - x0.row(2)).norm() == 0.0);
  ag::Mat w = random_mat(5, 2, rng);
  CHECK(fd_gradient_gap([&](const ag::Var& v) {
          return ag::sum_all(ag::mul(ag::repeat_rows(v, durs), ag::constant(w)));
        }, x0) < 1e-6);
}

TEST_CASE("embedding gathers rows and scatters gradients") {
  auto rng = make_rng(14);
  ag::Mat table0 = random_mat(6, 3, rng);
  std::vector<int> ids = {1, 4, 1};
  ag::Mat gather_probe = random_mat(3, 3, rng);
  CHECK(fd_gradient_gap([&](const ag::Var& t) {
          return ag::sum_all(
              ag::mul(ag::embedding_rows(t, ids), ag::constant(gather_probe)));
        }, table0) < 1e-6);
  CHECK_THROWS_AS(
      ag::embedding_rows(ag::leaf(table0, false), std::vector<int>{9}),
      Error);
}

TEST_CASE("weighted_sum differentiates both mats and weights") {
  auto rng = make_rng(15);
  std::vector<ag::Mat> mats0;
  for (int i = 0; i < 3; ++i) mats0.push_back(random_mat(4, 2, rng));
  ag::Mat w0 = random_mat(1, 3, rng);
  ag::Mat probe = random_mat(4, 2, rng);

  CHECK(fd_gradient_gap([&](const ag::Var& w) {
          std::vector<ag::Var> mats;
          for (const auto& m : mats0) mats.push_back(ag::constant(m));
          return ag::sum_all(ag::mul(ag::weighted_sum(mats, w), ag::constant(probe)));
        }, w0) < 1e-6);
  CHECK(fd_gradient_gap([&](const ag::Var& m1) {
          std::vector<ag::Var> mats = {ag::constant(mats0[0]), m1,
                                       ag::constant(mats0[2])};
          return ag::sum_all(ag::mul(ag::weighted_sum(mats, ag::constant(w0)),
                                     ag::constant(probe)));
        }, mats0[1]) < 1e-6);
}

TEST_CASE("conv1d matches finite differences") {
  auto rng = make_rng(16);
  const int kernel = 3, cin = 2, cout = 3;
  ag::Mat x0 = random_mat(6, cin, rng);
  ag::Mat w0 = random_mat(kernel * cin, cout, rng);
  ag::Mat b0 = random_mat(1, cout, rng);
  ag::Mat probe = random_mat(6, cout, rng);

  for (auto [pl, pr] : {std::pair{2, 0}, std::pair{0, 2}, std::pair{1, 1}}) {
    CHECK(fd_gradient_gap([&, pl = pl, pr = pr](const ag::Var& x) {
            return ag::sum_all(ag::mul(
                ag::conv1d(x, ag::constant(w0), ag::constant(b0), kernel, pl, pr),
                ag::constant(probe)));
          }, x0) < 1e-6);
    CHECK(fd_gradient_gap([&, pl = pl, pr = pr](const ag::Var& w) {
            return ag::sum_all(ag::mul(
                ag::conv1d(ag::constant(x0), w, ag::constant(b0), kernel, pl, pr),
                ag::constant(probe)));
          }, w0) < 1e-6);
  }
  // causal form depends only on past rows
  ag::Var x = ag::leaf(x0, true);
  ag::Var y = ag::conv1d(x, ag::constant(w0), ag::constant(b0), kernel, 2, 0);
  ag::backward(ag::cell(y, 2, 0));
  for (int r = 3; r < 6; ++r) CHECK(x->grad.row(r).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("depthwise_conv1d matches finite differences") {
  auto rng = make_rng(17);
  const int kernel = 5, ch = 3;
  ag::Mat x0 = random_mat(7, ch, rng);
  ag::Mat w0 = random_mat(kernel, ch, rng);
  ag::Mat b0 = random_mat(1, ch, rng);
  ag::Mat probe = random_mat(7, ch, rng);
  CHECK(fd_gradient_gap([&](const ag::Var& x) {
          return ag::sum_all(ag::mul(
              ag::depthwise_conv1d(x, ag::constant(w0), ag::constant(b0), 2, 2),
              ag::constant(probe)));
        }, x0) < 1e-6);
  CHECK(fd_gradient_gap([&](const ag::Var& w) {
          return ag::sum_all(ag::mul(
              ag::depthwise_conv1d(ag::constant(x0), w, ag::constant(b0), 2, 2),
              ag::constant(probe)));
        }, w0) < 1e-6);
}

TEST_CASE("losses match finite differences and closed forms") {
  auto rng = make_rng(18);
  ag::Mat a0 = random_mat(3, 4, rng);
  ag::Mat b0 = random_mat(3, 4, rng);
  CHECK(fd_gradient_gap([&](const ag::Var& a) {
          return ag::mse_loss(a, ag::constant(b0));
        }, a0) < 1e-6);
  CHECK(fd_gradient_gap([&](const ag::Var& a) {
          return ag::l1_loss(a, ag::constant(b0));
        }, a0, 1e-7) < 1e-5);
  CHECK(fd_gradient_gap([&](const ag::Var& l) {
          return ag::cross_entropy_logits(l, 2);
        }, random_mat(1, 5, rng)) < 1e-6);

  // closed forms
  ag::Var same = ag::constant(a0);
  CHECK(ag::l1_loss(same, ag::constant(a0))->value(0, 0) == 0.0);
  ag::Mat shifted = a0.array() + 1.0;
  CHECK(ag::l1_loss(ag::constant(shifted), ag::constant(a0))->value(0, 0) ==
        doctest::Approx(1.0).epsilon(1e-12));
  ag::Mat unif = ag::Mat::Zero(1, 8);
  CHECK(ag::cross_entropy_logits(ag::constant(unif), 3)->value(0, 0) ==
        doctest::Approx(std::log(8.0)).epsilon(1e-9));
}

TEST_CASE("straight_through passes gradient and exact values") {
  auto rng = make_rng(19);
  ag::Mat h0 = random_mat(4, 3, rng);
  ag::Mat q = random_mat(4, 3, rng);
  ag::Var h = ag::leaf(h0, true);
  ag::Var st = ag::straight_through(h, q);
  CHECK((st->value - q).cwiseAbs().maxCoeff() == 0.0);
  ag::Mat probe = random_mat(4, 3, rng);
  ag::backward(ag::sum_all(ag::mul(st, ag::constant(probe))));
  CHECK((h->grad - probe).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gradient accumulates across shared subexpressions") {
  ag::Mat x0(1, 1);
  x0(0, 0) = 3.0;
  ag::Var x = ag::leaf(x0, true);
  ag::Var y = ag::mul(x, x);  // x^2, dy/dx = 2x
  ag::backward(ag::sum_all(y));
  CHECK(x->grad(0, 0) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("dropout is identity in eval mode and rescales in train mode") {
  auto rng = make_rng(20);
  ag::Mat x0 = ag::Mat::Ones(50, 20);
  ag::Var x = ag::leaf(x0, false);
  auto rng2 = make_rng(21);
  ag::Var eval_out = ag::dropout(x, 0.5, rng2, false);
  CHECK(eval_out.get() == x.get());
  ag::Var train_out = ag::dropout(x, 0.5, rng2, true);
  // kept cells are scaled by 1/keep
  double mx = train_out->value.maxCoeff();
  CHECK(mx == doctest::Approx(2.0).epsilon(1e-12));
  double mean = train_out->value.mean();
  CHECK(mean == doctest::Approx(1.0).epsilon(0.2));
}

TEST_SUITE_END();
