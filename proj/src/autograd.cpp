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

#include "emtf/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "emtf/error.hpp"
#include "emtf/rng.hpp"

namespace emtf::ag {

namespace {

Var make_node(Mat value, std::vector<Var> parents,
              std::function<void(Node&)> backward_fn) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  if (n->requires_grad) n->backward_fn = std::move(backward_fn);
  return n;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
    fail(ErrorKind::kShape, std::string(op) + ": shape mismatch " +
                                std::to_string(a->value.rows()) + "x" +
                                std::to_string(a->value.cols()) + " vs " +
                                std::to_string(b->value.rows()) + "x" +
                                std::to_string(b->value.cols()));
}

}  // namespace

Var constant(Mat v) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = false;
  return n;
}

Var leaf(Mat v, bool requires_grad) {
  auto n = std::make_shared<Node>();
  n->value = std::move(v);
  n->requires_grad = requires_grad;
  return n;
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make_node(a->value + b->value, {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad += n.grad;
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad += n.grad;
    }
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return make_node(a->value - b->value, {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad += n.grad;
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad -= n.grad;
    }
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  return make_node(a->value.cwiseProduct(b->value), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad += n.grad.cwiseProduct(n.parents[1]->value);
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad += n.grad.cwiseProduct(n.parents[0]->value);
    }
  });
}

Var scale(const Var& a, double s) {
  return make_node(a->value * s, {a}, [s](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad += n.grad * s;
  });
}

Var add_row_broadcast(const Var& m, const Var& v) {
  if (v->value.rows() != 1 || v->value.cols() != m->value.cols())
    fail(ErrorKind::kShape, "add_row_broadcast: v must be [1 x cols(m)]");
  Mat out = m->value;
  out.rowwise() += v->value.row(0);
  return make_node(std::move(out), {m, v}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad += n.grad;
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad.row(0) += n.grad.colwise().sum();
    }
  });
}

Var mul_row_broadcast(const Var& m, const Var& v) {
  if (v->value.rows() != 1 || v->value.cols() != m->value.cols())
    fail(ErrorKind::kShape, "mul_row_broadcast: v must be [1 x cols(m)]");
  Mat out = m->value.array().rowwise() * v->value.row(0).array();
  return make_node(std::move(out), {m, v}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad.array() +=
          n.grad.array().rowwise() * n.parents[1]->value.row(0).array();
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad.row(0) +=
          n.grad.cwiseProduct(n.parents[0]->value).colwise().sum();
    }
  });
}

Var matmul(const Var& a, const Var& b) {
  if (a->value.cols() != b->value.rows())
    fail(ErrorKind::kShape, "matmul: inner dims disagree");
  return make_node(a->value * b->value, {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad.noalias() += n.grad * n.parents[1]->value.transpose();
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad.noalias() += n.parents[0]->value.transpose() * n.grad;
    }
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a->value.cols() != b->value.cols())
    fail(ErrorKind::kShape, "matmul_nt: inner dims disagree");
  return make_node(a->value * b->value.transpose(), {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad.noalias() += n.grad * n.parents[1]->value;
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad.noalias() += n.grad.transpose() * n.parents[0]->value;
    }
  });
}

Var matmul_tn(const Var& a, const Var& b) {
  if (a->value.rows() != b->value.rows())
    fail(ErrorKind::kShape, "matmul_tn: inner dims disagree");
  return make_node(a->value.transpose() * b->value, {a, b}, [](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad.noalias() += n.parents[1]->value * n.grad.transpose();
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad.noalias() += n.parents[0]->value * n.grad;
    }
  });
}

Var relu(const Var& x) {
  Mat out = x->value.cwiseMax(0.0);
  return make_node(std::move(out), {x}, [](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad.array() +=
        n.grad.array() * (n.parents[0]->value.array() > 0.0).cast<double>();
  });
}

Var gelu(const Var& x) {
  // Exact erf form; derivative 0.5*(1+erf(x/sqrt(2))) + x * pdf(x).
  Mat out = x->value.unaryExpr(
      [](double v) { return 0.5 * v * (1.0 + std::erf(v * M_SQRT1_2)); });
  return make_node(std::move(out), {x}, [](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad.array() +=
        n.grad.array() * n.parents[0]->value.unaryExpr([](double v) {
                            double cdf = 0.5 * (1.0 + std::erf(v * M_SQRT1_2));
                            double pdf = std::exp(-0.5 * v * v) * 0.3989422804014327;
                            return cdf + v * pdf;
                          }).array();
  });
}

Var tanh_act(const Var& x) {
  Mat out = x->value.array().tanh();
  return make_node(std::move(out), {x}, [](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad.array() +=
        n.grad.array() * (1.0 - n.value.array().square());
  });
}

Var sigmoid(const Var& x) {
  Mat out = x->value.unaryExpr(
      [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return make_node(std::move(out), {x}, [](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad.array() +=
        n.grad.array() * n.value.array() * (1.0 - n.value.array());
  });
}

Var layer_norm_rows(const Var& x, double eps) {
  const Mat& v = x->value;
  Eigen::VectorXd mean = v.rowwise().mean();
  Mat centered = v.colwise() - mean;
  Eigen::VectorXd var = centered.array().square().rowwise().mean();
  Eigen::VectorXd inv_std = (var.array() + eps).rsqrt();
  Mat out = centered.array().colwise() * inv_std.array();
  // closure keeps normalized output and inv_std for the backward pass
  auto inv = std::make_shared<Eigen::VectorXd>(std::move(inv_std));
  return make_node(std::move(out), {x}, [inv](Node& n) {
    n.parents[0]->ensure_grad();
    const Mat& y = n.value;
    const Mat& dy = n.grad;
    const double c = static_cast<double>(y.cols());
    Eigen::VectorXd mean_dy = dy.rowwise().mean();
    Eigen::VectorXd mean_dyy = dy.cwiseProduct(y).rowwise().sum() / c;
    Mat dx = dy;
    dx.colwise() -= mean_dy;
    dx -= (y.array().colwise() * mean_dyy.array()).matrix();
    dx = (dx.array().colwise() * inv->array()).matrix();
    n.parents[0]->grad += dx;
  });
}

Var softmax_rows(const Var& x) {
  const Mat& v = x->value;
  Mat out(v.rows(), v.cols());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    double m = v.row(r).maxCoeff();
    Eigen::ArrayXd e = (v.row(r).array() - m).exp();
    out.row(r) = (e / e.sum()).matrix();
  }
  return make_node(std::move(out), {x}, [](Node& n) {
    n.parents[0]->ensure_grad();
    const Mat& y = n.value;
    const Mat& dy = n.grad;
    Eigen::VectorXd dot = dy.cwiseProduct(y).rowwise().sum();
    Mat dx(y.rows(), y.cols());
    for (Eigen::Index r = 0; r < y.rows(); ++r)
      dx.row(r) =
          y.row(r).array() * (dy.row(r).array() - dot(r));
    n.parents[0]->grad += dx;
  });
}

Var slice_rows(const Var& x, int start, int len) {
  if (start < 0 || len < 0 || start + len > x->value.rows())
    fail(ErrorKind::kShape, "slice_rows: out of range");
  Mat out = x->value.middleRows(start, len);
  return make_node(std::move(out), {x}, [start, len](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad.middleRows(start, len) += n.grad;
  });
}

Var slice_cols(const Var& x, int start, int len) {
  if (start < 0 || len < 0 || start + len > x->value.cols())
    fail(ErrorKind::kShape, "slice_cols: out of range");
  Mat out = x->value.middleCols(start, len);
  return make_node(std::move(out), {x}, [start, len](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad.middleCols(start, len) += n.grad;
  });
}

Var concat_cols(const Var& a, const Var& b) {
  if (a->value.rows() != b->value.rows())
    fail(ErrorKind::kShape, "concat_cols: row mismatch");
  Mat out(a->value.rows(), a->value.cols() + b->value.cols());
  out.leftCols(a->value.cols()) = a->value;
  out.rightCols(b->value.cols()) = b->value;
  const int ca = static_cast<int>(a->value.cols());
  const int cb = static_cast<int>(b->value.cols());
  return make_node(std::move(out), {a, b}, [ca, cb](Node& n) {
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad += n.grad.leftCols(ca);
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad += n.grad.rightCols(cb);
    }
  });
}

Var mean_over_rows(const Var& x) {
  Mat out = x->value.colwise().mean();
  const double t = static_cast<double>(x->value.rows());
  return make_node(std::move(out), {x}, [t](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad += (Mat::Ones(n.parents[0]->value.rows(), 1) *
                           n.grad.row(0)) / t;
  });
}

Var sum_all(const Var& x) {
  Mat out(1, 1);
  out(0, 0) = x->value.sum();
  return make_node(std::move(out), {x}, [](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad.array() += n.grad(0, 0);
  });
}

Var mean_all(const Var& x) {
  const double n_elem = static_cast<double>(x->value.size());
  Mat out(1, 1);
  out(0, 0) = x->value.sum() / n_elem;
  return make_node(std::move(out), {x}, [n_elem](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad.array() += n.grad(0, 0) / n_elem;
  });
}

Var cell(const Var& x, int r, int c) {
  if (r < 0 || c < 0 || r >= x->value.rows() || c >= x->value.cols())
    fail(ErrorKind::kShape, "cell: out of range");
  Mat out(1, 1);
  out(0, 0) = x->value(r, c);
  return make_node(std::move(out), {x}, [r, c](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad(r, c) += n.grad(0, 0);
  });
}

Var shift_rows(const Var& x, int offset) {
  const int t = static_cast<int>(x->value.rows());
  Mat out = Mat::Zero(t, x->value.cols());
  if (offset >= 0) {
    int n = std::max(0, t - offset);
    if (n > 0) out.middleRows(offset, n) = x->value.topRows(n);
  } else {
    int n = std::max(0, t + offset);
    if (n > 0) out.topRows(n) = x->value.middleRows(-offset, n);
  }
  return make_node(std::move(out), {x}, [offset, t](Node& n) {
    n.parents[0]->ensure_grad();
    if (offset >= 0) {
      int m = std::max(0, t - offset);
      if (m > 0) n.parents[0]->grad.topRows(m) += n.grad.middleRows(offset, m);
    } else {
      int m = std::max(0, t + offset);
      if (m > 0) n.parents[0]->grad.middleRows(-offset, m) += n.grad.topRows(m);
    }
  });
}

Var repeat_rows(const Var& x, const std::vector<int>& durations) {
  if (static_cast<int>(durations.size()) != x->value.rows())
    fail(ErrorKind::kShape, "repeat_rows: durations size != rows");
  long total = 0;
  for (int d : durations) {
    if (d < 0) fail(ErrorKind::kInvalidInput, "repeat_rows: negative duration");
    total += d;
  }
  Mat out(total, x->value.cols());
  long r = 0;
  for (size_t i = 0; i < durations.size(); ++i)
    for (int k = 0; k < durations[i]; ++k) out.row(r++) = x->value.row(i);
  auto durs = std::make_shared<std::vector<int>>(durations);
  return make_node(std::move(out), {x}, [durs](Node& n) {
    n.parents[0]->ensure_grad();
    long r = 0;
    for (size_t i = 0; i < durs->size(); ++i)
      for (int k = 0; k < (*durs)[i]; ++k)
        n.parents[0]->grad.row(i) += n.grad.row(r++);
  });
}

Var embedding_rows(const Var& table, const std::vector<int>& ids) {
  Mat out(static_cast<long>(ids.size()), table->value.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table->value.rows())
      fail(ErrorKind::kRegistry,
           "embedding id " + std::to_string(ids[i]) + " out of range [0, " +
               std::to_string(table->value.rows()) + ")");
    out.row(i) = table->value.row(ids[i]);
  }
  auto idv = std::make_shared<std::vector<int>>(ids);
  return make_node(std::move(out), {table}, [idv](Node& n) {
    n.parents[0]->ensure_grad();
    for (size_t i = 0; i < idv->size(); ++i)
      n.parents[0]->grad.row((*idv)[i]) += n.grad.row(i);
  });
}

Var weighted_sum(const std::vector<Var>& mats, const Var& w) {
  if (mats.empty()) fail(ErrorKind::kShape, "weighted_sum: empty input");
  if (w->value.rows() != 1 ||
      w->value.cols() != static_cast<long>(mats.size()))
    fail(ErrorKind::kShape, "weighted_sum: w must be [1 x n]");
  Mat out = Mat::Zero(mats[0]->value.rows(), mats[0]->value.cols());
  for (size_t i = 0; i < mats.size(); ++i) {
    if (mats[i]->value.rows() != out.rows() ||
        mats[i]->value.cols() != out.cols())
      fail(ErrorKind::kShape, "weighted_sum: shape mismatch");
    out += w->value(0, static_cast<long>(i)) * mats[i]->value;
  }
  std::vector<Var> parents = mats;
  parents.push_back(w);
  const size_t n_mats = mats.size();
  return make_node(std::move(out), std::move(parents), [n_mats](Node& n) {
    const Var& w = n.parents[n_mats];
    for (size_t i = 0; i < n_mats; ++i) {
      if (n.parents[i]->requires_grad) {
        n.parents[i]->ensure_grad();
        n.parents[i]->grad += w->value(0, static_cast<long>(i)) * n.grad;
      }
    }
    if (w->requires_grad) {
      w->ensure_grad();
      for (size_t i = 0; i < n_mats; ++i)
        w->grad(0, static_cast<long>(i)) +=
            n.grad.cwiseProduct(n.parents[i]->value).sum();
    }
  });
}

namespace {

// Zero-padded patch matrix: row t holds [x[t - pad_left + k] for k in 0..K).
Mat im2col(const Mat& x, int kernel, int pad_left) {
  const int t = static_cast<int>(x.rows());
  const int c = static_cast<int>(x.cols());
  Mat patches = Mat::Zero(t, static_cast<long>(kernel) * c);
  for (int k = 0; k < kernel; ++k) {
    int src_lo = std::max(0, pad_left - k);          // output rows with in-range source
    int src_hi = std::min(t, t + pad_left - k);
    for (int r = src_lo; r < src_hi; ++r)
      patches.block(r, static_cast<long>(k) * c, 1, c) =
          x.row(r - pad_left + k);
  }
  return patches;
}

}  // namespace

Var conv1d(const Var& x, const Var& w, const Var& b, int kernel, int pad_left,
           int pad_right) {
  const int cin = static_cast<int>(x->value.cols());
  if (pad_left + pad_right != kernel - 1)
    fail(ErrorKind::kShape, "conv1d: pads must sum to kernel - 1");
  if (w->value.rows() != static_cast<long>(kernel) * cin)
    fail(ErrorKind::kShape, "conv1d: weight rows != kernel * cin");
  Mat patches = im2col(x->value, kernel, pad_left);
  Mat out = patches * w->value;
  out.rowwise() += b->value.row(0);
  auto pshared = std::make_shared<Mat>(std::move(patches));
  return make_node(std::move(out), {x, w, b},
                   [pshared, kernel, pad_left, cin](Node& n) {
    const Var& x = n.parents[0];
    const Var& w = n.parents[1];
    const Var& b = n.parents[2];
    if (w->requires_grad) {
      w->ensure_grad();
      w->grad.noalias() += pshared->transpose() * n.grad;
    }
    if (b->requires_grad) {
      b->ensure_grad();
      b->grad.row(0) += n.grad.colwise().sum();
    }
    if (x->requires_grad) {
      x->ensure_grad();
      Mat dpatches = n.grad * w->value.transpose();
      const int t = static_cast<int>(x->value.rows());
      for (int k = 0; k < kernel; ++k) {
        int lo = std::max(0, pad_left - k);
        int hi = std::min(t, t + pad_left - k);
        for (int r = lo; r < hi; ++r)
          x->grad.row(r - pad_left + k) +=
              dpatches.block(r, static_cast<long>(k) * cin, 1, cin);
      }
    }
  });
}

Var depthwise_conv1d(const Var& x, const Var& w, const Var& b, int pad_left,
                     int pad_right) {
  const int kernel = static_cast<int>(w->value.rows());
  const int t = static_cast<int>(x->value.rows());
  if (pad_left + pad_right != kernel - 1)
    fail(ErrorKind::kShape, "depthwise_conv1d: pads must sum to kernel - 1");
  if (w->value.cols() != x->value.cols())
    fail(ErrorKind::kShape, "depthwise_conv1d: channel mismatch");
  Mat out = Mat::Zero(t, x->value.cols());
  out.rowwise() += b->value.row(0);
  for (int k = 0; k < kernel; ++k) {
    int lo = std::max(0, pad_left - k);
    int hi = std::min(t, t + pad_left - k);
    for (int r = lo; r < hi; ++r)
      out.row(r).array() +=
          x->value.row(r - pad_left + k).array() * w->value.row(k).array();
  }
  return make_node(std::move(out), {x, w, b}, [kernel, pad_left, t](Node& n) {
    const Var& x = n.parents[0];
    const Var& w = n.parents[1];
    const Var& b = n.parents[2];
    if (b->requires_grad) {
      b->ensure_grad();
      b->grad.row(0) += n.grad.colwise().sum();
    }
    for (int k = 0; k < kernel; ++k) {
      int lo = std::max(0, pad_left - k);
      int hi = std::min(t, t + pad_left - k);
      for (int r = lo; r < hi; ++r) {
        if (w->requires_grad) {
          w->ensure_grad();
          w->grad.row(k).array() +=
              n.grad.row(r).array() * x->value.row(r - pad_left + k).array();
        }
        if (x->requires_grad) {
          x->ensure_grad();
          x->grad.row(r - pad_left + k).array() +=
              n.grad.row(r).array() * w->value.row(k).array();
        }
      }
    }
  });
}

Var dropout(const Var& x, double p, std::mt19937_64& rng, bool training) {
  if (!training || p <= 0.0) return x;
  const double keep = 1.0 - p;
  Mat mask(x->value.rows(), x->value.cols());
  for (Eigen::Index r = 0; r < mask.rows(); ++r)
    for (Eigen::Index c = 0; c < mask.cols(); ++c)
      mask(r, c) = uniform01(rng) < keep ? 1.0 / keep : 0.0;
  auto m = std::make_shared<Mat>(std::move(mask));
  Mat out = x->value.cwiseProduct(*m);
  return make_node(std::move(out), {x}, [m](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad += n.grad.cwiseProduct(*m);
  });
}

Var mse_loss(const Var& a, const Var& b) {
  check_same_shape(a, b, "mse_loss");
  const double n_elem = static_cast<double>(a->value.size());
  Mat diff = a->value - b->value;
  Mat out(1, 1);
  out(0, 0) = diff.array().square().sum() / n_elem;
  auto d = std::make_shared<Mat>(std::move(diff));
  return make_node(std::move(out), {a, b}, [d, n_elem](Node& n) {
    const double g = n.grad(0, 0) * 2.0 / n_elem;
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad += g * (*d);
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad -= g * (*d);
    }
  });
}

Var l1_loss(const Var& a, const Var& b) {
  check_same_shape(a, b, "l1_loss");
  const double n_elem = static_cast<double>(a->value.size());
  Mat diff = a->value - b->value;
  Mat out(1, 1);
  out(0, 0) = diff.array().abs().sum() / n_elem;
  auto d = std::make_shared<Mat>(std::move(diff));
  return make_node(std::move(out), {a, b}, [d, n_elem](Node& n) {
    const double g = n.grad(0, 0) / n_elem;
    Mat sgn = d->unaryExpr([](double v) {
      return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    });
    if (n.parents[0]->requires_grad) {
      n.parents[0]->ensure_grad();
      n.parents[0]->grad += g * sgn;
    }
    if (n.parents[1]->requires_grad) {
      n.parents[1]->ensure_grad();
      n.parents[1]->grad -= g * sgn;
    }
  });
}

Var cross_entropy_logits(const Var& logits, int label) {
  if (logits->value.rows() != 1)
    fail(ErrorKind::kShape, "cross_entropy_logits: expected [1 x C] logits");
  const int c = static_cast<int>(logits->value.cols());
  if (label < 0 || label >= c)
    fail(ErrorKind::kInvalidInput,
         "label " + std::to_string(label) + " out of range for " +
             std::to_string(c) + " classes");
  double m = logits->value.row(0).maxCoeff();
  Eigen::ArrayXd e = (logits->value.row(0).array() - m).exp();
  double z = e.sum();
  Mat prob = (e / z).matrix().transpose();
  Mat out(1, 1);
  out(0, 0) = std::log(z) + m - logits->value(0, label);
  auto p = std::make_shared<Mat>(std::move(prob));
  return make_node(std::move(out), {logits}, [p, label](Node& n) {
    n.parents[0]->ensure_grad();
    Mat d = p->transpose();
    d(0, label) -= 1.0;
    n.parents[0]->grad += n.grad(0, 0) * d;
  });
}

Var straight_through(const Var& h, const Mat& q) {
  if (q.rows() != h->value.rows() || q.cols() != h->value.cols())
    fail(ErrorKind::kShape, "straight_through: shape mismatch");
  return make_node(q, {h}, [](Node& n) {
    n.parents[0]->ensure_grad();
    n.parents[0]->grad += n.grad;
  });
}

void backward(const Var& root) {
  if (root->value.rows() != 1 || root->value.cols() != 1)
    fail(ErrorKind::kShape, "backward: root must be scalar");
  // Iterative post-order DFS; traversal follows parent order so the sweep is
  // fully deterministic regardless of allocation addresses.
  std::vector<Node*> order;
  std::vector<std::pair<Node*, size_t>> stack;
  std::unordered_set<Node*> visited;
  stack.emplace_back(root.get(), 0);
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx].get();
      ++idx;
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->ensure_grad();
  root->grad(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && n->grad_ready) n->backward_fn(*n);
  }
}

}  // namespace emtf::ag
