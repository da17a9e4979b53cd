// Copyright 2026 The tfdl authors
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

#include "tfdl/ad.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace tfdl::ad {
namespace {

std::atomic<std::uint64_t> g_order{0};
std::atomic<std::uint64_t> g_zero_norm_count{0};
thread_local bool g_no_grad = false;

Var make_node(Mat value, std::vector<Var> parents, std::function<void(Node&)> backfn) {
  Var v;
  v.node_ = std::make_shared<Node>();
  v.node_->value = std::move(value);
  v.node_->order = g_order.fetch_add(1, std::memory_order_relaxed);
  bool needs = false;
  for (auto& p : parents) {
    needs = needs || p.requires_grad();
    v.node_->parents.push_back(p.node_);
  }
  v.node_->requires_grad = needs && !g_no_grad;
  if (v.node_->requires_grad) v.node_->backfn = std::move(backfn);
  return v;
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(std::string(op) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                std::to_string(b.cols()) + ")");
}

constexpr double kSeluLambda = 1.0507009873554805;
constexpr double kSeluAlpha = 1.6732632423543772;
constexpr double kInvSqrt2 = 0.7071067811865476;
constexpr double kInvSqrt2Pi = 0.3989422804014327;
constexpr double kNormEps = 1e-12;

}  // namespace

double Var::item() const {
  if (rows() != 1 || cols() != 1) throw Error("Var::item: node is not scalar");
  return value()(0, 0);
}

Var constant(Mat value) {
  Var v;
  v.node_ = std::make_shared<Node>();
  v.node_->value = std::move(value);
  v.node_->order = g_order.fetch_add(1, std::memory_order_relaxed);
  return v;
}

Var constant_scalar(double value) {
  Mat m(1, 1);
  m(0, 0) = value;
  return constant(std::move(m));
}

Var param(Mat value) {
  Var v = constant(std::move(value));
  v.node_->requires_grad = true;
  return v;
}

NoGradGuard::NoGradGuard() : previous_(g_no_grad) { g_no_grad = true; }
NoGradGuard::~NoGradGuard() { g_no_grad = previous_; }

void backward(const Var& root) {
  if (!root.valid()) throw Error("backward: empty root");
  if (root.rows() != 1 || root.cols() != 1) throw Error("backward: root must be scalar");
  if (!root.requires_grad()) return;

  std::vector<Node*> nodes;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.node_.get()};
  seen.insert(root.node_.get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    nodes.push_back(n);
    for (auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(nodes.begin(), nodes.end(),
            [](const Node* a, const Node* b) { return a->order > b->order; });

  root.node_->ensure_grad()(0, 0) += 1.0;
  for (Node* n : nodes) {
    if (n->backfn && n->grad.size() != 0) n->backfn(*n);
  }
}

// ---- elementwise / shape ops ----------------------------------------------

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make_node(a.value() + b.value(), {a, b}, [a, b](Node& self) mutable {
    if (a.requires_grad()) a.mutable_grad() += self.grad;
    if (b.requires_grad()) b.mutable_grad() += self.grad;
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return make_node(a.value() - b.value(), {a, b}, [a, b](Node& self) mutable {
    if (a.requires_grad()) a.mutable_grad() += self.grad;
    if (b.requires_grad()) b.mutable_grad() -= self.grad;
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  return make_node(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Node& self) mutable {
    if (a.requires_grad()) a.mutable_grad() += self.grad.cwiseProduct(b.value());
    if (b.requires_grad()) b.mutable_grad() += self.grad.cwiseProduct(a.value());
  });
}

Var scale(const Var& a, double s) {
  return make_node(a.value() * s, {a}, [a, s](Node& self) mutable {
    a.mutable_grad() += self.grad * s;
  });
}

Var add_scalar(const Var& a, double s) {
  return make_node(a.value().array() + s, {a}, [a](Node& self) mutable {
    a.mutable_grad() += self.grad;
  });
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows())
    throw Error("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                std::to_string(b.rows()) + ")");
  return make_node(a.value() * b.value(), {a, b}, [a, b](Node& self) mutable {
    if (a.requires_grad()) a.mutable_grad().noalias() += self.grad * b.value().transpose();
    if (b.requires_grad()) b.mutable_grad().noalias() += a.value().transpose() * self.grad;
  });
}

Var transpose(const Var& a) {
  return make_node(a.value().transpose(), {a}, [a](Node& self) mutable {
    a.mutable_grad() += self.grad.transpose();
  });
}

Var add_rowvec(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw Error("add_rowvec: bad row shape");
  return make_node(a.value().rowwise() + row.value().row(0), {a, row},
                   [a, row](Node& self) mutable {
                     if (a.requires_grad()) a.mutable_grad() += self.grad;
                     if (row.requires_grad())
                       row.mutable_grad().row(0) += self.grad.colwise().sum();
                   });
}

Var mul_rowvec(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw Error("mul_rowvec: bad row shape");
  Mat out = a.value().array().rowwise() * row.value().row(0).array();
  return make_node(std::move(out), {a, row}, [a, row](Node& self) mutable {
    if (a.requires_grad())
      a.mutable_grad().array() += self.grad.array().rowwise() * row.value().row(0).array();
    if (row.requires_grad())
      row.mutable_grad().row(0) += self.grad.cwiseProduct(a.value()).colwise().sum();
  });
}

Var add_colvec(const Var& a, const Var& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) throw Error("add_colvec: bad column shape");
  return make_node(a.value().colwise() + col.value().col(0), {a, col},
                   [a, col](Node& self) mutable {
                     if (a.requires_grad()) a.mutable_grad() += self.grad;
                     if (col.requires_grad())
                       col.mutable_grad().col(0) += self.grad.rowwise().sum();
                   });
}

Var mul_colvec(const Var& a, const Var& col) {
  if (col.cols() != 1 || col.rows() != a.rows()) throw Error("mul_colvec: bad column shape");
  Mat out = a.value().array().colwise() * col.value().col(0).array();
  return make_node(std::move(out), {a, col}, [a, col](Node& self) mutable {
    if (a.requires_grad())
      a.mutable_grad().array() += self.grad.array().colwise() * col.value().col(0).array();
    if (col.requires_grad())
      col.mutable_grad().col(0) += self.grad.cwiseProduct(a.value()).rowwise().sum();
  });
}

Var concat_cols(const Var& a, const Var& b) {
  if (a.rows() != b.rows()) throw Error("concat_cols: row count mismatch");
  Mat out(a.rows(), a.cols() + b.cols());
  out.leftCols(a.cols()) = a.value();
  out.rightCols(b.cols()) = b.value();
  const Eigen::Index na = a.cols();
  return make_node(std::move(out), {a, b}, [a, b, na](Node& self) mutable {
    if (a.requires_grad()) a.mutable_grad() += self.grad.leftCols(na);
    if (b.requires_grad()) b.mutable_grad() += self.grad.rightCols(self.grad.cols() - na);
  });
}

Var vstack(const std::vector<Var>& parts) {
  if (parts.empty()) throw Error("vstack: no parts");
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front().cols();
  for (const auto& p : parts) {
    if (p.cols() != cols) throw Error("vstack: column count mismatch");
    rows += p.rows();
  }
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  auto captured = parts;
  return make_node(std::move(out), parts, [captured](Node& self) mutable {
    Eigen::Index at = 0;
    for (auto& p : captured) {
      if (p.requires_grad()) p.mutable_grad() += self.grad.middleRows(at, p.rows());
      at += p.rows();
    }
  });
}

Var slice_rows(const Var& a, Eigen::Index first, Eigen::Index count) {
  if (first < 0 || count < 1 || first + count > a.rows())
    throw Error("slice_rows: range out of bounds");
  return make_node(a.value().middleRows(first, count), {a}, [a, first, count](Node& self) mutable {
    a.mutable_grad().middleRows(first, count) += self.grad;
  });
}

Var gather_rows(const Var& a, const std::vector<int>& indices) {
  Mat out(static_cast<Eigen::Index>(indices.size()), a.cols());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= a.rows()) throw Error("gather_rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(indices[i]);
  }
  return make_node(std::move(out), {a}, [a, indices](Node& self) mutable {
    for (std::size_t i = 0; i < indices.size(); ++i)
      a.mutable_grad().row(indices[i]) += self.grad.row(static_cast<Eigen::Index>(i));
  });
}

Var reshape(const Var& a, Eigen::Index rows, Eigen::Index cols) {
  if (rows * cols != a.rows() * a.cols()) throw Error("reshape: element count mismatch");
  Mat out = Mat::Map(a.value().data(), rows, cols);
  return make_node(std::move(out), {a}, [a](Node& self) mutable {
    a.mutable_grad() += Mat::Map(self.grad.data(), a.rows(), a.cols());
  });
}

Var spectral_mean(const Var& a, int channels, int frames, int bins) {
  if (a.rows() != channels || a.cols() != static_cast<Eigen::Index>(frames) * bins)
    throw Error("spectral_mean: shape does not match dims");
  const double inv_c = 1.0 / channels;
  Mat out = Mat::Zero(frames, bins);
  for (int c = 0; c < channels; ++c)
    out += Mat::Map(a.value().row(c).data(), frames, bins);
  out *= inv_c;
  return make_node(std::move(out), {a}, [a, channels, frames, bins, inv_c](Node& self) mutable {
    Mat flat = Mat::Map(self.grad.data(), 1, static_cast<Eigen::Index>(frames) * bins) * inv_c;
    for (int c = 0; c < channels; ++c) a.mutable_grad().row(c) += flat.row(0);
  });
}

Var channel_mean(const Var& a, int channels, int frames, int bins) {
  if (a.rows() != channels || a.cols() != static_cast<Eigen::Index>(frames) * bins)
    throw Error("channel_mean: shape does not match dims");
  const double inv_s = 1.0 / bins;
  Mat out(frames, channels);
  for (int c = 0; c < channels; ++c)
    out.col(c) = Mat::Map(a.value().row(c).data(), frames, bins).rowwise().sum() * inv_s;
  return make_node(std::move(out), {a}, [a, channels, frames, bins, inv_s](Node& self) mutable {
    for (int c = 0; c < channels; ++c) {
      for (int t = 0; t < frames; ++t) {
        const double g = self.grad(t, c) * inv_s;
        a.mutable_grad().row(c).segment(static_cast<Eigen::Index>(t) * bins, bins).array() += g;
      }
    }
  });
}

// ---- nonlinearities --------------------------------------------------------

Var sigmoid(const Var& a) {
  Mat out = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return make_node(std::move(out), {a}, [a](Node& self) mutable {
    a.mutable_grad().array() +=
        self.grad.array() * self.value.array() * (1.0 - self.value.array());
  });
}

Var gelu(const Var& a) {
  Mat out = a.value();
  out = out.unaryExpr([](double x) { return 0.5 * x * std::erfc(-x * kInvSqrt2); });
  return make_node(std::move(out), {a}, [a](Node& self) mutable {
    a.mutable_grad().array() += self.grad.array() * a.value().array().unaryExpr([](double x) {
      const double cdf = 0.5 * std::erfc(-x * kInvSqrt2);
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      return cdf + x * pdf;
    });
  });
}

Var selu(const Var& a) {
  Mat out = a.value().unaryExpr([](double x) {
    return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * (std::exp(x) - 1.0);
  });
  return make_node(std::move(out), {a}, [a](Node& self) mutable {
    a.mutable_grad().array() += self.grad.array() * a.value().array().unaryExpr([](double x) {
      return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x);
    });
  });
}

Var relu(const Var& a) {
  Mat out = a.value().cwiseMax(0.0);
  return make_node(std::move(out), {a}, [a](Node& self) mutable {
    a.mutable_grad().array() +=
        self.grad.array() * (a.value().array() > 0.0).cast<double>();
  });
}

Var square(const Var& a) {
  return make_node(a.value().cwiseProduct(a.value()), {a}, [a](Node& self) mutable {
    a.mutable_grad().array() += 2.0 * self.grad.array() * a.value().array();
  });
}

Var softmax_rows(const Var& a) {
  Mat out = a.value();
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    const double mx = out.row(r).maxCoeff();
    out.row(r) = (out.row(r).array() - mx).exp();
    out.row(r) /= out.row(r).sum();
  }
  return make_node(std::move(out), {a}, [a](Node& self) mutable {
    // dX = Y .* (dY - rowsum(dY .* Y))
    Mat prod = self.grad.cwiseProduct(self.value);
    Vec row_sums = prod.rowwise().sum();
    a.mutable_grad().array() +=
        self.value.array() * (self.grad.array().colwise() - row_sums.array());
  });
}

Var norm_rows(const Var& a, double eps) {
  const Eigen::Index cols = a.cols();
  Vec mu = a.value().rowwise().mean();
  Mat centered = a.value().colwise() - mu;
  Vec var = centered.cwiseProduct(centered).rowwise().mean();
  Vec inv_std = (var.array() + eps).rsqrt();
  Mat out = centered.array().colwise() * inv_std.array();
  return make_node(std::move(out), {a}, [a, inv_std, cols](Node& self) mutable {
    // dx = (dy - mean(dy) - y * mean(dy .* y)) * inv_std, per row
    Vec mean_dy = self.grad.rowwise().mean();
    Vec mean_dyy = self.grad.cwiseProduct(self.value).rowwise().mean();
    Mat dx = ((self.grad.array().colwise() - mean_dy.array()) -
              self.value.array().colwise() * mean_dyy.array())
                 .colwise() *
             inv_std.array();
    a.mutable_grad() += dx.matrix();
  });
}

// ---- reductions ------------------------------------------------------------

Var sum(const Var& a) {
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  return make_node(std::move(out), {a}, [a](Node& self) mutable {
    a.mutable_grad().array() += self.grad(0, 0);
  });
}

Var mean(const Var& a) {
  const double inv_n = 1.0 / static_cast<double>(a.rows() * a.cols());
  Mat out(1, 1);
  out(0, 0) = a.value().sum() * inv_n;
  return make_node(std::move(out), {a}, [a, inv_n](Node& self) mutable {
    a.mutable_grad().array() += self.grad(0, 0) * inv_n;
  });
}

Var max_over_cols(const Var& a) {
  Mat out(a.rows(), 1);
  std::vector<Eigen::Index> argmax(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    Eigen::Index c;
    out(r, 0) = a.value().row(r).maxCoeff(&c);
    argmax[static_cast<std::size_t>(r)] = c;
  }
  return make_node(std::move(out), {a}, [a, argmax](Node& self) mutable {
    for (Eigen::Index r = 0; r < self.grad.rows(); ++r)
      a.mutable_grad()(r, argmax[static_cast<std::size_t>(r)]) += self.grad(r, 0);
  });
}

// ---- convolution -----------------------------------------------------------

namespace {

Mat im2col(const Mat& x, const Conv2dSpec& s) {
  const int oh = s.out_height();
  const int ow = s.out_width();
  Mat col = Mat::Zero(static_cast<Eigen::Index>(s.in_channels) * s.kernel_h * s.kernel_w,
                      static_cast<Eigen::Index>(oh) * ow);
  for (int c = 0; c < s.in_channels; ++c) {
    for (int ki = 0; ki < s.kernel_h; ++ki) {
      for (int kj = 0; kj < s.kernel_w; ++kj) {
        const Eigen::Index row = (static_cast<Eigen::Index>(c) * s.kernel_h + ki) * s.kernel_w + kj;
        for (int y = 0; y < oh; ++y) {
          const int sy = y * s.stride_h - s.pad_h + ki;
          if (sy < 0 || sy >= s.height) continue;
          for (int x2 = 0; x2 < ow; ++x2) {
            const int sx = x2 * s.stride_w - s.pad_w + kj;
            if (sx < 0 || sx >= s.width) continue;
            col(row, static_cast<Eigen::Index>(y) * ow + x2) =
                x(c, static_cast<Eigen::Index>(sy) * s.width + sx);
          }
        }
      }
    }
  }
  return col;
}

void col2im_accumulate(const Mat& dcol, const Conv2dSpec& s, Mat& dx) {
  const int oh = s.out_height();
  const int ow = s.out_width();
  for (int c = 0; c < s.in_channels; ++c) {
    for (int ki = 0; ki < s.kernel_h; ++ki) {
      for (int kj = 0; kj < s.kernel_w; ++kj) {
        const Eigen::Index row = (static_cast<Eigen::Index>(c) * s.kernel_h + ki) * s.kernel_w + kj;
        for (int y = 0; y < oh; ++y) {
          const int sy = y * s.stride_h - s.pad_h + ki;
          if (sy < 0 || sy >= s.height) continue;
          for (int x2 = 0; x2 < ow; ++x2) {
            const int sx = x2 * s.stride_w - s.pad_w + kj;
            if (sx < 0 || sx >= s.width) continue;
            dx(c, static_cast<Eigen::Index>(sy) * s.width + sx) +=
                dcol(row, static_cast<Eigen::Index>(y) * ow + x2);
          }
        }
      }
    }
  }
}

}  // namespace

Var conv2d(const Var& x, const Var& weight, const Var& bias, const Conv2dSpec& spec) {
  if (x.rows() != spec.in_channels ||
      x.cols() != static_cast<Eigen::Index>(spec.height) * spec.width)
    throw Error("conv2d: input shape does not match spec");
  if (weight.cols() != static_cast<Eigen::Index>(spec.in_channels) * spec.kernel_h * spec.kernel_w)
    throw Error("conv2d: weight shape does not match spec");
  if (bias.rows() != weight.rows() || bias.cols() != 1)
    throw Error("conv2d: bias must be (out_channels) x 1");

  auto col_ptr = std::make_shared<Mat>(im2col(x.value(), spec));
  Mat out = weight.value() * (*col_ptr);
  out.colwise() += bias.value().col(0);
  return make_node(std::move(out), {x, weight, bias},
                   [x, weight, bias, spec, col_ptr](Node& self) mutable {
                     if (weight.requires_grad())
                       weight.mutable_grad().noalias() += self.grad * col_ptr->transpose();
                     if (bias.requires_grad())
                       bias.mutable_grad().col(0) += self.grad.rowwise().sum();
                     if (x.requires_grad()) {
                       Mat dcol = weight.value().transpose() * self.grad;
                       col2im_accumulate(dcol, spec, x.mutable_grad());
                     }
                   });
}

// ---- similarity ------------------------------------------------------------

std::uint64_t zero_norm_cosine_count() { return g_zero_norm_count.load(); }
void reset_zero_norm_cosine_count() { g_zero_norm_count.store(0); }

Var cosine_matrix(const Var& f, const Var& classes) {
  if (f.cols() != classes.cols()) throw Error("cosine_matrix: width mismatch");
  const Eigen::Index t = f.rows();
  const Eigen::Index k = classes.rows();
  Vec fn(t), cn(k);
  for (Eigen::Index i = 0; i < t; ++i) fn(i) = f.value().row(i).norm();
  for (Eigen::Index j = 0; j < k; ++j) cn(j) = classes.value().row(j).norm();
  Mat out = Mat::Zero(t, k);
  for (Eigen::Index i = 0; i < t; ++i) {
    for (Eigen::Index j = 0; j < k; ++j) {
      if (fn(i) < kNormEps || cn(j) < kNormEps) {
        g_zero_norm_count.fetch_add(1, std::memory_order_relaxed);
        continue;
      }
      out(i, j) = f.value().row(i).dot(classes.value().row(j)) / (fn(i) * cn(j));
    }
  }
  return make_node(std::move(out), {f, classes}, [f, classes, fn, cn](Node& self) mutable {
    for (Eigen::Index i = 0; i < self.grad.rows(); ++i) {
      for (Eigen::Index j = 0; j < self.grad.cols(); ++j) {
        const double g = self.grad(i, j);
        if (g == 0.0 || fn(i) < kNormEps || cn(j) < kNormEps) continue;
        const double cos_ij = self.value(i, j);
        const auto fi = f.value().row(i);
        const auto cj = classes.value().row(j);
        if (f.requires_grad())
          f.mutable_grad().row(i) += g * (cj / (fn(i) * cn(j)) - cos_ij * fi / (fn(i) * fn(i)));
        if (classes.requires_grad())
          classes.mutable_grad().row(j) +=
              g * (fi / (fn(i) * cn(j)) - cos_ij * cj / (cn(j) * cn(j)));
      }
    }
  });
}

Var paired_cosine(const Var& a, const Var& b) {
  check_same_shape(a, b, "paired_cosine");
  const Eigen::Index n = a.rows();
  Vec an(n), bn(n);
  Mat out = Mat::Zero(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    an(i) = a.value().row(i).norm();
    bn(i) = b.value().row(i).norm();
    if (an(i) < kNormEps || bn(i) < kNormEps) {
      g_zero_norm_count.fetch_add(1, std::memory_order_relaxed);
      continue;
    }
    out(i, 0) = a.value().row(i).dot(b.value().row(i)) / (an(i) * bn(i));
  }
  return make_node(std::move(out), {a, b}, [a, b, an, bn](Node& self) mutable {
    for (Eigen::Index i = 0; i < self.grad.rows(); ++i) {
      const double g = self.grad(i, 0);
      if (g == 0.0 || an(i) < kNormEps || bn(i) < kNormEps) continue;
      const double cos_i = self.value(i, 0);
      const auto ai = a.value().row(i);
      const auto bi = b.value().row(i);
      if (a.requires_grad())
        a.mutable_grad().row(i) += g * (bi / (an(i) * bn(i)) - cos_i * ai / (an(i) * an(i)));
      if (b.requires_grad())
        b.mutable_grad().row(i) += g * (ai / (an(i) * bn(i)) - cos_i * bi / (bn(i) * bn(i)));
    }
  });
}

// ---- loss helpers ------------------------------------------------------------

Var smooth_l1(const Var& a) {
  Mat out = a.value().unaryExpr(
      [](double x) { return std::abs(x) < 1.0 ? 0.5 * x * x : std::abs(x) - 0.5; });
  return make_node(std::move(out), {a}, [a](Node& self) mutable {
    a.mutable_grad().array() += self.grad.array() * a.value().array().unaryExpr([](double x) {
      return std::clamp(x, -1.0, 1.0);
    });
  });
}

Var bce_mean(const Var& predictions, const std::vector<double>& targets, double clip) {
  if (predictions.cols() != 1 ||
      predictions.rows() != static_cast<Eigen::Index>(targets.size()))
    throw Error("bce_mean: predictions must be N x 1 matching targets");
  const Eigen::Index n = predictions.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = std::clamp(predictions.value()(i, 0), clip, 1.0 - clip);
    total -= targets[static_cast<std::size_t>(i)] * std::log(p) +
             (1.0 - targets[static_cast<std::size_t>(i)]) * std::log(1.0 - p);
  }
  Mat out(1, 1);
  out(0, 0) = total * inv_n;
  return make_node(std::move(out), {predictions},
                   [predictions, targets, clip, inv_n](Node& self) mutable {
                     const double g = self.grad(0, 0) * inv_n;
                     for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
                       const double raw = predictions.value()(i, 0);
                       if (raw <= clip || raw >= 1.0 - clip) continue;  // clipped: flat
                       const double y = targets[static_cast<std::size_t>(i)];
                       predictions.mutable_grad()(i, 0) +=
                           g * (-y / raw + (1.0 - y) / (1.0 - raw));
                     }
                   });
}

}  // namespace tfdl::ad
