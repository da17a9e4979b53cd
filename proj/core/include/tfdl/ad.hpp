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

#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "tfdl/types.hpp"

namespace tfdl::ad {

// Reverse-mode automatic differentiation over dense matrices. Graphs are
// built implicitly: every op allocates a Node that keeps shared ownership of
// its parents, and backward() replays the creation order in reverse. Nodes
// whose subgraph contains no parameter skip gradient work entirely.

struct Node {
  Mat value;
  Mat grad;  // allocated on demand during backward
  bool requires_grad = false;
  std::uint64_t order = 0;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backfn;

  Mat& ensure_grad() {
    if (grad.size() == 0) grad = Mat::Zero(value.rows(), value.cols());
    return grad;
  }
};

/// Value-semantics handle to a graph node.
class Var {
 public:
  Var() = default;

  // Handle semantics: a const Var still refers to a mutable node, like a
  // shared_ptr.
  const Mat& value() const { return node_->value; }
  Mat& mutable_value() const { return node_->value; }
  const Mat& grad() const { return node_->grad; }
  Mat& mutable_grad() const { return node_->ensure_grad(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool valid() const { return node_ != nullptr; }

  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }

  /// Scalar convenience for 1x1 nodes.
  double item() const;

  std::shared_ptr<Node> node_;
};

/// Leaf with no gradient.
Var constant(Mat value);
Var constant_scalar(double value);
/// Leaf that accumulates gradient across backward passes until zeroed.
Var param(Mat value);

/// Runs reverse accumulation from a 1x1 root.
void backward(const Var& root);

/// While alive, newly created nodes never require gradients, so graphs built
/// for pure evaluation (inference, frozen sub-networks) carry no backward
/// closures.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// ---- elementwise / shape ops -------------------------------------------

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);
Var add_rowvec(const Var& a, const Var& row);   // row: 1 x D
Var mul_rowvec(const Var& a, const Var& row);
Var add_colvec(const Var& a, const Var& col);   // col: N x 1
Var mul_colvec(const Var& a, const Var& col);
Var concat_cols(const Var& a, const Var& b);
Var vstack(const std::vector<Var>& parts);
Var slice_rows(const Var& a, Eigen::Index first, Eigen::Index count);
Var gather_rows(const Var& a, const std::vector<int>& indices);
/// Row-major reinterpretation to a new shape with the same element count.
Var reshape(const Var& a, Eigen::Index rows, Eigen::Index cols);

/// Means over one axis of a channels x (frames * bins) map.
Var spectral_mean(const Var& a, int channels, int frames, int bins);  // -> frames x bins
Var channel_mean(const Var& a, int channels, int frames, int bins);   // -> frames x channels

// ---- nonlinearities ------------------------------------------------------

Var sigmoid(const Var& a);
Var gelu(const Var& a);
Var selu(const Var& a);
Var relu(const Var& a);
Var square(const Var& a);
Var softmax_rows(const Var& a);
/// Per-row standardization (x - mean) / sqrt(var + eps); affine terms are
/// applied by callers via mul_rowvec/add_rowvec (features) or the colvec
/// variants (channels).
Var norm_rows(const Var& a, double eps = 1e-5);

// ---- reductions ----------------------------------------------------------

Var sum(const Var& a);
Var mean(const Var& a);
Var max_over_cols(const Var& a);  // N x M -> N x 1, row-wise max

// ---- convolution ---------------------------------------------------------

struct Conv2dSpec {
  int in_channels = 0;
  int height = 0;
  int width = 0;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;
  int pad_w = 0;

  int out_height() const { return (height + 2 * pad_h - kernel_h) / stride_h + 1; }
  int out_width() const { return (width + 2 * pad_w - kernel_w) / stride_w + 1; }
};

/// x: (Cin) x (H*W), weight: (Cout) x (Cin*kh*kw), bias: (Cout) x 1.
/// Returns (Cout) x (out_h * out_w). im2col + GEMM.
Var conv2d(const Var& x, const Var& weight, const Var& bias, const Conv2dSpec& spec);

// ---- similarity ----------------------------------------------------------

/// cos between every row of f (T x D) and every row of classes (K x D);
/// zero-norm rows yield similarity 0 (and bump the zero-norm counter).
Var cosine_matrix(const Var& f, const Var& classes);
/// Row-paired cosine: a, b are J x D; result J x 1.
Var paired_cosine(const Var& a, const Var& b);

std::uint64_t zero_norm_cosine_count();
void reset_zero_norm_cosine_count();

// ---- loss helpers --------------------------------------------------------

/// Elementwise smooth-L1 (transition point 1).
Var smooth_l1(const Var& a);
/// Mean binary cross-entropy of predictions (N x 1, in (0,1)) against
/// targets; predictions are clipped to [clip, 1-clip].
Var bce_mean(const Var& predictions, const std::vector<double>& targets, double clip = 1e-7);

}  // namespace tfdl::ad
