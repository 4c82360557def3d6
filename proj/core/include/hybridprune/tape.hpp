// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_TAPE_HPP
#define HYBRIDPRUNE_TAPE_HPP

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

namespace hybridprune {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense row-major tensor of rank <= 2 with an attached gradient slot of the
// same shape. Vectors are stored as 1 x n.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Index rows, Index cols);
  explicit Tensor(Matrix values);

  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  Index size() const noexcept { return values_.size(); }
  std::vector<std::size_t> shape() const;

  Matrix& values() noexcept { return values_; }
  const Matrix& values() const noexcept { return values_; }
  Matrix& grad() noexcept { return grad_; }
  const Matrix& grad() const noexcept { return grad_; }

  void zero_grad();

 private:
  Matrix values_;
  Matrix grad_;
};

enum class Activation { Identity, Relu, Gelu };

// gelu(x) = 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))
double gelu(double x) noexcept;
double gelu_derivative(double x) noexcept;

// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

// Reverse-mode tape. Operations are recorded in call order; backward() walks
// them once in reverse. Constants and parameters registered from external
// Tensors are referenced, not copied, so those Tensors must outlive the tape.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Trainable leaf. The same Tensor always maps to the same Var; after
  // backward() its grad slot holds dLoss/dParam (zero if unreachable).
  Var parameter(Tensor& param);
  // Frozen leaf; its grad slot is never touched.
  Var constant(const Tensor& value);
  Var constant(Matrix value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  // Adds a 1 x n row to every row of a.
  Var add_row(Var a, Var row);
  Var scale(Var a, double factor);
  Var activation(Var x, Activation kind);
  // Row-wise normalization to zero mean and unit variance (no affine terms).
  Var layer_norm(Var x, double eps = 1e-5);
  // Multi-head scaled dot-product self-attention. q, k, v hold
  // (batch * seq_len) rows of width d_model split into `heads` slices.
  Var self_attention(Var q, Var k, Var v, Index seq_len, Index heads);
  // Averages each consecutive run of seq_len rows.
  Var mean_pool(Var x, Index seq_len);
  Var sum(Var x);
  // Mean negative log-likelihood of labels under row-wise softmax(logits).
  Var softmax_cross_entropy(Var logits, std::span<const int> labels);

  const Matrix& value(Var v) const;
  // Gradient of the last backward() target with respect to v, or nullptr if
  // v does not influence it.
  const Matrix* grad(Var v) const;
  bool requires_grad(Var v) const;

  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  // Number of recorded operations whose backward rule ran in the last pass.
  std::size_t backward_visits() const noexcept { return backward_visits_; }

 private:
  using BackwardFn = std::function<void(Tape&, const Matrix& upstream)>;

  struct Node {
    Matrix owned;
    const Matrix* external = nullptr;
    Tensor* param = nullptr;
    bool requires_grad = false;
    Matrix grad;
    BackwardFn backward;
  };

  Var push(Matrix value, bool requires_grad, BackwardFn backward);
  void accumulate(Var v, const Matrix& contribution);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::size_t> param_ids_;
  std::size_t backward_visits_ = 0;
};

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_TAPE_HPP
