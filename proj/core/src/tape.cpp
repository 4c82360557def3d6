// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridprune/tape.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "hybridprune/error.hpp"

namespace hybridprune {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "shape_mismatch";
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::InvalidConfig: return "invalid_config";
    case ErrorKind::Unreachable: return "unreachable";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << "[" << m.rows() << "x" << m.cols() << "]";
  return os.str();
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  fail(ErrorKind::ShapeMismatch,
       std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

using RowArray = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// tanh(u) = 1 - 2 / (exp(2u) + 1) vectorizes where std::tanh does not.
RowArray tanh_array(const RowArray& u) { return 1.0 - 2.0 / ((2.0 * u).exp() + 1.0); }

Matrix gelu_matrix(const Matrix& x) {
  const RowArray xa = x.array();
  const RowArray t = tanh_array(kGeluC * (xa + kGeluA * xa.cube()));
  Matrix out(x.rows(), x.cols());
  out.array() = 0.5 * xa * (1.0 + t);
  return out;
}

Matrix gelu_derivative_matrix(const Matrix& x) {
  const RowArray xa = x.array();
  const RowArray t = tanh_array(kGeluC * (xa + kGeluA * xa.cube()));
  Matrix out(x.rows(), x.cols());
  out.array() = 0.5 * (1.0 + t) + 0.5 * xa * (1.0 - t.square()) * kGeluC * (1.0 + 3.0 * kGeluA * xa.square());
  return out;
}

}  // namespace

Tensor::Tensor(Index rows, Index cols)
    : values_(Matrix::Zero(rows, cols)), grad_(Matrix::Zero(rows, cols)) {}

Tensor::Tensor(Matrix values)
    : values_(std::move(values)), grad_(Matrix::Zero(values_.rows(), values_.cols())) {}

std::vector<std::size_t> Tensor::shape() const {
  return {static_cast<std::size_t>(rows()), static_cast<std::size_t>(cols())};
}

void Tensor::zero_grad() { grad_.setZero(values_.rows(), values_.cols()); }

double gelu(double x) noexcept {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_derivative(double x) noexcept {
  const double inner = kGeluC * (x + kGeluA * x * x * x);
  const double t = std::tanh(inner);
  const double dinner = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner;
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) {
    fail(ErrorKind::InvalidArgument, "tape: unknown variable id " + std::to_string(v.id));
  }
  return nodes_[v.id];
}

const Matrix& Tape::value(Var v) const {
  const Node& n = node(v);
  return n.external != nullptr ? *n.external : n.owned;
}

const Matrix* Tape::grad(Var v) const {
  const Node& n = node(v);
  return n.grad.size() == 0 ? nullptr : &n.grad;
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

Var Tape::push(Matrix value, bool requires_grad, BackwardFn backward) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Matrix& contribution) {
  Node& n = nodes_[v.id];
  if (!n.requires_grad) return;
  if (n.grad.size() == 0) {
    n.grad = contribution;
  } else {
    n.grad += contribution;
  }
}

Var Tape::parameter(Tensor& param) {
  if (auto it = param_ids_.find(&param); it != param_ids_.end()) return Var{it->second};
  Node n;
  n.external = &param.values();
  n.param = &param;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  param_ids_.emplace(&param, nodes_.size() - 1);
  return Var{nodes_.size() - 1};
}

Var Tape::constant(const Tensor& value) {
  Node n;
  n.external = &value.values();
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::matmul(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  Matrix out = av * bv;
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * t.value(b).transpose());
    if (t.requires_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
  });
}

Var Tape::add(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) shape_error("add", av, bv);
  Matrix out = av + bv;
  const bool rg = requires_grad(a) || requires_grad(b);
  return push(std::move(out), rg, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var Tape::add_row(Var a, Var row) {
  const Matrix& av = value(a);
  const Matrix& rv = value(row);
  if (rv.rows() != 1 || rv.cols() != av.cols()) shape_error("add_row", av, rv);
  Matrix out = av.rowwise() + rv.row(0);
  const bool rg = requires_grad(a) || requires_grad(row);
  return push(std::move(out), rg, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.requires_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var Tape::scale(Var a, double factor) {
  Matrix out = value(a) * factor;
  return push(std::move(out), requires_grad(a), [a, factor](Tape& t, const Matrix& g) {
    t.accumulate(a, g * factor);
  });
}

Var Tape::activation(Var x, Activation kind) {
  const Matrix& xv = value(x);
  Matrix out;
  switch (kind) {
    case Activation::Identity: out = xv; break;
    case Activation::Relu: out = xv.cwiseMax(0.0); break;
    case Activation::Gelu: out = gelu_matrix(xv); break;
  }
  return push(std::move(out), requires_grad(x), [x, kind](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    switch (kind) {
      case Activation::Identity: t.accumulate(x, g); break;
      case Activation::Relu:
        t.accumulate(x, g.cwiseProduct(xv.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; })));
        break;
      case Activation::Gelu:
        t.accumulate(x, g.cwiseProduct(gelu_derivative_matrix(xv)));
        break;
    }
  });
}

Var Tape::layer_norm(Var x, double eps) {
  const Matrix& xv = value(x);
  const Index n = xv.cols();
  Matrix y(xv.rows(), n);
  Eigen::VectorXd inv_std(xv.rows());
  for (Index r = 0; r < xv.rows(); ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    y.row(r) = (xv.row(r).array() - mean) * inv_std(r);
  }
  const bool rg = requires_grad(x);
  Matrix y_saved = rg ? y : Matrix();
  return push(std::move(y), rg,
              [x, y_saved = std::move(y_saved), inv_std = std::move(inv_std)](Tape& t, const Matrix& g) {
                Matrix dx(g.rows(), g.cols());
                for (Index r = 0; r < g.rows(); ++r) {
                  const double mean_g = g.row(r).mean();
                  const double mean_gy = g.row(r).dot(y_saved.row(r)) / static_cast<double>(g.cols());
                  dx.row(r) = inv_std(r) * (g.row(r).array() - mean_g - y_saved.row(r).array() * mean_gy);
                }
                t.accumulate(x, dx);
              });
}

Var Tape::self_attention(Var q, Var k, Var v, Index seq_len, Index heads) {
  const Matrix& qv = value(q);
  const Matrix& kv = value(k);
  const Matrix& vv = value(v);
  if (qv.rows() != kv.rows() || qv.cols() != kv.cols()) shape_error("self_attention", qv, kv);
  if (qv.rows() != vv.rows() || qv.cols() != vv.cols()) shape_error("self_attention", qv, vv);
  if (seq_len <= 0 || qv.rows() % seq_len != 0 || heads <= 0 || qv.cols() % heads != 0) {
    fail(ErrorKind::ShapeMismatch, "self_attention: rows " + std::to_string(qv.rows()) +
                                       " / cols " + std::to_string(qv.cols()) +
                                       " not divisible by seq_len/heads");
  }
  const Index batch = qv.rows() / seq_len;
  const Index dh = qv.cols() / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  // probs stacks one seq_len x seq_len block per (sequence, head).
  Matrix probs(batch * heads * seq_len, seq_len);
  Matrix out(qv.rows(), qv.cols());
  for (Index b = 0; b < batch; ++b) {
    for (Index h = 0; h < heads; ++h) {
      const auto qb = qv.block(b * seq_len, h * dh, seq_len, dh);
      const auto kb = kv.block(b * seq_len, h * dh, seq_len, dh);
      const auto vb = vv.block(b * seq_len, h * dh, seq_len, dh);
      Matrix s = (qb * kb.transpose()) * scale;
      for (Index r = 0; r < seq_len; ++r) {
        const double mx = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - mx).exp();
        s.row(r) /= s.row(r).sum();
      }
      out.block(b * seq_len, h * dh, seq_len, dh).noalias() = s * vb;
      probs.block((b * heads + h) * seq_len, 0, seq_len, seq_len) = s;
    }
  }
  const bool rg = requires_grad(q) || requires_grad(k) || requires_grad(v);
  if (!rg) probs = Matrix();
  return push(std::move(out), rg,
              [q, k, v, seq_len, heads, batch, dh, scale, probs = std::move(probs)](Tape& t,
                                                                                   const Matrix& g) {
                const Matrix& qv = t.value(q);
                const Matrix& kv = t.value(k);
                const Matrix& vv = t.value(v);
                Matrix dq = Matrix::Zero(qv.rows(), qv.cols());
                Matrix dk = Matrix::Zero(kv.rows(), kv.cols());
                Matrix dv = Matrix::Zero(vv.rows(), vv.cols());
                for (Index b = 0; b < batch; ++b) {
                  for (Index h = 0; h < heads; ++h) {
                    const auto p = probs.block((b * heads + h) * seq_len, 0, seq_len, seq_len);
                    const auto gb = g.block(b * seq_len, h * dh, seq_len, dh);
                    const auto qb = qv.block(b * seq_len, h * dh, seq_len, dh);
                    const auto kb = kv.block(b * seq_len, h * dh, seq_len, dh);
                    const auto vb = vv.block(b * seq_len, h * dh, seq_len, dh);
                    dv.block(b * seq_len, h * dh, seq_len, dh).noalias() = p.transpose() * gb;
                    Matrix dp = gb * vb.transpose();
                    Matrix ds(seq_len, seq_len);
                    for (Index r = 0; r < seq_len; ++r) {
                      const double dot = dp.row(r).dot(p.row(r));
                      ds.row(r) = p.row(r).array() * (dp.row(r).array() - dot);
                    }
                    dq.block(b * seq_len, h * dh, seq_len, dh).noalias() = (ds * kb) * scale;
                    dk.block(b * seq_len, h * dh, seq_len, dh).noalias() = (ds.transpose() * qb) * scale;
                  }
                }
                t.accumulate(q, dq);
                t.accumulate(k, dk);
                t.accumulate(v, dv);
              });
}

Var Tape::mean_pool(Var x, Index seq_len) {
  const Matrix& xv = value(x);
  if (seq_len <= 0 || xv.rows() % seq_len != 0) {
    fail(ErrorKind::ShapeMismatch, "mean_pool: " + std::to_string(xv.rows()) +
                                       " rows not divisible by seq_len " + std::to_string(seq_len));
  }
  const Index batch = xv.rows() / seq_len;
  Matrix out(batch, xv.cols());
  for (Index b = 0; b < batch; ++b) {
    out.row(b) = xv.middleRows(b * seq_len, seq_len).colwise().mean();
  }
  return push(std::move(out), requires_grad(x), [x, seq_len, batch](Tape& t, const Matrix& g) {
    Matrix dx(batch * seq_len, g.cols());
    const double inv = 1.0 / static_cast<double>(seq_len);
    for (Index b = 0; b < batch; ++b) {
      dx.middleRows(b * seq_len, seq_len).rowwise() = g.row(b) * inv;
    }
    t.accumulate(x, dx);
  });
}

Var Tape::sum(Var x) {
  Matrix out(1, 1);
  out(0, 0) = value(x).sum();
  return push(std::move(out), requires_grad(x), [x](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    t.accumulate(x, Matrix::Constant(xv.rows(), xv.cols(), g(0, 0)));
  });
}

Var Tape::softmax_cross_entropy(Var logits, std::span<const int> labels) {
  const Matrix& lv = value(logits);
  if (static_cast<Index>(labels.size()) != lv.rows()) {
    fail(ErrorKind::ShapeMismatch, "softmax_cross_entropy: " + std::to_string(lv.rows()) +
                                       " logit rows but " + std::to_string(labels.size()) + " labels");
  }
  Matrix probs(lv.rows(), lv.cols());
  double loss = 0.0;
  for (Index r = 0; r < lv.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= lv.cols()) {
      fail(ErrorKind::InvalidArgument, "softmax_cross_entropy: label " + std::to_string(y) +
                                           " out of range [0, " + std::to_string(lv.cols()) + ")");
    }
    const double mx = lv.row(r).maxCoeff();
    probs.row(r) = (lv.row(r).array() - mx).exp();
    const double z = probs.row(r).sum();
    probs.row(r) /= z;
    loss -= (lv(r, y) - mx) - std::log(z);
  }
  const double n = static_cast<double>(lv.rows());
  Matrix out(1, 1);
  out(0, 0) = loss / n;
  std::vector<int> owned_labels(labels.begin(), labels.end());
  const bool rg = requires_grad(logits);
  return push(std::move(out), rg,
              [logits, n, probs = std::move(probs), owned_labels = std::move(owned_labels)](
                  Tape& t, const Matrix& g) {
                Matrix d = probs;
                for (Index r = 0; r < d.rows(); ++r) d(r, owned_labels[static_cast<std::size_t>(r)]) -= 1.0;
                t.accumulate(logits, d * (g(0, 0) / n));
              });
}

void Tape::backward(Var loss) {
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) {
    fail(ErrorKind::ShapeMismatch, "backward: loss must be 1x1, got " + shape_str(lv));
  }
  for (Node& n : nodes_) n.grad = Matrix();
  backward_visits_ = 0;
  if (nodes_[loss.id].requires_grad) nodes_[loss.id].grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    ++backward_visits_;
    // Rules only write into their inputs' grads.
    n.backward(*this, n.grad);
  }
  for (Node& n : nodes_) {
    if (n.param == nullptr) continue;
    if (n.grad.size() == 0) {
      n.param->zero_grad();
    } else {
      n.param->grad() = n.grad;
    }
  }
}

}  // namespace hybridprune
