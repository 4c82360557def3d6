// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridprune/adam.hpp"

#include <cmath>

#include "hybridprune/error.hpp"

namespace hybridprune {

void adam_step(std::span<Tensor* const> params, AdamState& state, double lr, const AdamConfig& config) {
  for (Tensor* p : params) {
    if (p->grad().rows() != p->rows() || p->grad().cols() != p->cols()) {
      fail(ErrorKind::ShapeMismatch, "adam_step: gradient slot shape differs from parameter");
    }
    auto [it, inserted] = state.moments_.try_emplace(p);
    auto& mo = it->second;
    if (inserted || mo.m.rows() != p->rows() || mo.m.cols() != p->cols()) {
      mo.m = Matrix::Zero(p->rows(), p->cols());
      mo.v = Matrix::Zero(p->rows(), p->cols());
      mo.step = 0;
    }
    ++mo.step;
    const Matrix& g = p->grad();
    mo.m = config.beta1 * mo.m + (1.0 - config.beta1) * g;
    mo.v = config.beta2 * mo.v + (1.0 - config.beta2) * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(mo.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(mo.step));
    p->values().array() -=
        lr * (mo.m.array() / bc1) / ((mo.v.array() / bc2).sqrt() + config.epsilon);
  }
}

}  // namespace hybridprune
