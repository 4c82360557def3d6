// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_ADAM_HPP
#define HYBRIDPRUNE_ADAM_HPP

#include <span>
#include <unordered_map>

#include "hybridprune/tape.hpp"

namespace hybridprune {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates keyed by parameter identity. Moments for a
// parameter are created zeroed on its first step.
class AdamState {
 public:
  void reset() { moments_.clear(); }
  // Drops the moments of one parameter (used when it is reinitialized).
  void forget(const Tensor& param) { moments_.erase(&param); }
  std::size_t tracked() const noexcept { return moments_.size(); }

 private:
  friend void adam_step(std::span<Tensor* const>, AdamState&, double, const AdamConfig&);

  struct Moments {
    Matrix m;
    Matrix v;
    long step = 0;
  };
  std::unordered_map<const Tensor*, Moments> moments_;
};

// One Adam update using each parameter's grad slot.
void adam_step(std::span<Tensor* const> params, AdamState& state, double lr,
               const AdamConfig& config = {});

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_ADAM_HPP
