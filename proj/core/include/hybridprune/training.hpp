// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_TRAINING_HPP
#define HYBRIDPRUNE_TRAINING_HPP

#include <cstddef>
#include <random>
#include <span>

#include "hybridprune/adam.hpp"
#include "hybridprune/criteria.hpp"
#include "hybridprune/dataset.hpp"
#include "hybridprune/supernet.hpp"

namespace hybridprune {

struct TrainingOptions {
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  AdamConfig adam;
};

// Accumulates ModuleStats for the modules active when it was created.
class StatsCollector {
 public:
  explicit StatsCollector(const MaskState& mask);

  // Call after backward() and before the optimizer update.
  void observe_step(const Supernet& net, const Tape& tape, const ForwardTrace& trace);
  // Takes the weight snapshot; call after the last optimizer step.
  void finish(const Supernet& net);

  const StatsMap& stats() const noexcept { return stats_; }
  StatsMap take() { return std::move(stats_); }

 private:
  StatsMap stats_;
};

// One optimizer step on a minibatch; returns the batch loss.
double train_step(Supernet& net, std::span<const int> tokens, std::span<const int> labels,
                  AdamState& optimizer, const TrainingOptions& options, StatsCollector* collector = nullptr);

struct PassResult {
  double mean_loss = 0.0;
  std::size_t examples = 0;
  std::size_t steps = 0;
};

// One shuffled pass over `data` in minibatches.
PassResult train_pass(Supernet& net, const Dataset& data, AdamState& optimizer, const TrainingOptions& options,
                      std::mt19937_64& rng, StatsCollector* collector = nullptr);

// Exactly `steps` optimizer steps cycling through shuffled minibatches of
// `data`, accumulating statistics of every active module.
StatsMap collect_stats(Supernet& net, const Dataset& data, std::size_t steps, AdamState& optimizer,
                       const TrainingOptions& options, std::mt19937_64& rng,
                       std::size_t* examples_seen = nullptr);

double evaluate_accuracy(Supernet& net, const Dataset& data, std::size_t batch_size = 64);

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_TRAINING_HPP
