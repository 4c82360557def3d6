// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_EXPERIMENT_HPP
#define HYBRIDPRUNE_EXPERIMENT_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hybridprune/config.hpp"
#include "hybridprune/hybrid.hpp"
#include "hybridprune/pruner.hpp"
#include "hybridprune/supernet.hpp"

namespace hybridprune {

struct SeedReport {
  std::uint64_t seed = 0;
  // Empty for modes that never score modules (no-prune, random-prune,
  // imported architecture).
  std::optional<HybridStrategy> strategy;
  std::optional<TendencyTable> tendencies;
  std::optional<PruneSchedule> schedule;
  std::vector<PruneRecord> records;
  SearchLog log;  // epoch_seconds is measured and not part of any report file
  MaskState final_mask;
  std::size_t final_param_count = 0;
  std::size_t initial_param_count = 0;
  // Per-round pruning epochs allowed by the cost bound, in full-data epochs.
  double bound_epochs = 0.0;
  RetrainMetrics metrics;  // seconds is measured and not part of any report file
};

struct Report {
  ExperimentConfig config;
  std::vector<SeedReport> seeds;

  double mean_accuracy() const;
};

// Budget resolved from the schedule: the absolute budget if given, else the
// head plus budget_fraction of all PEFT parameters.
std::size_t resolve_budget(const ScheduleConfig& schedule, const Supernet& net);

using ProgressFn = std::function<void(const std::string&)>;

// Runs every seed of `config` serially. Validation happens before any
// training.
Report run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});
SeedReport run_seed(const ExperimentConfig& config, std::uint64_t seed);

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_EXPERIMENT_HPP
