// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_CONFIG_HPP
#define HYBRIDPRUNE_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hybridprune/criteria.hpp"
#include "hybridprune/hybrid.hpp"
#include "hybridprune/pruner.hpp"
#include "hybridprune/supernet.hpp"
#include "hybridprune/tasks.hpp"
#include "hybridprune/training.hpp"

namespace hybridprune {

enum class ExperimentMode { Hybrid, RandomPrune, Single, NoPartition, NoPrune };

struct ModeSpec {
  ExperimentMode mode = ExperimentMode::Hybrid;
  std::optional<CriterionKind> single;  // set iff mode == Single

  std::string to_string() const;
  static ModeSpec parse(std::string_view text);
  bool operator==(const ModeSpec&) const = default;
};

struct ScheduleConfig {
  std::optional<std::size_t> budget;  // absolute; overrides budget_fraction
  double budget_fraction = 0.5;       // share of all PEFT parameters kept (head always kept)
  std::optional<std::size_t> k;       // default ceil(modules / 12)
  double epochs_per_round = 1.0;
  Fidelity fidelity = Fidelity::Full;
  double low_fidelity_fraction = 0.01;
  bool reinit_survivors = true;

  bool operator==(const ScheduleConfig&) const = default;
};

struct WarmupConfig {
  std::size_t rounds = 3;
  double trim_fraction = 0.1;
  std::size_t num_partitions = 4;
  std::vector<CriterionKind> candidates{kAllCriteria.begin(), kAllCriteria.end()};

  bool operator==(const WarmupConfig&) const = default;
};

struct ExperimentConfig {
  SyntheticTaskSpec task;
  // vocab_size, num_classes and max_seq_len are taken from `task`.
  SupernetConfig supernet;
  ScheduleConfig schedule;
  WarmupConfig warmup;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  std::size_t retrain_epochs = 20;
  ModeSpec mode;
  std::vector<std::uint64_t> seeds{1};
  std::string report_dir = "reports";

  // Set by the transfer workflows, never read from a config file.
  std::optional<HybridStrategy> imported_strategy;
  std::optional<MaskState> imported_architecture;

  // Copies task dimensions into the supernet config and checks every field.
  void finalize();
  void validate() const;
  TrainingOptions training() const { return TrainingOptions{batch_size, learning_rate, {}}; }
};

// Strict JSON loader: unknown keys and out-of-range values are rejected.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_CONFIG_HPP
