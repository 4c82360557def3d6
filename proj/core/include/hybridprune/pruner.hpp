// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_PRUNER_HPP
#define HYBRIDPRUNE_PRUNER_HPP

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hybridprune/adam.hpp"
#include "hybridprune/dataset.hpp"
#include "hybridprune/hybrid.hpp"
#include "hybridprune/supernet.hpp"
#include "hybridprune/training.hpp"

namespace hybridprune {

enum class Fidelity { Full, Low };

std::string_view to_string(Fidelity f) noexcept;
Fidelity parse_fidelity(std::string_view text);

struct PruneSchedule {
  std::size_t budget = 0;  // max trainable parameters, classifier head included
  std::size_t rounds = 0;
  std::size_t k = 1;
  double epochs_per_round = 1.0;
  Fidelity fidelity = Fidelity::Full;
  std::optional<std::string> warning;
};

// ceil(active / 12)
std::size_t default_k(std::size_t active_modules) noexcept;

// Smallest r such that removing the r*k smallest active modules reaches the
// budget. Any r*k removals shrink the count at least as much, so every
// search following the schedule ends within budget.
PruneSchedule derive_schedule(std::size_t budget, const Supernet& net, std::size_t k, double epochs_per_round = 1.0,
                              Fidelity fidelity = Fidelity::Full);

enum class PolicyKind { Hybrid, Random };

// How a round turns statistics into a probability vector.
struct PrunePolicy {
  PolicyKind kind = PolicyKind::Hybrid;
  HybridStrategy strategy;  // unused for Random

  static PrunePolicy hybrid(HybridStrategy s) { return {PolicyKind::Hybrid, std::move(s)}; }
  static PrunePolicy random() { return {PolicyKind::Random, {}}; }
};

struct PruneRecord {
  std::size_t round = 0;  // 1-based
  std::vector<PeftModuleId> pruned;
  std::vector<std::string> pruned_by;  // criterion tag (or "random") per pruned id
  ProbabilityVector probabilities;
  std::size_t param_count_after = 0;
  bool terminal = false;
};

struct SearchOptions {
  TrainingOptions training;
  bool reinit_survivors = true;
};

struct SearchLog {
  double warmup_epochs = 0.0;
  double pruning_epochs = 0.0;
  double retrain_epochs = 0.0;
  double epoch_seconds = 0.0;  // measured wall time per full-dataset epoch

  double search_epochs() const noexcept { return warmup_epochs + pruning_epochs; }
};

struct RoundOutcome {
  MaskState mask;
  PruneRecord record;
  std::size_t examples = 0;
};

// Train one collection window, score, deactivate the k highest-probability
// modules and, unless this is the last round, reinitialize the survivors.
RoundOutcome prune_round(Supernet& net, const PrunePolicy& policy, const Dataset& data, std::size_t k,
                         std::size_t round, std::size_t budget, double epochs_per_round, bool last_round,
                         AdamState& optimizer, const SearchOptions& options, std::mt19937_64& rng);

struct SearchResult {
  MaskState final_mask;
  std::vector<PruneRecord> records;
  double pruning_epochs = 0.0;  // in passes over the full dataset
  double seconds = 0.0;
  std::size_t examples = 0;
};

// Rounds run on `full` or `trimmed` per schedule.fidelity; epochs are always
// counted against |full|.
SearchResult run_search(Supernet& net, const Dataset& full, const Dataset& trimmed, const PrunePolicy& policy,
                        const PruneSchedule& schedule, const SearchOptions& options, std::mt19937_64& rng);

struct RetrainMetrics {
  std::vector<double> loss_curve;  // mean training loss per epoch
  double accuracy = 0.0;           // on the evaluation set
  double seconds = 0.0;
};

// Fresh start of surviving modules and head, then `epochs` passes; the mask
// stays fixed.
RetrainMetrics retrain(Supernet& net, const MaskState& mask, const Dataset& train, const Dataset& eval,
                       std::size_t epochs, const TrainingOptions& options, std::mt19937_64& rng);

// (N_PA * N_SA) * (num_layers / k) * t_epoch
double search_cost_bound(std::size_t n_pa, std::size_t n_sa, std::size_t num_layers, std::size_t k,
                         double t_epoch);

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_PRUNER_HPP
