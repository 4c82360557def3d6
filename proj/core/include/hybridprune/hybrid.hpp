// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_HYBRID_HPP
#define HYBRIDPRUNE_HYBRID_HPP

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "hybridprune/criteria.hpp"
#include "hybridprune/dataset.hpp"
#include "hybridprune/supernet.hpp"
#include "hybridprune/training.hpp"

namespace hybridprune {

// Contiguous block of layers [lo, hi). `index` is 1-based.
struct Partition {
  std::size_t index = 1;
  std::size_t lo = 0;
  std::size_t hi = 0;

  bool contains(std::size_t layer) const noexcept { return layer >= lo && layer < hi; }
  bool operator==(const Partition&) const = default;
};

// Equal contiguous blocks; the first (num_layers % num_partitions) blocks get
// one extra layer.
std::vector<Partition> partition_layers(std::size_t num_layers, std::size_t num_partitions = 4);

// 0-based position of the partition holding `layer`.
std::size_t partition_position(std::span<const Partition> partitions, std::size_t layer);

// counts[criterion][partition][kind] of hypothetical prunings seen in warm-up.
class TendencyTable {
 public:
  TendencyTable() = default;
  explicit TendencyTable(std::size_t num_partitions);

  std::size_t num_partitions() const noexcept { return num_partitions_; }
  void add(CriterionKind c, std::size_t partition, ModuleKind kind, std::size_t n = 1);
  std::size_t count(CriterionKind c, std::size_t partition, ModuleKind kind) const;
  std::size_t partition_total(CriterionKind c, std::size_t partition) const;
  std::size_t total(CriterionKind c) const;
  std::size_t grand_total() const;

  bool operator==(const TendencyTable&) const = default;

 private:
  std::size_t offset(CriterionKind c, std::size_t partition, ModuleKind kind) const;

  std::size_t num_partitions_ = 0;
  std::vector<std::size_t> counts_;
};

// S_H: one criterion per partition.
struct HybridStrategy {
  std::vector<Partition> partitions;
  std::vector<Criterion> assignment;

  const Criterion& criterion_for_layer(std::size_t layer) const;
  void validate(std::size_t num_layers) const;
  bool operator==(const HybridStrategy&) const = default;

  static HybridStrategy uniform(std::size_t num_layers, std::size_t num_partitions, const Criterion& c);
};

struct WarmupOptions {
  std::size_t rounds = 3;
  std::size_t k = 4;
  std::size_t num_partitions = 4;
  std::vector<CriterionKind> candidates{kAllCriteria.begin(), kAllCriteria.end()};
  TrainingOptions training;
};

struct WarmupResult {
  TendencyTable table;
  std::size_t examples = 0;  // training examples consumed
};

// Trains briefly on `trimmed` for `rounds` passes; after each pass every
// candidate criterion nominates its top-k modules, which are counted but not
// pruned. The supernet is restored to its entry state before returning.
WarmupResult warmup(Supernet& net, const Dataset& trimmed, const WarmupOptions& options, std::mt19937_64& rng);

// Top-k most prunable module ids under one criterion over all active modules.
std::vector<PeftModuleId> hypothetical_top_k(const Criterion& c, std::span<const PeftModuleId> active,
                                             const StatsMap& stats, std::size_t k);

// Share of criterion c's pruning mass that landed in `partition` (0-based).
double concentration(const TendencyTable& table, CriterionKind c, std::size_t partition);

// Per partition, the criterion with the highest concentration there; ties go
// to the earlier criterion in kAllCriteria order.
HybridStrategy assign_strategies(const TendencyTable& table, std::span<const Partition> partitions);

// Single criterion for a partition-free run: the one whose pruning mass is
// most concentrated in one (partition, kind) cell.
Criterion global_tendency_criterion(const TendencyTable& table);

struct PartitionScore {
  PeftModuleId id;
  std::size_t partition = 0;  // 0-based
  double theta = 0.0;
  double normalized = 0.0;  // min-max normalized unimportance within the partition
  std::size_t rank = 0;     // 1-based rank within the partition
};

struct ProbabilityVector {
  std::vector<PeftModuleId> ids;
  std::vector<double> p;

  std::size_t size() const noexcept { return ids.size(); }
};

// p_i = exp(k_i x_i) / sum_j exp(k_j x_j), k_i = sigmoid(z-scored rank_i),
// x_i = normalized unimportance.
ProbabilityVector prune_probabilities(std::span<const PartitionScore> scores);

// Scores each active module under its partition's criterion, normalizes and
// ranks within partitions.
std::vector<PartitionScore> hybrid_scores(const HybridStrategy& strategy, const MaskState& mask,
                                          const StatsMap& stats);

// The k highest-probability modules; ties go to (layer, kind) order.
std::vector<PeftModuleId> top_k(const ProbabilityVector& probs, std::size_t k);

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_HYBRID_HPP
