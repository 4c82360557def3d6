// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridprune/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hybridprune/error.hpp"

namespace hybridprune {

std::vector<Partition> partition_layers(std::size_t num_layers, std::size_t num_partitions) {
  if (num_partitions == 0) fail(ErrorKind::InvalidArgument, "partition_layers: need at least one partition");
  if (num_layers < num_partitions) {
    fail(ErrorKind::InvalidArgument, "partition_layers: " + std::to_string(num_layers) +
                                         " layers cannot form " + std::to_string(num_partitions) +
                                         " partitions");
  }
  std::vector<Partition> parts;
  const std::size_t base = num_layers / num_partitions;
  const std::size_t extra = num_layers % num_partitions;
  std::size_t lo = 0;
  for (std::size_t i = 0; i < num_partitions; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    parts.push_back(Partition{i + 1, lo, lo + len});
    lo += len;
  }
  return parts;
}

std::size_t partition_position(std::span<const Partition> partitions, std::size_t layer) {
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    if (partitions[i].contains(layer)) return i;
  }
  fail(ErrorKind::InvalidArgument, "layer " + std::to_string(layer) + " is not covered by any partition");
}

TendencyTable::TendencyTable(std::size_t num_partitions)
    : num_partitions_(num_partitions), counts_(kAllCriteria.size() * num_partitions * 2, 0) {}

std::size_t TendencyTable::offset(CriterionKind c, std::size_t partition, ModuleKind kind) const {
  if (partition >= num_partitions_) {
    fail(ErrorKind::InvalidArgument, "tendency table: partition " + std::to_string(partition) + " out of range");
  }
  return (static_cast<std::size_t>(c) * num_partitions_ + partition) * 2 + static_cast<std::size_t>(kind);
}

void TendencyTable::add(CriterionKind c, std::size_t partition, ModuleKind kind, std::size_t n) {
  counts_[offset(c, partition, kind)] += n;
}

std::size_t TendencyTable::count(CriterionKind c, std::size_t partition, ModuleKind kind) const {
  return counts_[offset(c, partition, kind)];
}

std::size_t TendencyTable::partition_total(CriterionKind c, std::size_t partition) const {
  return count(c, partition, ModuleKind::SA) + count(c, partition, ModuleKind::PA);
}

std::size_t TendencyTable::total(CriterionKind c) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < num_partitions_; ++p) s += partition_total(c, p);
  return s;
}

std::size_t TendencyTable::grand_total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

const Criterion& HybridStrategy::criterion_for_layer(std::size_t layer) const {
  return assignment.at(partition_position(partitions, layer));
}

void HybridStrategy::validate(std::size_t num_layers) const {
  if (partitions.empty() || partitions.size() != assignment.size()) {
    fail(ErrorKind::InvalidArgument, "strategy: every partition needs exactly one criterion");
  }
  std::size_t expected_lo = 0;
  for (std::size_t i = 0; i < partitions.size(); ++i) {
    if (partitions[i].lo != expected_lo || partitions[i].hi <= partitions[i].lo || partitions[i].index != i + 1) {
      fail(ErrorKind::InvalidArgument, "strategy: partitions must be contiguous, ordered and nonempty");
    }
    expected_lo = partitions[i].hi;
  }
  if (expected_lo != num_layers) {
    fail(ErrorKind::InvalidArgument, "strategy: partitions cover " + std::to_string(expected_lo) +
                                         " layers, model has " + std::to_string(num_layers));
  }
  for (const Criterion& c : assignment) {
    if (c.threshold && c.kind != CriterionKind::Threshold) {
      fail(ErrorKind::InvalidArgument, "strategy: only the threshold criterion carries t");
    }
    if (c.threshold && !(*c.threshold > 0.0)) fail(ErrorKind::InvalidArgument, "strategy: t must be positive");
  }
}

HybridStrategy HybridStrategy::uniform(std::size_t num_layers, std::size_t num_partitions, const Criterion& c) {
  HybridStrategy s;
  s.partitions = partition_layers(num_layers, num_partitions);
  s.assignment.assign(s.partitions.size(), c);
  return s;
}

std::vector<PeftModuleId> hypothetical_top_k(const Criterion& c, std::span<const PeftModuleId> active,
                                             const StatsMap& stats, std::size_t k) {
  if (active.empty()) return {};
  ScoreVector scores = score_group(c, active, stats);
  std::sort(scores.begin(), scores.end(), [](const ModuleScore& a, const ModuleScore& b) {
    if (a.unimportance != b.unimportance) return a.unimportance > b.unimportance;
    return a.id < b.id;
  });
  std::vector<PeftModuleId> out;
  for (std::size_t i = 0; i < std::min(k, scores.size()); ++i) out.push_back(scores[i].id);
  return out;
}

WarmupResult warmup(Supernet& net, const Dataset& trimmed, const WarmupOptions& options, std::mt19937_64& rng) {
  if (trimmed.empty()) fail(ErrorKind::InvalidArgument, "warmup: trimmed dataset is empty");
  if (options.rounds == 0) fail(ErrorKind::InvalidArgument, "warmup: rounds must be at least 1");
  if (options.candidates.empty()) fail(ErrorKind::InvalidArgument, "warmup: no candidate criteria");
  const std::vector<Partition> partitions = partition_layers(net.config().num_layers, options.num_partitions);

  const Supernet entry_state = net;
  WarmupResult result{TendencyTable(partitions.size()), 0};
  AdamState optimizer;
  const std::vector<PeftModuleId> active = net.mask().active_ids();
  for (std::size_t round = 0; round < options.rounds; ++round) {
    StatsCollector collector(net.mask());
    const PassResult pass = train_pass(net, trimmed, optimizer, options.training, rng, &collector);
    result.examples += pass.examples;
    const StatsMap& stats = collector.stats();
    for (CriterionKind c : options.candidates) {
      for (const PeftModuleId& id : hypothetical_top_k(Criterion::of(c), active, stats, options.k)) {
        result.table.add(c, partition_position(partitions, id.layer), id.kind);
      }
    }
  }
  net = entry_state;
  return result;
}

double concentration(const TendencyTable& table, CriterionKind c, std::size_t partition) {
  const std::size_t total = table.total(c);
  if (total == 0) return 0.0;
  return static_cast<double>(table.partition_total(c, partition)) / static_cast<double>(total);
}

HybridStrategy assign_strategies(const TendencyTable& table, std::span<const Partition> partitions) {
  if (table.grand_total() == 0) fail(ErrorKind::InvalidArgument, "assign_strategies: tendency table is empty");
  if (partitions.size() != table.num_partitions()) {
    fail(ErrorKind::InvalidArgument, "assign_strategies: table has " + std::to_string(table.num_partitions()) +
                                         " partitions, got " + std::to_string(partitions.size()));
  }
  HybridStrategy s;
  s.partitions.assign(partitions.begin(), partitions.end());
  for (std::size_t p = 0; p < partitions.size(); ++p) {
    std::optional<CriterionKind> best;
    double best_share = -1.0;
    for (CriterionKind c : kAllCriteria) {
      if (table.total(c) == 0) continue;
      const double share = concentration(table, c, p);
      if (share > best_share) {
        best_share = share;
        best = c;
      }
    }
    s.assignment.push_back(Criterion::of(*best));
  }
  return s;
}

Criterion global_tendency_criterion(const TendencyTable& table) {
  if (table.grand_total() == 0) fail(ErrorKind::InvalidArgument, "global_tendency_criterion: table is empty");
  std::optional<CriterionKind> best;
  double best_share = -1.0;
  for (CriterionKind c : kAllCriteria) {
    const std::size_t total = table.total(c);
    if (total == 0) continue;
    for (std::size_t p = 0; p < table.num_partitions(); ++p) {
      for (ModuleKind kind : {ModuleKind::SA, ModuleKind::PA}) {
        const double share = static_cast<double>(table.count(c, p, kind)) / static_cast<double>(total);
        if (share > best_share) {
          best_share = share;
          best = c;
        }
      }
    }
  }
  return Criterion::of(*best);
}

ProbabilityVector prune_probabilities(std::span<const PartitionScore> scores) {
  if (scores.empty()) fail(ErrorKind::InvalidArgument, "prune_probabilities: no active modules");
  const auto n = static_cast<double>(scores.size());
  double mean = 0.0;
  for (const auto& s : scores) mean += static_cast<double>(s.rank);
  mean /= n;
  double var = 0.0;
  for (const auto& s : scores) var += std::pow(static_cast<double>(s.rank) - mean, 2);
  const double sd = std::sqrt(var / n);

  std::vector<double> exponent(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double z = sd > 0.0 ? (static_cast<double>(scores[i].rank) - mean) / sd : 0.0;
    const double k = 1.0 / (1.0 + std::exp(-z));
    exponent[i] = k * scores[i].normalized;
  }
  const double mx = *std::max_element(exponent.begin(), exponent.end());
  ProbabilityVector out;
  out.ids.reserve(scores.size());
  out.p.reserve(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.ids.push_back(scores[i].id);
    out.p.push_back(std::exp(exponent[i] - mx));
    z += out.p.back();
  }
  for (double& p : out.p) p /= z;
  return out;
}

std::vector<PartitionScore> hybrid_scores(const HybridStrategy& strategy, const MaskState& mask,
                                          const StatsMap& stats) {
  strategy.validate(mask.num_layers());
  std::vector<PartitionScore> out;
  for (std::size_t p = 0; p < strategy.partitions.size(); ++p) {
    std::vector<PeftModuleId> ids;
    for (const PeftModuleId& id : mask.active_ids()) {
      if (strategy.partitions[p].contains(id.layer)) ids.push_back(id);
    }
    if (ids.empty()) continue;
    const ScoreVector group = score_group(strategy.assignment[p], ids, stats);
    double lo = group.front().unimportance;
    double hi = lo;
    for (const auto& s : group) {
      lo = std::min(lo, s.unimportance);
      hi = std::max(hi, s.unimportance);
    }
    for (const auto& s : group) {
      const double normalized = hi > lo ? (s.unimportance - lo) / (hi - lo) : 0.5;
      out.push_back(PartitionScore{s.id, p, s.theta, normalized, s.rank});
    }
  }
  std::sort(out.begin(), out.end(), [](const PartitionScore& a, const PartitionScore& b) { return a.id < b.id; });
  return out;
}

std::vector<PeftModuleId> top_k(const ProbabilityVector& probs, std::size_t k) {
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (probs.p[a] != probs.p[b]) return probs.p[a] > probs.p[b];
    return probs.ids[a] < probs.ids[b];
  });
  std::vector<PeftModuleId> out;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) out.push_back(probs.ids[order[i]]);
  return out;
}

}  // namespace hybridprune
