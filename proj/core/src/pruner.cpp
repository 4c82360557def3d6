// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridprune/pruner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "hybridprune/error.hpp"

namespace hybridprune {

std::string_view to_string(Fidelity f) noexcept { return f == Fidelity::Full ? "full" : "low"; }

Fidelity parse_fidelity(std::string_view text) {
  if (text == "full") return Fidelity::Full;
  if (text == "low") return Fidelity::Low;
  fail(ErrorKind::Parse, "unknown fidelity '" + std::string(text) + "' (expected full or low)");
}

std::size_t default_k(std::size_t active_modules) noexcept { return std::max<std::size_t>(1, (active_modules + 11) / 12); }

PruneSchedule derive_schedule(std::size_t budget, const Supernet& net, std::size_t k, double epochs_per_round,
                              Fidelity fidelity) {
  if (k == 0) fail(ErrorKind::InvalidArgument, "derive_schedule: k must be at least 1");
  if (!(epochs_per_round > 0.0)) fail(ErrorKind::InvalidArgument, "derive_schedule: epochs_per_round must be positive");
  const std::size_t head = net.head_param_count();
  if (budget < head) {
    fail(ErrorKind::Unreachable, "budget " + std::to_string(budget) +
                                     " is unreachable; minimum achievable trainable count is " +
                                     std::to_string(head));
  }
  PruneSchedule s{budget, 0, k, epochs_per_round, fidelity, std::nullopt};
  std::size_t count = trainable_param_count(net, net.mask());
  if (budget >= count) {
    s.warning = "budget " + std::to_string(budget) + " already covers the initial trainable count " +
                std::to_string(count) + "; no pruning rounds scheduled";
    return s;
  }
  std::vector<std::size_t> sizes;
  for (const PeftModuleId& id : net.mask().active_ids()) sizes.push_back(net.module(id).param_count());
  std::sort(sizes.begin(), sizes.end());
  std::size_t removed = 0;
  while (count > budget) {
    for (std::size_t i = 0; i < k && removed < sizes.size(); ++i) count -= sizes[removed++];
    ++s.rounds;
  }
  return s;
}

namespace {

ProbabilityVector random_probabilities(const MaskState& mask, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProbabilityVector pv;
  double z = 0.0;
  for (const PeftModuleId& id : mask.active_ids()) {
    pv.ids.push_back(id);
    // Strictly positive draw so every entry keeps nonzero mass.
    pv.p.push_back(u(rng) + 1e-12);
    z += pv.p.back();
  }
  for (double& p : pv.p) p /= z;
  return pv;
}

}  // namespace

RoundOutcome prune_round(Supernet& net, const PrunePolicy& policy, const Dataset& data, std::size_t k,
                         std::size_t round, std::size_t budget, double epochs_per_round, bool last_round,
                         AdamState& optimizer, const SearchOptions& options, std::mt19937_64& rng) {
  if (k == 0) fail(ErrorKind::InvalidArgument, "prune_round: k must be at least 1");
  const std::size_t active = net.mask().active_count();
  if (active == 0) fail(ErrorKind::InvalidArgument, "prune_round: no active modules left");

  const auto steps = static_cast<std::size_t>(std::ceil(
      epochs_per_round * static_cast<double>(data.size()) / static_cast<double>(options.training.batch_size)));
  RoundOutcome out;
  const StatsMap stats =
      collect_stats(net, data, std::max<std::size_t>(1, steps), optimizer, options.training, rng, &out.examples);

  PruneRecord& rec = out.record;
  rec.round = round;
  if (policy.kind == PolicyKind::Random) {
    rec.probabilities = random_probabilities(net.mask(), rng);
  } else {
    rec.probabilities = prune_probabilities(hybrid_scores(policy.strategy, net.mask(), stats));
  }
  rec.pruned = top_k(rec.probabilities, std::min(k, active));
  MaskState mask = net.mask();
  for (const PeftModuleId& id : rec.pruned) {
    mask.deactivate(id);
    rec.pruned_by.push_back(policy.kind == PolicyKind::Random ? std::string("random")
                                                              : policy.strategy.criterion_for_layer(id.layer).tag());
  }
  net.apply_mask(mask);
  rec.param_count_after = trainable_param_count(net, mask);
  rec.terminal = last_round || k >= active || rec.param_count_after <= budget;

  if (!rec.terminal && options.reinit_survivors) {
    for (const PeftModuleId& id : mask.active_ids()) {
      net.reinitialize_module(id, rng);
      optimizer.forget(net.module(id).down);
      optimizer.forget(net.module(id).up);
    }
  }
  out.mask = std::move(mask);
  return out;
}

SearchResult run_search(Supernet& net, const Dataset& full, const Dataset& trimmed, const PrunePolicy& policy,
                        const PruneSchedule& schedule, const SearchOptions& options, std::mt19937_64& rng) {
  if (full.empty()) fail(ErrorKind::InvalidArgument, "run_search: empty dataset");
  const Dataset& data = schedule.fidelity == Fidelity::Full ? full : trimmed;
  if (data.empty()) fail(ErrorKind::InvalidArgument, "run_search: low-fidelity dataset is empty");

  const auto t0 = std::chrono::steady_clock::now();
  SearchResult result;
  AdamState optimizer;
  for (std::size_t round = 1; round <= schedule.rounds; ++round) {
    if (trainable_param_count(net, net.mask()) <= schedule.budget || net.mask().active_count() == 0) break;
    RoundOutcome outcome = prune_round(net, policy, data, schedule.k, round, schedule.budget,
                                       schedule.epochs_per_round, round == schedule.rounds, optimizer, options, rng);
    result.examples += outcome.examples;
    const bool terminal = outcome.record.terminal;
    result.records.push_back(std::move(outcome.record));
    if (terminal) break;
  }
  result.final_mask = net.mask();
  if (schedule.rounds > 0 && trainable_param_count(net, result.final_mask) > schedule.budget) {
    fail(ErrorKind::Unreachable, "search finished above budget: " +
                                     std::to_string(trainable_param_count(net, result.final_mask)) + " > " +
                                     std::to_string(schedule.budget));
  }
  result.pruning_epochs = static_cast<double>(result.examples) / static_cast<double>(full.size());
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

RetrainMetrics retrain(Supernet& net, const MaskState& mask, const Dataset& train, const Dataset& eval,
                       std::size_t epochs, const TrainingOptions& options, std::mt19937_64& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  net.apply_mask(mask);
  for (const PeftModuleId& id : mask.active_ids()) net.reinitialize_module(id, rng);
  net.reinitialize_head(rng);
  AdamState optimizer;
  RetrainMetrics metrics;
  for (std::size_t e = 0; e < epochs; ++e) {
    metrics.loss_curve.push_back(train_pass(net, train, optimizer, options, rng).mean_loss);
  }
  metrics.accuracy = evaluate_accuracy(net, eval);
  metrics.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return metrics;
}

double search_cost_bound(std::size_t n_pa, std::size_t n_sa, std::size_t num_layers, std::size_t k,
                         double t_epoch) {
  if (n_pa == 0 || n_sa == 0 || num_layers == 0 || k == 0 || !(t_epoch > 0.0)) {
    fail(ErrorKind::InvalidArgument, "search_cost_bound: all arguments must be positive");
  }
  return static_cast<double>(n_pa * n_sa) * (static_cast<double>(num_layers) / static_cast<double>(k)) * t_epoch;
}

}  // namespace hybridprune
