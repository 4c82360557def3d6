// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridprune/experiment.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "hybridprune/error.hpp"
#include "hybridprune/random.hpp"
#include "hybridprune/tasks.hpp"

namespace hybridprune {

double Report::mean_accuracy() const {
  if (seeds.empty()) return 0.0;
  double sum = 0.0;
  for (const SeedReport& s : seeds) sum += s.metrics.accuracy;
  return sum / static_cast<double>(seeds.size());
}

std::size_t resolve_budget(const ScheduleConfig& schedule, const Supernet& net) {
  if (schedule.budget) return *schedule.budget;
  std::size_t peft = 0;
  for (const PeftModule& m : net.modules()) peft += m.param_count();
  return net.head_param_count() +
         static_cast<std::size_t>(std::floor(schedule.budget_fraction * static_cast<double>(peft)));
}

namespace {

// Wall time of one full-data training pass, measured on a throwaway copy so
// the run itself is unaffected.
double measure_epoch_seconds(const Supernet& net, const Dataset& train, const TrainingOptions& options,
                             std::uint64_t seed) {
  Supernet probe = net;
  AdamState optimizer;
  auto rng = make_rng(seed, Stream::Search, 0xE90C);
  const auto t0 = std::chrono::steady_clock::now();
  train_pass(probe, train, optimizer, options, rng);
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

SeedReport run_seed(const ExperimentConfig& config, std::uint64_t seed) {
  const TaskSplits data = generate_task(config.task);
  const TrainingOptions training = config.training();
  Supernet net(config.supernet, seed);

  SeedReport out;
  out.seed = seed;
  out.initial_param_count = trainable_param_count(net, net.mask());
  out.log.retrain_epochs = static_cast<double>(config.retrain_epochs);

  MaskState final_mask = net.mask();
  const bool prune = !config.imported_architecture && config.mode.mode != ExperimentMode::NoPrune;
  if (config.imported_architecture) final_mask = *config.imported_architecture;
  const std::size_t k = config.schedule.k.value_or(default_k(net.mask().active_count()));
  if (prune) {
    out.schedule = derive_schedule(resolve_budget(config.schedule, net), net, k, config.schedule.epochs_per_round,
                                   config.schedule.fidelity);
  }
  out.log.epoch_seconds = measure_epoch_seconds(net, data.train, training, seed);

  if (prune) {
    const PruneSchedule& schedule = *out.schedule;
    out.bound_epochs = search_cost_bound(config.supernet.n_pa_choices, config.supernet.n_sa_choices,
                                         config.supernet.num_layers, k, 1.0);

    const std::vector<Partition> partitions =
        partition_layers(config.supernet.num_layers, config.warmup.num_partitions);
    if (config.imported_strategy) {
      out.strategy = *config.imported_strategy;
    } else {
      const Dataset warm_data = stratified_trim(data.train, config.warmup.trim_fraction, seed);
      WarmupOptions wopt;
      wopt.rounds = config.warmup.rounds;
      wopt.k = k;
      wopt.num_partitions = config.warmup.num_partitions;
      wopt.candidates = config.warmup.candidates;
      wopt.training = training;
      auto warm_rng = make_rng(seed, Stream::Warmup);
      const WarmupResult warm = warmup(net, warm_data, wopt, warm_rng);
      out.tendencies = warm.table;
      out.log.warmup_epochs = static_cast<double>(warm.examples) / static_cast<double>(data.train.size());
      switch (config.mode.mode) {
        case ExperimentMode::Hybrid:
          out.strategy = assign_strategies(warm.table, partitions);
          break;
        case ExperimentMode::Single:
          out.strategy = HybridStrategy::uniform(config.supernet.num_layers, config.warmup.num_partitions,
                                                 Criterion::of(*config.mode.single));
          break;
        case ExperimentMode::NoPartition:
          out.strategy = HybridStrategy::uniform(config.supernet.num_layers, 1, global_tendency_criterion(warm.table));
          break;
        case ExperimentMode::RandomPrune:
        case ExperimentMode::NoPrune:
          break;
      }
    }

    const PrunePolicy policy = out.strategy ? PrunePolicy::hybrid(*out.strategy) : PrunePolicy::random();
    const Dataset low = stratified_trim(data.train, config.schedule.low_fidelity_fraction, seed);
    auto search_rng = make_rng(seed, Stream::Search);
    SearchResult search = run_search(net, data.train, low, policy, schedule,
                                     SearchOptions{training, config.schedule.reinit_survivors}, search_rng);
    out.records = std::move(search.records);
    out.log.pruning_epochs = search.pruning_epochs;
    final_mask = search.final_mask;
  }

  auto retrain_rng = make_rng(seed, Stream::Retrain);
  out.metrics = retrain(net, final_mask, data.train, data.test, config.retrain_epochs, training, retrain_rng);
  out.final_mask = final_mask;
  out.final_param_count = trainable_param_count(net, final_mask);
  return out;
}

Report run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  Report report{config, {}};
  for (std::uint64_t seed : config.seeds) {
    report.seeds.push_back(run_seed(config, seed));
    if (progress) {
      const SeedReport& s = report.seeds.back();
      progress("seed " + std::to_string(seed) + ": accuracy " + std::to_string(s.metrics.accuracy) + ", params " +
               std::to_string(s.final_param_count) + ", rounds " + std::to_string(s.records.size()));
    }
  }
  return report;
}

}  // namespace hybridprune
