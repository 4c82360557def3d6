// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

// Small models, datasets and independent oracles for search-level tests.

#ifndef HYBRIDPRUNE_TESTS_FIXTURES_HPP
#define HYBRIDPRUNE_TESTS_FIXTURES_HPP

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "hybridprune/config.hpp"
#include "hybridprune/pruner.hpp"
#include "hybridprune/tasks.hpp"

namespace hybridprune::testing {

inline SupernetConfig tiny_supernet(std::size_t layers, std::size_t vocab = 16, std::size_t seq = 6) {
  SupernetConfig c;
  c.num_layers = layers;
  c.d_model = 16;
  c.num_heads = 2;
  c.d_ff = 32;
  c.sa_bottleneck = 4;
  c.pa_rank = 4;
  c.vocab_size = vocab;
  c.num_classes = 2;
  c.max_seq_len = seq;
  return c;
}

inline Dataset tiny_dataset(std::uint64_t seed, std::size_t n, GeneratorKind kind = GeneratorKind::TokenMajority) {
  SyntheticTaskSpec spec;
  spec.generator = kind;
  spec.vocab_size = 16;
  spec.seq_len = 6;
  spec.train_size = n;
  spec.val_size = 2;
  spec.test_size = 2;
  spec.seed = seed;
  return generate_task(spec).train;
}

// Argmax-k of a probability vector, ties broken by module order.
inline std::vector<PeftModuleId> oracle_top_k(const ProbabilityVector& pv, std::size_t k) {
  std::vector<std::pair<double, PeftModuleId>> items;
  for (std::size_t i = 0; i < pv.size(); ++i) items.emplace_back(pv.p[i], pv.ids[i]);
  std::vector<PeftModuleId> out;
  for (std::size_t taken = 0; taken < k && !items.empty(); ++taken) {
    auto best = items.begin();
    for (auto it = items.begin(); it != items.end(); ++it) {
      if (it->first > best->first || (it->first == best->first && it->second < best->second)) best = it;
    }
    out.push_back(best->second);
    items.erase(best);
  }
  return out;
}

// Rounds needed when each round removes the k smallest remaining modules.
inline std::size_t simulated_rounds(std::vector<std::size_t> sizes, std::size_t count, std::size_t budget,
                                    std::size_t k) {
  std::sort(sizes.begin(), sizes.end());
  std::size_t rounds = 0;
  std::size_t next = 0;
  while (count > budget && next < sizes.size()) {
    for (std::size_t i = 0; i < k && next < sizes.size(); ++i) count -= sizes[next++];
    ++rounds;
  }
  return rounds;
}

struct SearchCheck {
  bool argmax_ok = true;
  bool decreasing_ok = true;
  bool budget_ok = true;
  std::string detail;
};

// Runs one randomized search and checks the per-round mask and budget rules.
inline SearchCheck random_search_check(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> layers_d(4, 10);
  std::uniform_int_distribution<std::size_t> width(2, 6);
  std::uniform_int_distribution<std::size_t> k_d(1, 4);
  SupernetConfig c = tiny_supernet(layers_d(rng));
  c.sa_bottleneck = width(rng);
  c.pa_rank = width(rng);
  c.pa_linear = (rng() & 1U) != 0;
  Supernet net(c, rng());
  const std::size_t head = net.head_param_count();
  const std::size_t initial = trainable_param_count(net, net.mask());
  std::uniform_int_distribution<std::size_t> budget_d(head, initial - 1);
  const std::size_t budget = budget_d(rng);
  const std::size_t k = k_d(rng);
  const PruneSchedule schedule = derive_schedule(budget, net, k);
  const Dataset data = tiny_dataset(seed, 32);
  SearchOptions options;
  options.training.batch_size = 16;
  const bool random_policy = (rng() & 1U) != 0;
  const PrunePolicy policy =
      random_policy ? PrunePolicy::random()
                    : PrunePolicy::hybrid(HybridStrategy::uniform(
                          c.num_layers, 4, Criterion::of(kAllCriteria[rng() % kAllCriteria.size()])));
  const SearchResult result = run_search(net, data, data, policy, schedule, options, rng);

  SearchCheck check;
  MaskState mask(c.num_layers);
  std::size_t previous = initial;
  for (const PruneRecord& rec : result.records) {
    const std::size_t expect_k = std::min(k, mask.active_count());
    if (rec.pruned != oracle_top_k(rec.probabilities, expect_k)) {
      check.argmax_ok = false;
      check.detail += " round " + std::to_string(rec.round) + " pruned set differs from argmax-k;";
    }
    for (const PeftModuleId& id : rec.pruned) mask.deactivate(id);
    const std::size_t now = trainable_param_count(net, mask);
    if (now != rec.param_count_after || !(now < previous)) {
      check.decreasing_ok = false;
      check.detail += " round " + std::to_string(rec.round) + " count did not decrease;";
    }
    previous = now;
  }
  if (!(mask == result.final_mask) || trainable_param_count(net, result.final_mask) > budget) {
    check.budget_ok = false;
    check.detail += " final count " + std::to_string(trainable_param_count(net, result.final_mask)) + " > " +
                    std::to_string(budget) + ";";
  }
  return check;
}

// A complete experiment small enough to run in well under a second.
inline std::string tiny_experiment_json() {
  return R"({
  "task": {"generator": "token-majority", "vocab_size": 16, "seq_len": 6,
           "train_size": 64, "val_size": 8, "test_size": 32, "seed": 3},
  "supernet": {"num_layers": 4, "d_model": 16, "num_heads": 2, "d_ff": 32,
               "sa_bottleneck": 4, "pa_rank": 4},
  "schedule": {"budget_fraction": 0.5, "low_fidelity_fraction": 0.25},
  "warmup": {"rounds": 1, "trim_fraction": 0.25},
  "training": {"batch_size": 16, "learning_rate": 0.01, "retrain_epochs": 2},
  "seeds": [1, 2]
})";
}

inline ExperimentConfig tiny_experiment() { return parse_config(tiny_experiment_json()); }

}  // namespace hybridprune::testing

#endif  // HYBRIDPRUNE_TESTS_FIXTURES_HPP
