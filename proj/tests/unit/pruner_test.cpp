// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "hybridprune/error.hpp"
#include "hybridprune/pruner.hpp"

namespace hybridprune {
namespace {

using testing::tiny_dataset;
using testing::tiny_supernet;

TEST(ScheduleTest, FortyEightModulesKeepTwelve) {
  Supernet net(tiny_supernet(24), 1);
  const std::size_t module = net.module({0, ModuleKind::SA}).param_count();
  ASSERT_EQ(module, net.module({0, ModuleKind::PA}).param_count());
  const PruneSchedule s = derive_schedule(net.head_param_count() + 12 * module, net, 4);
  EXPECT_EQ(s.rounds, 9u);
  EXPECT_EQ(s.k, 4u);
  EXPECT_FALSE(s.warning.has_value());
}

TEST(ScheduleTest, BudgetBelowHeadIsUnreachable) {
  Supernet net(tiny_supernet(4), 1);
  try {
    derive_schedule(net.head_param_count() - 1, net, 2);
    FAIL() << "expected an unreachable budget error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Unreachable);
    EXPECT_NE(std::string(e.what()).find(std::to_string(net.head_param_count())), std::string::npos);
  }
}

TEST(ScheduleTest, GenerousBudgetGivesZeroRoundsWithWarning) {
  Supernet net(tiny_supernet(4), 1);
  const PruneSchedule s = derive_schedule(trainable_param_count(net, net.mask()), net, 2);
  EXPECT_EQ(s.rounds, 0u);
  EXPECT_TRUE(s.warning.has_value());
}

TEST(ScheduleTest, MixedSizesMatchSimulatedPruningOrder) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> width(1, 8);
  std::uniform_int_distribution<std::size_t> k_d(1, 5);
  for (int trial = 0; trial < 30; ++trial) {
    SupernetConfig c = tiny_supernet(8);
    c.sa_bottleneck = width(rng);
    c.pa_rank = width(rng);
    Supernet net(c, 2);
    const std::size_t head = net.head_param_count();
    const std::size_t total = trainable_param_count(net, net.mask());
    const std::size_t budget = std::uniform_int_distribution<std::size_t>(head, total - 1)(rng);
    const std::size_t k = k_d(rng);
    std::vector<std::size_t> sizes;
    for (const PeftModule& m : net.modules()) sizes.push_back(m.param_count());
    const std::size_t r = testing::simulated_rounds(sizes, total, budget, k);
    EXPECT_EQ(derive_schedule(budget, net, k).rounds, r);
    EXPECT_GT(r, 0u);
  }
}

TEST(ScheduleTest, DefaultKTargetsTwelveRounds) {
  EXPECT_EQ(default_k(48), 4u);
  EXPECT_EQ(default_k(49), 5u);
  EXPECT_EQ(default_k(3), 1u);
}

TEST(CostBoundTest, Examples) {
  EXPECT_DOUBLE_EQ(search_cost_bound(1, 1, 24, 4, 1.0), 6.0);
  EXPECT_DOUBLE_EQ(search_cost_bound(1, 1, 24, 8, 1.0), 3.0);
  EXPECT_DOUBLE_EQ(search_cost_bound(2, 3, 12, 4, 0.5), 9.0);
  EXPECT_NEAR(search_cost_bound(1, 1, 24, 4, 1.0) / 20.0, 0.30, 1e-12);
  EXPECT_THROW(search_cost_bound(1, 1, 24, 0, 1.0), Error);
  EXPECT_THROW(search_cost_bound(1, 1, 24, 4, 0.0), Error);
}

TEST(PruneRoundTest, RemovesArgmaxK) {
  Supernet net(tiny_supernet(4), 3);
  const Dataset data = tiny_dataset(3, 32);
  const PrunePolicy policy = PrunePolicy::hybrid(HybridStrategy::uniform(4, 4, Criterion::of(CriterionKind::Weight)));
  SearchOptions options;
  options.training.batch_size = 16;
  AdamState opt;
  std::mt19937_64 rng(4);
  const std::size_t before = trainable_param_count(net, net.mask());
  const RoundOutcome out = prune_round(net, policy, data, 2, 1, net.head_param_count(), 1.0, false, opt, options, rng);
  EXPECT_EQ(out.record.pruned, testing::oracle_top_k(out.record.probabilities, 2));
  EXPECT_EQ(out.record.pruned_by, (std::vector<std::string>{"weight", "weight"}));
  EXPECT_EQ(out.mask.active_count(), 6u);
  EXPECT_EQ(net.mask(), out.mask);
  EXPECT_LT(out.record.param_count_after, before);
  EXPECT_FALSE(out.record.terminal);
  EXPECT_EQ(out.examples, 32u);
  EXPECT_EQ(out.record.probabilities.size(), 8u);
}

TEST(PruneRoundTest, SurvivorsAreReinitializedUnlessTerminal) {
  const Dataset data = tiny_dataset(4, 32);
  auto survivor_weights = [&](bool reinit, bool last) {
    Supernet net(tiny_supernet(4), 3);
    SearchOptions options;
    options.training.batch_size = 16;
    options.reinit_survivors = reinit;
    AdamState opt;
    std::mt19937_64 rng(4);
    const RoundOutcome out = prune_round(net, PrunePolicy::random(), data, 2, 1, 0, 1.0, last, opt, options, rng);
    std::vector<Matrix> w;
    for (const PeftModuleId& id : out.mask.active_ids()) w.push_back(net.module(id).down.values());
    return w;
  };
  EXPECT_NE(survivor_weights(true, false), survivor_weights(false, false));
  EXPECT_EQ(survivor_weights(true, true), survivor_weights(false, true));
}

TEST(PruneRoundTest, ExhaustionLeavesBackboneAndHead) {
  Supernet net(tiny_supernet(2), 5);
  const Dataset data = tiny_dataset(5, 16);
  SearchOptions options;
  options.training.batch_size = 16;
  AdamState opt;
  std::mt19937_64 rng(6);
  const RoundOutcome out = prune_round(net, PrunePolicy::random(), data, 4, 1, net.head_param_count(), 1.0, false, opt,
                                       options, rng);
  EXPECT_EQ(out.mask.active_count(), 0u);
  EXPECT_TRUE(out.record.terminal);
  EXPECT_EQ(out.record.param_count_after, net.head_param_count());
  EXPECT_EQ(net.trainable_parameters().size(), 2u);
  EXPECT_EQ(out.record.pruned_by.front(), "random");

  AdamState opt2;
  EXPECT_THROW(prune_round(net, PrunePolicy::random(), data, 1, 2, 0, 1.0, false, opt2, options, rng), Error);
}

TEST(PruneRoundTest, OversizedKPrunesAllRemaining) {
  Supernet net(tiny_supernet(2), 6);
  const Dataset data = tiny_dataset(6, 16);
  SearchOptions options;
  AdamState opt;
  std::mt19937_64 rng(7);
  const RoundOutcome out = prune_round(net, PrunePolicy::random(), data, 10, 1, 0, 1.0, false, opt, options, rng);
  EXPECT_EQ(out.record.pruned.size(), 4u);
  EXPECT_TRUE(out.record.terminal);
}

TEST(SearchTest, ZeroRoundsKeepsEverythingActive) {
  Supernet net(tiny_supernet(4), 7);
  const Dataset data = tiny_dataset(7, 32);
  PruneSchedule s = derive_schedule(trainable_param_count(net, net.mask()), net, 2);
  std::mt19937_64 rng(1);
  const SearchResult r = run_search(net, data, data, PrunePolicy::random(), s, SearchOptions{}, rng);
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.final_mask, MaskState(4));
  EXPECT_EQ(r.pruning_epochs, 0.0);
}

TEST(SearchTest, ActiveCountDropsByKEachRound) {
  Supernet net(tiny_supernet(6), 8);
  const Dataset data = tiny_dataset(8, 32);
  const std::size_t module = net.module({0, ModuleKind::SA}).param_count();
  const PruneSchedule s = derive_schedule(net.head_param_count() + 4 * module, net, 2);
  ASSERT_EQ(s.rounds, 4u);
  SearchOptions options;
  options.training.batch_size = 16;
  std::mt19937_64 rng(2);
  const SearchResult r = run_search(net, data, data, PrunePolicy::random(), s, options, rng);
  ASSERT_EQ(r.records.size(), 4u);
  EXPECT_EQ(r.final_mask.active_count(), 12u - 4u * 2u);
  EXPECT_DOUBLE_EQ(r.pruning_epochs, 4.0);
  EXPECT_TRUE(r.records.back().terminal);
}

TEST(SearchTest, LowFidelityHasSameCardinalityAndFewerEpochs) {
  const Dataset full = tiny_dataset(9, 64);
  const Dataset trimmed = stratified_trim(full, 0.25, 9);
  auto search = [&](Fidelity f) {
    Supernet net(tiny_supernet(4), 9);
    const PruneSchedule s = derive_schedule(net.head_param_count() + 100, net, 2, 1.0, f);
    SearchOptions options;
    options.training.batch_size = 8;
    std::mt19937_64 rng(3);
    const PrunePolicy policy =
        PrunePolicy::hybrid(HybridStrategy::uniform(4, 4, Criterion::of(CriterionKind::Gradient)));
    return run_search(net, full, trimmed, policy, s, options, rng);
  };
  const SearchResult hi = search(Fidelity::Full);
  const SearchResult lo = search(Fidelity::Low);
  EXPECT_EQ(hi.final_mask.active_count(), lo.final_mask.active_count());
  EXPECT_EQ(hi.records.size(), lo.records.size());
  EXPECT_DOUBLE_EQ(lo.pruning_epochs, 0.25 * hi.pruning_epochs);
}

bool same_records(const std::vector<PruneRecord>& a, const std::vector<PruneRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].pruned != b[i].pruned || a[i].probabilities.p != b[i].probabilities.p ||
        a[i].param_count_after != b[i].param_count_after || a[i].pruned_by != b[i].pruned_by) {
      return false;
    }
  }
  return true;
}

TEST(SearchTest, IdenticalSeedsGiveIdenticalRecords) {
  const Dataset data = tiny_dataset(10, 32);
  auto search = [&](std::uint64_t seed) {
    Supernet net(tiny_supernet(4), 10);
    const PruneSchedule s = derive_schedule(net.head_param_count() + 150, net, 2);
    SearchOptions options;
    options.training.batch_size = 16;
    std::mt19937_64 rng(seed);
    const PrunePolicy policy =
        PrunePolicy::hybrid(HybridStrategy::uniform(4, 2, Criterion::of(CriterionKind::Sensitivity)));
    return run_search(net, data, data, policy, s, options, rng).records;
  };
  const auto a = search(1);
  EXPECT_TRUE(same_records(a, search(1)));
  EXPECT_FALSE(a.empty());
}

TEST(SearchTest, RandomizedConfigsKeepMaskAndBudgetRules) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const testing::SearchCheck c = testing::random_search_check(seed);
    EXPECT_TRUE(c.argmax_ok) << c.detail;
    EXPECT_TRUE(c.decreasing_ok) << c.detail;
    EXPECT_TRUE(c.budget_ok) << c.detail;
  }
}

TEST(RetrainTest, AllMaskedTrainsOnlyTheHead) {
  Supernet net(tiny_supernet(2), 11);
  const Supernet before = net;
  MaskState none(2);
  for (std::size_t i = 0; i < 4; ++i) none.deactivate(PeftModuleId::from_flat(i));
  const Dataset data = tiny_dataset(11, 32);
  TrainingOptions options;
  options.batch_size = 16;
  options.learning_rate = 1e-2;
  std::mt19937_64 rng(1);
  const RetrainMetrics m = retrain(net, none, data, data, 3, options, rng);
  EXPECT_EQ(m.loss_curve.size(), 3u);
  EXPECT_EQ(net.mask(), none);
  for (std::size_t l = 0; l < 2; ++l) EXPECT_EQ(net.layer(l).w1.values(), before.layer(l).w1.values());
  EXPECT_NE(net.head_weight().values(), before.head_weight().values());
  EXPECT_EQ(net.trainable_parameters().size(), 2u);
}

TEST(RetrainTest, DeterministicUnderFixedSeed) {
  const Dataset data = tiny_dataset(12, 32);
  auto run = [&]() {
    Supernet net(tiny_supernet(2), 12);
    MaskState m(2);
    m.deactivate({1, ModuleKind::PA});
    TrainingOptions options;
    options.batch_size = 16;
    std::mt19937_64 rng(5);
    return retrain(net, m, data, data, 2, options, rng);
  };
  const RetrainMetrics a = run();
  const RetrainMetrics b = run();
  EXPECT_EQ(a.loss_curve, b.loss_curve);
  EXPECT_EQ(a.accuracy, b.accuracy);
}

// Class 0 draws tokens from the lower half of the vocabulary and class 1
// from the upper half, so mean-pooled embeddings are linearly separable.
Dataset separable(std::uint64_t seed, std::size_t n) {
  Dataset d;
  d.split = "train";
  d.seq_len = 6;
  d.vocab_size = 16;
  d.num_classes = 2;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> half(0, 7);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    std::vector<int> seq(6);
    for (int& t : seq) t = half(rng) + 8 * label;
    d.push_back(seq, label);
  }
  return d;
}

TEST(RetrainTest, LinearlySeparableTaskReachesNinetyFivePercent) {
  Supernet net(tiny_supernet(2), 13);
  TrainingOptions options;
  options.batch_size = 16;
  options.learning_rate = 1e-2;
  std::mt19937_64 rng(13);
  const RetrainMetrics m = retrain(net, MaskState(2), separable(1, 128), separable(2, 128), 20, options, rng);
  EXPECT_GE(m.accuracy, 0.95);
  EXPECT_LT(m.loss_curve.back(), m.loss_curve.front());
}

}  // namespace
}  // namespace hybridprune
