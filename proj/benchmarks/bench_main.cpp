// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "hybridprune/criteria.hpp"
#include "hybridprune/supernet.hpp"
#include "hybridprune/tasks.hpp"
#include "hybridprune/training.hpp"

namespace {

using namespace hybridprune;

SupernetConfig bench_config(std::size_t layers) {
  SupernetConfig c;
  c.num_layers = layers;
  return c;
}

std::vector<int> batch_tokens(std::size_t batch, std::size_t seq_len, std::size_t vocab) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> tok(0, static_cast<int>(vocab) - 1);
  std::vector<int> out(batch * seq_len);
  for (int& t : out) t = tok(rng);
  return out;
}

void BM_Forward(benchmark::State& state) {
  const auto layers = static_cast<std::size_t>(state.range(0));
  Supernet net(bench_config(layers), 1);
  const auto tokens = batch_tokens(32, 8, net.config().vocab_size);
  for (auto _ : state) {
    Tape tape;
    const ForwardTrace trace = net.forward(tape, tokens, 8, false);
    benchmark::DoNotOptimize(tape.value(trace.logits).data());
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_Forward)->Arg(4)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const auto layers = static_cast<std::size_t>(state.range(0));
  Supernet net(bench_config(layers), 1);
  const auto tokens = batch_tokens(32, 8, net.config().vocab_size);
  const std::vector<int> labels(32, 1);
  AdamState optimizer;
  const TrainingOptions options;
  StatsCollector collector(net.mask());
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_step(net, tokens, labels, optimizer, options, &collector));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStep)->Arg(4)->Arg(24)->Unit(benchmark::kMillisecond);

void BM_TrainPass(benchmark::State& state) {
  Supernet net(bench_config(24), 1);
  SyntheticTaskSpec spec;
  const Dataset train = generate_task(spec).train;
  AdamState optimizer;
  const TrainingOptions options;
  std::mt19937_64 rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_pass(net, train, optimizer, options, rng).mean_loss);
  }
}
BENCHMARK(BM_TrainPass)->Unit(benchmark::kMillisecond);

void BM_RawScore(benchmark::State& state) {
  const auto kind = static_cast<CriterionKind>(state.range(0));
  ModuleStats stats;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> w(1024);
  std::vector<double> g(1024);
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = n(rng);
    g[i] = n(rng);
  }
  stats.observe_gradients(w, g);
  stats.snapshot(w);
  Matrix out = Matrix::Random(256, 64);
  stats.observe_output(out);
  const Criterion c = kind == CriterionKind::Threshold ? Criterion::fixed_threshold(0.1) : Criterion::of(kind);
  for (auto _ : state) benchmark::DoNotOptimize(raw_score(c, stats));
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_RawScore)->DenseRange(0, 5);

}  // namespace

BENCHMARK_MAIN();
