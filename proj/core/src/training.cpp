// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridprune/training.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "hybridprune/error.hpp"

namespace hybridprune {

void Dataset::push_back(std::span<const int> sequence, int label) {
  if (sequence.size() != seq_len) {
    fail(ErrorKind::ShapeMismatch, "dataset: sequence of length " + std::to_string(sequence.size()) +
                                       ", expected " + std::to_string(seq_len));
  }
  tokens.insert(tokens.end(), sequence.begin(), sequence.end());
  labels.push_back(label);
}

std::vector<std::size_t> Dataset::label_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int y : labels) ++counts.at(static_cast<std::size_t>(y));
  return counts;
}

void Dataset::validate() const {
  if (tokens.size() != labels.size() * seq_len) {
    fail(ErrorKind::InvalidArgument, "dataset '" + split + "': token count does not match labels");
  }
  for (int t : tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size) {
      fail(ErrorKind::InvalidArgument, "dataset '" + split + "': token " + std::to_string(t) + " out of range");
    }
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
      fail(ErrorKind::InvalidArgument, "dataset '" + split + "': label " + std::to_string(y) + " out of range");
    }
  }
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out{data.split, data.seq_len, data.vocab_size, data.num_classes, {}, {}};
  out.tokens.reserve(indices.size() * data.seq_len);
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(data.sequence(i), data.labels.at(i));
  return out;
}

StatsCollector::StatsCollector(const MaskState& mask) {
  for (const PeftModuleId& id : mask.active_ids()) stats_.emplace(id, ModuleStats{});
}

void StatsCollector::observe_step(const Supernet& net, const Tape& tape, const ForwardTrace& trace) {
  for (auto& [id, s] : stats_) {
    if (!net.mask().active(id)) continue;
    const PeftModule& m = net.module(id);
    s.observe_gradients(flatten_weights(m), flatten_grads(m));
    if (const auto& out = trace.module_outputs.at(id.flat_index())) s.observe_output(tape.value(*out));
  }
}

void StatsCollector::finish(const Supernet& net) {
  for (auto& [id, s] : stats_) s.snapshot(flatten_weights(net.module(id)));
}

double train_step(Supernet& net, std::span<const int> tokens, std::span<const int> labels,
                  AdamState& optimizer, const TrainingOptions& options, StatsCollector* collector) {
  if (labels.empty()) fail(ErrorKind::InvalidArgument, "train_step: empty batch");
  const auto seq_len = static_cast<Index>(tokens.size() / labels.size());
  Tape tape;
  const ForwardTrace trace = net.forward(tape, tokens, seq_len, true);
  const Var loss = tape.softmax_cross_entropy(trace.logits, labels);
  net.zero_grad();
  tape.backward(loss);
  if (collector != nullptr) collector->observe_step(net, tape, trace);
  const std::vector<Tensor*> params = net.trainable_parameters();
  adam_step(params, optimizer, options.learning_rate, options.adam);
  return tape.value(loss)(0, 0);
}

namespace {

struct BatchBuffer {
  std::vector<int> tokens;
  std::vector<int> labels;

  void fill(const Dataset& data, std::span<const std::size_t> indices) {
    tokens.clear();
    labels.clear();
    for (std::size_t i : indices) {
      const auto seq = data.sequence(i);
      tokens.insert(tokens.end(), seq.begin(), seq.end());
      labels.push_back(data.labels[i]);
    }
  }
};

std::vector<std::size_t> shuffled_order(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

PassResult train_pass(Supernet& net, const Dataset& data, AdamState& optimizer, const TrainingOptions& options,
                      std::mt19937_64& rng, StatsCollector* collector) {
  if (data.empty()) fail(ErrorKind::InvalidArgument, "train_pass: empty dataset");
  if (options.batch_size == 0) fail(ErrorKind::InvalidArgument, "train_pass: batch_size must be positive");
  const std::vector<std::size_t> order = shuffled_order(data.size(), rng);
  BatchBuffer batch;
  PassResult result;
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
    const std::size_t len = std::min(options.batch_size, order.size() - start);
    batch.fill(data, std::span<const std::size_t>(order).subspan(start, len));
    loss_sum += train_step(net, batch.tokens, batch.labels, optimizer, options, collector) *
                static_cast<double>(len);
    result.examples += len;
    ++result.steps;
  }
  result.mean_loss = loss_sum / static_cast<double>(result.examples);
  if (collector != nullptr) collector->finish(net);
  return result;
}

StatsMap collect_stats(Supernet& net, const Dataset& data, std::size_t steps, AdamState& optimizer,
                       const TrainingOptions& options, std::mt19937_64& rng, std::size_t* examples_seen) {
  if (steps == 0) fail(ErrorKind::InvalidArgument, "collect_stats: steps must be at least 1");
  if (data.empty()) fail(ErrorKind::InvalidArgument, "collect_stats: empty dataset");
  StatsCollector collector(net.mask());
  BatchBuffer batch;
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < steps; ++s) {
    if (cursor >= order.size()) {
      order = shuffled_order(data.size(), rng);
      cursor = 0;
    }
    const std::size_t len = std::min(options.batch_size, order.size() - cursor);
    batch.fill(data, std::span<const std::size_t>(order).subspan(cursor, len));
    cursor += len;
    if (examples_seen != nullptr) *examples_seen += len;
    train_step(net, batch.tokens, batch.labels, optimizer, options, &collector);
  }
  collector.finish(net);
  return collector.take();
}

double evaluate_accuracy(Supernet& net, const Dataset& data, std::size_t batch_size) {
  if (data.empty()) return 0.0;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  BatchBuffer batch;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t len = std::min(batch_size, order.size() - start);
    batch.fill(data, std::span<const std::size_t>(order).subspan(start, len));
    Tape tape;
    const ForwardTrace trace =
        net.forward(tape, batch.tokens, static_cast<Index>(data.seq_len), false);
    const Matrix& logits = tape.value(trace.logits);
    for (Index r = 0; r < logits.rows(); ++r) {
      Index arg = 0;
      logits.row(r).maxCoeff(&arg);
      if (arg == batch.labels[static_cast<std::size_t>(r)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace hybridprune
