// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_TASKS_HPP
#define HYBRIDPRUNE_TASKS_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "hybridprune/dataset.hpp"

namespace hybridprune {

enum class GeneratorKind {
  // Label = token class (id mod C) that occurs strictly most often.
  TokenMajority,
  // Label 1 iff a fixed bigram occurs somewhere in the sequence.
  PatternPresence,
  // Label = parity of first token XOR parity of last token.
  PositionParity,
};

std::string_view to_string(GeneratorKind kind) noexcept;
GeneratorKind parse_generator_kind(std::string_view text);

struct SyntheticTaskSpec {
  std::string name = "token-majority";
  GeneratorKind generator = GeneratorKind::TokenMajority;
  std::size_t vocab_size = 32;
  std::size_t seq_len = 8;
  std::size_t num_classes = 2;
  std::size_t train_size = 256;
  std::size_t val_size = 64;
  std::size_t test_size = 256;
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const SyntheticTaskSpec&) const = default;
};

struct TaskSplits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Deterministic in spec.seed; every split has class counts within one of
// each other and no sequence appears twice across the three splits.
TaskSplits generate_task(const SyntheticTaskSpec& spec);

// Per label, round(fraction * count) examples sampled without replacement,
// then shuffled. Rejects fractions that would empty a present class.
Dataset stratified_trim(const Dataset& data, double fraction, std::uint64_t seed);

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_TASKS_HPP
