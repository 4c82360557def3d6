// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_DATASET_HPP
#define HYBRIDPRUNE_DATASET_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hybridprune {

// Fixed-length token sequences with integer labels, stored flat.
struct Dataset {
  std::string split;
  std::size_t seq_len = 0;
  std::size_t vocab_size = 0;
  std::size_t num_classes = 0;
  std::vector<int> tokens;  // size() * seq_len ids
  std::vector<int> labels;

  std::size_t size() const noexcept { return labels.size(); }
  bool empty() const noexcept { return labels.empty(); }
  std::span<const int> sequence(std::size_t i) const {
    return std::span<const int>(tokens).subspan(i * seq_len, seq_len);
  }
  void push_back(std::span<const int> sequence, int label);
  std::vector<std::size_t> label_counts() const;

  // Checks ids < vocab_size, labels < num_classes and consistent sizes.
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

Dataset subset(const Dataset& data, std::span<const std::size_t> indices);

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_DATASET_HPP
