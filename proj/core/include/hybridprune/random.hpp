// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_RANDOM_HPP
#define HYBRIDPRUNE_RANDOM_HPP

#include <cstdint>
#include <random>

namespace hybridprune {

// Named sub-streams so that one phase consuming more draws never shifts the
// draws seen by another phase of the same run.
enum class Stream : std::uint32_t {
  Backbone = 1,
  Adapters,
  Head,
  Trim,
  Warmup,
  Search,
  Retrain,
  Task,
};

inline std::mt19937_64 make_rng(std::uint64_t seed, Stream stream, std::uint32_t salt = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), salt};
  return std::mt19937_64(seq);
}

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_RANDOM_HPP
