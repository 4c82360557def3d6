// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_DOCUMENTS_HPP
#define HYBRIDPRUNE_DOCUMENTS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "hybridprune/config.hpp"
#include "hybridprune/experiment.hpp"
#include "hybridprune/hybrid.hpp"
#include "hybridprune/supernet.hpp"

namespace hybridprune {

inline constexpr std::string_view kStrategyFormat = "hybridprune.strategy/1";
inline constexpr std::string_view kArchitectureFormat = "hybridprune.architecture/1";

std::string strategy_to_document(const HybridStrategy& strategy, std::size_t num_layers);
HybridStrategy strategy_from_document(std::string_view doc);

// Strategy of the given seed, or of the first seed when none is named.
std::string export_strategy(const Report& report, std::optional<std::uint64_t> seed = std::nullopt);
// Returns a copy of `config` that skips warm-up and searches with the
// document's strategy. Rejects documents for a different layer count.
ExperimentConfig import_strategy(std::string_view doc, const ExperimentConfig& config);

struct ArchitectureDocument {
  SupernetConfig supernet;
  MaskState mask;

  bool operator==(const ArchitectureDocument&) const = default;
};

std::string architecture_to_document(const ArchitectureDocument& arch);
ArchitectureDocument architecture_from_document(std::string_view doc);

std::string export_architecture(const Report& report, std::optional<std::uint64_t> seed = std::nullopt);
// Returns a copy of `config` that retrains the document's mask and skips the
// search. Adapter and encoder shapes come from the document; task dimensions
// stay with the config. Rejects a layer-count mismatch.
ExperimentConfig import_architecture(std::string_view doc, const ExperimentConfig& config);

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_DOCUMENTS_HPP
