// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_CRITERIA_HPP
#define HYBRIDPRUNE_CRITERIA_HPP

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hybridprune/supernet.hpp"
#include "hybridprune/tape.hpp"

namespace hybridprune {

// Declaration order is the fixed tie-break order used when choosing criteria.
enum class CriterionKind : std::uint8_t { Weight, Zeros, Threshold, Activation, Sensitivity, Gradient };

inline constexpr std::array<CriterionKind, 6> kAllCriteria{
    CriterionKind::Weight,     CriterionKind::Zeros,       CriterionKind::Threshold,
    CriterionKind::Activation, CriterionKind::Sensitivity, CriterionKind::Gradient};

std::string_view to_string(CriterionKind kind) noexcept;
CriterionKind parse_criterion_kind(std::string_view text);

struct Criterion {
  CriterionKind kind = CriterionKind::Weight;
  // Threshold only. Empty means "0.01 x median |w| of the scored group",
  // recomputed every time the group is scored.
  std::optional<double> threshold;

  static Criterion of(CriterionKind kind) { return Criterion{kind, std::nullopt}; }
  static Criterion fixed_threshold(double t);

  std::string tag() const { return std::string(to_string(kind)); }
  bool operator==(const Criterion&) const = default;
};

// Accumulated statistics of one module over a collection window.
struct ModuleStats {
  std::vector<double> weights;              // snapshot: W_down then W_up, row-major
  std::vector<double> grad_abs_sum;         // sum over steps of |dL/dw|
  std::vector<double> weight_grad_abs_sum;  // sum over steps of |w * dL/dw|
  double activation_abs_sum = 0.0;          // sum of |module output| entries
  std::size_t activation_count = 0;
  std::size_t num_batches = 0;

  // One optimizer step: weights as they were when the gradient was taken.
  void observe_gradients(std::span<const double> w, std::span<const double> g);
  void observe_output(const Matrix& output);
  void snapshot(std::span<const double> w);
};

using StatsMap = std::map<PeftModuleId, ModuleStats>;

// Flattened W_down followed by W_up.
std::vector<double> flatten_weights(const PeftModule& module);
std::vector<double> flatten_grads(const PeftModule& module);

// Table formulas. Threshold requires a resolved threshold.
double raw_score(const Criterion& criterion, const ModuleStats& stats);

// Larger means more prunable.
double unimportance(CriterionKind kind, double theta) noexcept;

// Fills in the relative default threshold from the weights of `group`.
Criterion resolve_threshold(const Criterion& criterion, std::span<const ModuleStats* const> group);

struct ModuleScore {
  PeftModuleId id;
  double theta = 0.0;
  double unimportance = 0.0;
  std::size_t rank = 0;  // 1 = least prunable
};

using ScoreVector = std::vector<ModuleScore>;

// Assigns 1-based ranks ascending by unimportance; equal scores rank in
// (layer, kind) order. Output keeps the input order.
ScoreVector rank_modules(ScoreVector group);

// Scores every module in `ids` under one criterion (threshold resolved over
// exactly this group) and ranks them.
ScoreVector score_group(const Criterion& criterion, std::span<const PeftModuleId> ids, const StatsMap& stats);

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_CRITERIA_HPP
