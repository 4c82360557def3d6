// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridprune/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hybridprune/error.hpp"

namespace hybridprune {

std::string_view to_string(CriterionKind kind) noexcept {
  switch (kind) {
    case CriterionKind::Weight: return "weight";
    case CriterionKind::Zeros: return "zeros";
    case CriterionKind::Threshold: return "threshold";
    case CriterionKind::Activation: return "activation";
    case CriterionKind::Sensitivity: return "sensitivity";
    case CriterionKind::Gradient: return "gradient";
  }
  return "unknown";
}

CriterionKind parse_criterion_kind(std::string_view text) {
  for (CriterionKind k : kAllCriteria) {
    if (to_string(k) == text) return k;
  }
  fail(ErrorKind::Parse, "unknown criterion tag '" + std::string(text) + "'");
}

Criterion Criterion::fixed_threshold(double t) {
  if (!(t > 0.0)) fail(ErrorKind::InvalidArgument, "threshold t must be positive");
  return Criterion{CriterionKind::Threshold, t};
}

void ModuleStats::observe_gradients(std::span<const double> w, std::span<const double> g) {
  if (w.size() != g.size()) {
    fail(ErrorKind::ShapeMismatch, "observe_gradients: " + std::to_string(w.size()) + " weights vs " +
                                       std::to_string(g.size()) + " gradients");
  }
  if (grad_abs_sum.empty()) {
    grad_abs_sum.assign(g.size(), 0.0);
    weight_grad_abs_sum.assign(g.size(), 0.0);
  } else if (grad_abs_sum.size() != g.size()) {
    fail(ErrorKind::ShapeMismatch, "observe_gradients: accumulator size changed");
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    grad_abs_sum[i] += std::abs(g[i]);
    weight_grad_abs_sum[i] += std::abs(w[i] * g[i]);
  }
  ++num_batches;
}

void ModuleStats::observe_output(const Matrix& output) {
  activation_abs_sum += output.cwiseAbs().sum();
  activation_count += static_cast<std::size_t>(output.size());
}

void ModuleStats::snapshot(std::span<const double> w) { weights.assign(w.begin(), w.end()); }

std::vector<double> flatten_weights(const PeftModule& module) {
  std::vector<double> out(module.down.values().data(), module.down.values().data() + module.down.size());
  out.insert(out.end(), module.up.values().data(), module.up.values().data() + module.up.size());
  return out;
}

std::vector<double> flatten_grads(const PeftModule& module) {
  std::vector<double> out(module.down.grad().data(), module.down.grad().data() + module.down.size());
  out.insert(out.end(), module.up.grad().data(), module.up.grad().data() + module.up.size());
  return out;
}

namespace {

double mean_over(std::span<const double> values, auto&& f) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += f(v);
  return s / static_cast<double>(values.size());
}

void require_batches(const ModuleStats& stats) {
  if (stats.num_batches == 0) fail(ErrorKind::InvalidArgument, "raw_score: stats observed no batches");
}

}  // namespace

double raw_score(const Criterion& criterion, const ModuleStats& stats) {
  const std::span<const double> w = stats.weights;
  switch (criterion.kind) {
    case CriterionKind::Weight:
      return mean_over(w, [](double x) { return x * x; });
    case CriterionKind::Zeros:
      return mean_over(w, [](double x) { return x != 0.0 ? 1.0 : 0.0; });
    case CriterionKind::Threshold: {
      if (!criterion.threshold || !(*criterion.threshold > 0.0)) {
        fail(ErrorKind::InvalidArgument, "raw_score: threshold criterion needs a positive t");
      }
      const double t = *criterion.threshold;
      return mean_over(w, [t](double x) { return std::abs(x) < t ? 1.0 : 0.0; });
    }
    case CriterionKind::Activation:
      require_batches(stats);
      return stats.activation_count == 0
                 ? 0.0
                 : stats.activation_abs_sum / static_cast<double>(stats.activation_count);
    case CriterionKind::Sensitivity:
      require_batches(stats);
      return mean_over(stats.weight_grad_abs_sum, [](double x) { return x; }) /
             static_cast<double>(stats.num_batches);
    case CriterionKind::Gradient:
      require_batches(stats);
      return mean_over(stats.grad_abs_sum, [](double x) { return x; }) /
             static_cast<double>(stats.num_batches);
  }
  return 0.0;
}

double unimportance(CriterionKind kind, double theta) noexcept {
  return kind == CriterionKind::Threshold ? theta : -theta;
}

Criterion resolve_threshold(const Criterion& criterion, std::span<const ModuleStats* const> group) {
  if (criterion.kind != CriterionKind::Threshold || criterion.threshold) return criterion;
  std::vector<double> mags;
  for (const ModuleStats* s : group) {
    for (double w : s->weights) mags.push_back(std::abs(w));
  }
  double median = 0.0;
  if (!mags.empty()) {
    const auto mid = mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2);
    std::nth_element(mags.begin(), mid, mags.end());
    median = *mid;
    if (mags.size() % 2 == 0) {
      median = 0.5 * (median + *std::max_element(mags.begin(), mid));
    }
  }
  return Criterion{CriterionKind::Threshold, std::max(0.01 * median, 1e-12)};
}

ScoreVector rank_modules(ScoreVector group) {
  if (group.empty()) fail(ErrorKind::InvalidArgument, "rank_modules: empty group");
  std::vector<std::size_t> order(group.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (group[a].unimportance != group[b].unimportance) return group[a].unimportance < group[b].unimportance;
    return group[a].id < group[b].id;
  });
  for (std::size_t r = 0; r < order.size(); ++r) group[order[r]].rank = r + 1;
  return group;
}

ScoreVector score_group(const Criterion& criterion, std::span<const PeftModuleId> ids, const StatsMap& stats) {
  std::vector<const ModuleStats*> members;
  members.reserve(ids.size());
  for (const PeftModuleId& id : ids) {
    auto it = stats.find(id);
    if (it == stats.end()) fail(ErrorKind::InvalidArgument, "score_group: no stats for module " + to_string(id));
    members.push_back(&it->second);
  }
  const Criterion resolved = resolve_threshold(criterion, members);
  ScoreVector group;
  group.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const double theta = raw_score(resolved, *members[i]);
    group.push_back(ModuleScore{ids[i], theta, unimportance(criterion.kind, theta), 0});
  }
  return rank_modules(std::move(group));
}

}  // namespace hybridprune
