// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HYBRIDPRUNE_REPORTS_HPP
#define HYBRIDPRUNE_REPORTS_HPP

#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "hybridprune/experiment.hpp"

namespace hybridprune {

// (layer, kind, criterion tag) -> number of times that module was pruned.
using FrequencyTable = std::map<std::tuple<std::size_t, ModuleKind, std::string>, std::size_t>;

FrequencyTable frequency_table(const SeedReport& seed);
FrequencyTable frequency_table(const Report& report);

// Search epochs (warm-up plus pruning) over retrain epochs; 0 when nothing
// was retrained.
double epoch_ratio(const SearchLog& log);

std::string report_to_json(const Report& report);
Report report_from_json(std::string_view text);

std::string frequency_csv(const FrequencyTable& table);
std::string metrics_csv(const Report& report);
std::string summary_json(const Report& report);
std::string rounds_json(const Report& report);
std::string tendency_csv(const Report& report);

// Writes report.json, summary.json, frequency.csv, metrics.csv, rounds.json,
// tendency.csv and per-seed strategy and architecture documents under `dir`.
// Returns the written paths in write order.
std::vector<std::string> emit_reports(const Report& report, const std::string& dir);

}  // namespace hybridprune

#endif  // HYBRIDPRUNE_REPORTS_HPP
