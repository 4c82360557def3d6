// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridprune/documents.hpp"

#include "hybridprune/error.hpp"
#include "json_util.hpp"

namespace hybridprune {

using detail::json;
using detail::ObjectReader;

namespace {

json parse_document(std::string_view doc, std::string_view what) {
  try {
    return json::parse(doc);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Parse, std::string(what) + ": " + e.what());
  }
}

void check_format(ObjectReader& r, std::string_view expected) {
  const auto format = r.required<std::string>("format");
  if (format != expected) {
    fail(ErrorKind::Parse, r.context() + ": format '" + format + "', expected '" + std::string(expected) + "'");
  }
}

const SeedReport& pick_seed(const Report& report, std::optional<std::uint64_t> seed) {
  if (report.seeds.empty()) fail(ErrorKind::InvalidArgument, "report has no seeds");
  if (!seed) return report.seeds.front();
  for (const SeedReport& s : report.seeds) {
    if (s.seed == *seed) return s;
  }
  fail(ErrorKind::InvalidArgument, "report has no seed " + std::to_string(*seed));
}

}  // namespace

std::string strategy_to_document(const HybridStrategy& strategy, std::size_t num_layers) {
  strategy.validate(num_layers);
  json parts = json::array();
  for (std::size_t i = 0; i < strategy.partitions.size(); ++i) {
    const Partition& p = strategy.partitions[i];
    const Criterion& c = strategy.assignment[i];
    json entry{{"index", p.index}, {"lo", p.lo}, {"hi", p.hi}, {"criterion", c.tag()}};
    if (c.threshold) entry["threshold"] = *c.threshold;
    parts.push_back(std::move(entry));
  }
  return detail::dump(json{{"format", kStrategyFormat}, {"num_layers", num_layers}, {"partitions", parts}});
}

HybridStrategy strategy_from_document(std::string_view doc) {
  const json j = parse_document(doc, "strategy document");
  ObjectReader r(j, "strategy");
  check_format(r, kStrategyFormat);
  const auto num_layers = r.required<std::size_t>("num_layers");
  const json& parts = r.raw("partitions");
  r.finish();
  if (!parts.is_array()) fail(ErrorKind::Parse, "strategy.partitions: expected an array");
  HybridStrategy s;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    ObjectReader pr(parts[i], "strategy.partitions[" + std::to_string(i) + "]");
    Partition p;
    p.index = pr.required<std::size_t>("index");
    p.lo = pr.required<std::size_t>("lo");
    p.hi = pr.required<std::size_t>("hi");
    Criterion c = Criterion::of(parse_criterion_kind(pr.required<std::string>("criterion")));
    if (pr.has("threshold")) {
      if (c.kind != CriterionKind::Threshold) fail(ErrorKind::Parse, pr.context() + ": threshold on a non-threshold criterion");
      c.threshold = pr.required<double>("threshold");
    } else {
      pr.optional<json>("threshold", json());
    }
    pr.finish();
    s.partitions.push_back(p);
    s.assignment.push_back(c);
  }
  try {
    s.validate(num_layers);
  } catch (const Error& e) {
    fail(ErrorKind::Parse, std::string("strategy: ") + e.what());
  }
  return s;
}

std::string export_strategy(const Report& report, std::optional<std::uint64_t> seed) {
  const SeedReport& s = pick_seed(report, seed);
  if (!s.strategy) {
    fail(ErrorKind::InvalidArgument, "seed " + std::to_string(s.seed) + " of a " + report.config.mode.to_string() +
                                         " run has no strategy to export");
  }
  return strategy_to_document(*s.strategy, report.config.supernet.num_layers);
}

ExperimentConfig import_strategy(std::string_view doc, const ExperimentConfig& config) {
  HybridStrategy s = strategy_from_document(doc);
  const std::size_t doc_layers = s.partitions.empty() ? 0 : s.partitions.back().hi;
  if (doc_layers != config.supernet.num_layers) {
    fail(ErrorKind::InvalidConfig, "strategy covers " + std::to_string(doc_layers) + " layers, config has " +
                                       std::to_string(config.supernet.num_layers));
  }
  ExperimentConfig out = config;
  out.mode = ModeSpec{ExperimentMode::Hybrid, std::nullopt};
  out.imported_strategy = std::move(s);
  out.imported_architecture.reset();
  out.validate();
  return out;
}

std::string architecture_to_document(const ArchitectureDocument& arch) {
  if (arch.mask.num_layers() != arch.supernet.num_layers) {
    fail(ErrorKind::InvalidArgument, "architecture mask has " + std::to_string(arch.mask.num_layers()) +
                                         " layers, supernet has " + std::to_string(arch.supernet.num_layers));
  }
  json modules = json::array();
  for (std::size_t i = 0; i < arch.mask.size(); ++i) {
    const PeftModuleId id = PeftModuleId::from_flat(i);
    modules.push_back(json{{"layer", id.layer}, {"kind", to_string(id.kind)}, {"active", arch.mask.active(id)}});
  }
  return detail::dump(json{{"format", kArchitectureFormat},
                           {"supernet", detail::supernet_to_json(arch.supernet)},
                           {"modules", modules}});
}

ArchitectureDocument architecture_from_document(std::string_view doc) {
  const json j = parse_document(doc, "architecture document");
  ObjectReader r(j, "architecture");
  check_format(r, kArchitectureFormat);
  ArchitectureDocument arch;
  arch.supernet = detail::supernet_from_json(r.raw("supernet"), "architecture.supernet", true);
  const json& modules = r.raw("modules");
  r.finish();
  try {
    arch.supernet.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Parse, std::string("architecture.supernet: ") + e.what());
  }
  if (!modules.is_array() || modules.size() != 2 * arch.supernet.num_layers) {
    fail(ErrorKind::Parse, "architecture.modules: expected " + std::to_string(2 * arch.supernet.num_layers) +
                               " entries");
  }
  std::vector<bool> flags(modules.size());
  for (std::size_t i = 0; i < modules.size(); ++i) {
    ObjectReader mr(modules[i], "architecture.modules[" + std::to_string(i) + "]");
    const PeftModuleId id{mr.required<std::size_t>("layer"), parse_module_kind(mr.required<std::string>("kind"))};
    if (id.flat_index() != i) fail(ErrorKind::Parse, mr.context() + ": modules must be listed in (layer, kind) order");
    flags[i] = mr.required<bool>("active");
    mr.finish();
  }
  arch.mask = MaskState::from_flags(std::move(flags));
  return arch;
}

std::string export_architecture(const Report& report, std::optional<std::uint64_t> seed) {
  const SeedReport& s = pick_seed(report, seed);
  return architecture_to_document({report.config.supernet, s.final_mask});
}

ExperimentConfig import_architecture(std::string_view doc, const ExperimentConfig& config) {
  ArchitectureDocument arch = architecture_from_document(doc);
  if (arch.supernet.num_layers != config.supernet.num_layers) {
    fail(ErrorKind::InvalidConfig, "architecture has " + std::to_string(arch.supernet.num_layers) +
                                       " layers, config has " + std::to_string(config.supernet.num_layers));
  }
  ExperimentConfig out = config;
  SupernetConfig shape = arch.supernet;
  shape.vocab_size = config.supernet.vocab_size;
  shape.num_classes = config.supernet.num_classes;
  shape.max_seq_len = config.supernet.max_seq_len;
  out.supernet = shape;
  out.imported_architecture = std::move(arch.mask);
  out.imported_strategy.reset();
  out.validate();
  return out;
}

}  // namespace hybridprune
