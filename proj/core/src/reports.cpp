// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridprune/reports.hpp"

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "hybridprune/documents.hpp"
#include "hybridprune/error.hpp"
#include "json_util.hpp"

namespace hybridprune {

using detail::json;
using detail::ObjectReader;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

json id_to_json(const PeftModuleId& id) { return json{{"layer", id.layer}, {"kind", to_string(id.kind)}}; }

PeftModuleId id_from(ObjectReader& r) {
  return PeftModuleId{r.required<std::size_t>("layer"), parse_module_kind(r.required<std::string>("kind"))};
}

json record_to_json(const PruneRecord& rec) {
  json pruned = json::array();
  for (std::size_t i = 0; i < rec.pruned.size(); ++i) {
    json e = id_to_json(rec.pruned[i]);
    e["criterion"] = rec.pruned_by.at(i);
    pruned.push_back(std::move(e));
  }
  json probs = json::array();
  for (std::size_t i = 0; i < rec.probabilities.size(); ++i) {
    json e = id_to_json(rec.probabilities.ids[i]);
    e["p"] = rec.probabilities.p[i];
    probs.push_back(std::move(e));
  }
  return json{{"round", rec.round},
              {"pruned", pruned},
              {"probabilities", probs},
              {"param_count_after", rec.param_count_after},
              {"terminal", rec.terminal}};
}

PruneRecord record_from_json(const json& j, const std::string& ctx) {
  ObjectReader r(j, ctx);
  PruneRecord rec;
  rec.round = r.required<std::size_t>("round");
  const json& pruned = r.raw("pruned");
  for (std::size_t i = 0; i < pruned.size(); ++i) {
    ObjectReader e(pruned[i], ctx + ".pruned[" + std::to_string(i) + "]");
    rec.pruned.push_back(id_from(e));
    rec.pruned_by.push_back(e.required<std::string>("criterion"));
    e.finish();
  }
  const json& probs = r.raw("probabilities");
  for (std::size_t i = 0; i < probs.size(); ++i) {
    ObjectReader e(probs[i], ctx + ".probabilities[" + std::to_string(i) + "]");
    rec.probabilities.ids.push_back(id_from(e));
    rec.probabilities.p.push_back(e.required<double>("p"));
    e.finish();
  }
  rec.param_count_after = r.required<std::size_t>("param_count_after");
  rec.terminal = r.required<bool>("terminal");
  r.finish();
  return rec;
}

json tendency_to_json(const TendencyTable& t) {
  json cells = json::array();
  for (CriterionKind c : kAllCriteria) {
    for (std::size_t p = 0; p < t.num_partitions(); ++p) {
      for (ModuleKind k : {ModuleKind::SA, ModuleKind::PA}) {
        const std::size_t n = t.count(c, p, k);
        if (n == 0) continue;
        cells.push_back(json{{"criterion", to_string(c)}, {"partition", p + 1}, {"kind", to_string(k)}, {"count", n}});
      }
    }
  }
  return json{{"num_partitions", t.num_partitions()}, {"cells", cells}};
}

TendencyTable tendency_from_json(const json& j, const std::string& ctx) {
  ObjectReader r(j, ctx);
  TendencyTable t(r.required<std::size_t>("num_partitions"));
  const json& cells = r.raw("cells");
  r.finish();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    ObjectReader c(cells[i], ctx + ".cells[" + std::to_string(i) + "]");
    const CriterionKind kind = parse_criterion_kind(c.required<std::string>("criterion"));
    const auto partition = c.required<std::size_t>("partition");
    if (partition == 0) fail(ErrorKind::Parse, c.context() + ": partitions are 1-based");
    t.add(kind, partition - 1, parse_module_kind(c.required<std::string>("kind")), c.required<std::size_t>("count"));
    c.finish();
  }
  return t;
}

json schedule_to_json(const PruneSchedule& s) {
  json j{{"budget", s.budget},
         {"rounds", s.rounds},
         {"k", s.k},
         {"epochs_per_round", s.epochs_per_round},
         {"fidelity", to_string(s.fidelity)}};
  if (s.warning) j["warning"] = *s.warning;
  return j;
}

PruneSchedule schedule_from_json(const json& j, const std::string& ctx) {
  ObjectReader r(j, ctx);
  PruneSchedule s;
  s.budget = r.required<std::size_t>("budget");
  s.rounds = r.required<std::size_t>("rounds");
  s.k = r.required<std::size_t>("k");
  s.epochs_per_round = r.required<double>("epochs_per_round");
  s.fidelity = parse_fidelity(r.required<std::string>("fidelity"));
  if (r.has("warning")) s.warning = r.required<std::string>("warning");
  else r.optional<json>("warning", json());
  r.finish();
  return s;
}

json flags_to_json(const MaskState& m) {
  json flags = json::array();
  for (bool f : m.flags()) flags.push_back(f ? 1 : 0);
  return flags;
}

MaskState flags_from_json(const json& j, const std::string& ctx) {
  if (!j.is_array()) fail(ErrorKind::Parse, ctx + ": expected an array of 0/1 flags");
  std::vector<bool> flags;
  for (const json& f : j) {
    if (!f.is_number_integer() || (f.get<long long>() != 0 && f.get<long long>() != 1)) {
      fail(ErrorKind::Parse, ctx + ": flags must be 0 or 1");
    }
    flags.push_back(f.get<long long>() == 1);
  }
  return MaskState::from_flags(std::move(flags));
}

json seed_to_json(const SeedReport& s, std::size_t num_layers) {
  json j{{"seed", s.seed},
         {"records", json::array()},
         {"log",
          {{"warmup_epochs", s.log.warmup_epochs},
           {"pruning_epochs", s.log.pruning_epochs},
           {"retrain_epochs", s.log.retrain_epochs}}},
         {"final_mask", flags_to_json(s.final_mask)},
         {"final_param_count", s.final_param_count},
         {"initial_param_count", s.initial_param_count},
         {"bound_epochs", s.bound_epochs},
         {"metrics", {{"loss_curve", s.metrics.loss_curve}, {"accuracy", s.metrics.accuracy}}}};
  if (s.strategy) j["strategy"] = json::parse(strategy_to_document(*s.strategy, num_layers));
  if (s.tendencies) j["tendencies"] = tendency_to_json(*s.tendencies);
  if (s.schedule) j["schedule"] = schedule_to_json(*s.schedule);
  for (const PruneRecord& rec : s.records) j["records"].push_back(record_to_json(rec));
  return j;
}

SeedReport seed_from_json(const json& j, const std::string& ctx) {
  ObjectReader r(j, ctx);
  SeedReport s;
  s.seed = r.required<std::uint64_t>("seed");
  if (r.has("strategy")) s.strategy = strategy_from_document(r.raw("strategy").dump());
  else r.optional<json>("strategy", json());
  if (r.has("tendencies")) s.tendencies = tendency_from_json(r.raw("tendencies"), ctx + ".tendencies");
  else r.optional<json>("tendencies", json());
  if (r.has("schedule")) s.schedule = schedule_from_json(r.raw("schedule"), ctx + ".schedule");
  else r.optional<json>("schedule", json());
  const json& records = r.raw("records");
  for (std::size_t i = 0; i < records.size(); ++i) {
    s.records.push_back(record_from_json(records[i], ctx + ".records[" + std::to_string(i) + "]"));
  }
  ObjectReader log(r.raw("log"), ctx + ".log");
  s.log.warmup_epochs = log.required<double>("warmup_epochs");
  s.log.pruning_epochs = log.required<double>("pruning_epochs");
  s.log.retrain_epochs = log.required<double>("retrain_epochs");
  log.finish();
  s.final_mask = flags_from_json(r.raw("final_mask"), ctx + ".final_mask");
  s.final_param_count = r.required<std::size_t>("final_param_count");
  s.initial_param_count = r.required<std::size_t>("initial_param_count");
  s.bound_epochs = r.required<double>("bound_epochs");
  ObjectReader m(r.raw("metrics"), ctx + ".metrics");
  s.metrics.loss_curve = m.required<std::vector<double>>("loss_curve");
  s.metrics.accuracy = m.required<double>("accuracy");
  m.finish();
  r.finish();
  return s;
}

std::string seed_dir(const std::string& dir, std::uint64_t seed) {
  return (std::filesystem::path(dir) / ("seed_" + std::to_string(seed))).string();
}

}  // namespace

FrequencyTable frequency_table(const SeedReport& seed) {
  FrequencyTable t;
  for (const PruneRecord& rec : seed.records) {
    for (std::size_t i = 0; i < rec.pruned.size(); ++i) {
      ++t[{rec.pruned[i].layer, rec.pruned[i].kind, rec.pruned_by.at(i)}];
    }
  }
  return t;
}

FrequencyTable frequency_table(const Report& report) {
  FrequencyTable t;
  for (const SeedReport& s : report.seeds) {
    for (const auto& [key, n] : frequency_table(s)) t[key] += n;
  }
  return t;
}

double epoch_ratio(const SearchLog& log) {
  return log.retrain_epochs > 0.0 ? log.search_epochs() / log.retrain_epochs : 0.0;
}

std::string report_to_json(const Report& report) {
  json j{{"format", "hybridprune.report/1"}, {"config", json::parse(config_to_json(report.config))}, {"seeds", json::array()}};
  const std::size_t layers = report.config.supernet.num_layers;
  if (report.config.imported_strategy) {
    j["imported_strategy"] = json::parse(strategy_to_document(*report.config.imported_strategy, layers));
  }
  if (report.config.imported_architecture) {
    j["imported_architecture"] = flags_to_json(*report.config.imported_architecture);
  }
  for (const SeedReport& s : report.seeds) j["seeds"].push_back(seed_to_json(s, layers));
  return detail::dump(j);
}

Report report_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Parse, std::string("report: ") + e.what());
  }
  ObjectReader r(j, "report");
  if (r.required<std::string>("format") != "hybridprune.report/1") fail(ErrorKind::Parse, "report: unknown format");
  Report report;
  report.config = parse_config(r.raw("config").dump());
  if (r.has("imported_strategy")) {
    report.config.imported_strategy = strategy_from_document(r.raw("imported_strategy").dump());
  } else {
    r.optional<json>("imported_strategy", json());
  }
  if (r.has("imported_architecture")) {
    report.config.imported_architecture = flags_from_json(r.raw("imported_architecture"), "report.imported_architecture");
  } else {
    r.optional<json>("imported_architecture", json());
  }
  const json& seeds = r.raw("seeds");
  if (!seeds.is_array()) fail(ErrorKind::Parse, "report.seeds: expected an array");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    report.seeds.push_back(seed_from_json(seeds[i], "report.seeds[" + std::to_string(i) + "]"));
  }
  r.finish();
  return report;
}

std::string frequency_csv(const FrequencyTable& table) {
  std::ostringstream out;
  out << "layer,kind,criterion,count\n";
  for (const auto& [key, n] : table) {
    const auto& [layer, kind, criterion] = key;
    out << layer << ',' << to_string(kind) << ',' << criterion << ',' << n << '\n';
  }
  return out.str();
}

std::string metrics_csv(const Report& report) {
  std::ostringstream out;
  out << "seed,mode,accuracy,final_loss,initial_param_count,final_param_count,budget,rounds,"
         "warmup_epochs,pruning_epochs,search_epochs,retrain_epochs,ratio\n";
  for (const SeedReport& s : report.seeds) {
    const double final_loss = s.metrics.loss_curve.empty() ? 0.0 : s.metrics.loss_curve.back();
    out << s.seed << ',' << report.config.mode.to_string() << ',' << fmt(s.metrics.accuracy) << ','
        << fmt(final_loss) << ',' << s.initial_param_count << ',' << s.final_param_count << ','
        << (s.schedule ? std::to_string(s.schedule->budget) : std::string()) << ',' << s.records.size() << ','
        << fmt(s.log.warmup_epochs) << ',' << fmt(s.log.pruning_epochs) << ',' << fmt(s.log.search_epochs()) << ','
        << fmt(s.log.retrain_epochs) << ',' << fmt(epoch_ratio(s.log)) << '\n';
  }
  return out.str();
}

std::string summary_json(const Report& report) {
  json seeds = json::array();
  double acc = 0.0;
  double ratio = 0.0;
  for (const SeedReport& s : report.seeds) {
    acc += s.metrics.accuracy;
    ratio += epoch_ratio(s.log);
    json e{{"seed", s.seed},
           {"accuracy", s.metrics.accuracy},
           {"warmup_epochs", s.log.warmup_epochs},
           {"pruning_epochs", s.log.pruning_epochs},
           {"search_epochs", s.log.search_epochs()},
           {"retrain_epochs", s.log.retrain_epochs},
           {"ratio", epoch_ratio(s.log)},
           {"final_param_count", s.final_param_count},
           {"rounds", s.records.size()}};
    if (s.schedule) {
      e["budget"] = s.schedule->budget;
      e["bound_epochs"] = s.bound_epochs;
      e["pruning_within_bound"] = s.log.pruning_epochs <= s.bound_epochs + 1e-9;
    }
    seeds.push_back(std::move(e));
  }
  const double n = report.seeds.empty() ? 1.0 : static_cast<double>(report.seeds.size());
  return detail::dump(json{{"mode", report.config.mode.to_string()},
                           {"task", report.config.task.name},
                           {"fidelity", to_string(report.config.schedule.fidelity)},
                           {"mean_accuracy", acc / n},
                           {"mean_ratio", ratio / n},
                           {"seeds", seeds}});
}

std::string rounds_json(const Report& report) {
  json seeds = json::array();
  for (const SeedReport& s : report.seeds) {
    json recs = json::array();
    for (const PruneRecord& rec : s.records) recs.push_back(record_to_json(rec));
    seeds.push_back(json{{"seed", s.seed}, {"records", recs}});
  }
  return detail::dump(json{{"seeds", seeds}});
}

std::string tendency_csv(const Report& report) {
  std::ostringstream out;
  out << "seed,criterion,partition,kind,count\n";
  for (const SeedReport& s : report.seeds) {
    if (!s.tendencies) continue;
    for (CriterionKind c : kAllCriteria) {
      for (std::size_t p = 0; p < s.tendencies->num_partitions(); ++p) {
        for (ModuleKind k : {ModuleKind::SA, ModuleKind::PA}) {
          out << s.seed << ',' << to_string(c) << ',' << p + 1 << ',' << to_string(k) << ','
              << s.tendencies->count(c, p, k) << '\n';
        }
      }
    }
  }
  return out.str();
}

std::vector<std::string> emit_reports(const Report& report, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create report directory '" + dir + "': " + ec.message());
  std::vector<std::string> written;
  auto write = [&](const std::string& path, const std::string& text) {
    write_text_file(path, text);
    written.push_back(path);
  };
  const std::filesystem::path root(dir);
  write((root / "report.json").string(), report_to_json(report));
  write((root / "summary.json").string(), summary_json(report));
  write((root / "frequency.csv").string(), frequency_csv(frequency_table(report)));
  write((root / "metrics.csv").string(), metrics_csv(report));
  write((root / "rounds.json").string(), rounds_json(report));
  write((root / "tendency.csv").string(), tendency_csv(report));
  for (const SeedReport& s : report.seeds) {
    const std::filesystem::path sd(seed_dir(dir, s.seed));
    write((sd / "frequency.csv").string(), frequency_csv(frequency_table(s)));
    if (s.strategy) write((sd / "strategy.json").string(), export_strategy(report, s.seed));
    write((sd / "architecture.json").string(), export_architecture(report, s.seed));
  }
  return written;
}

}  // namespace hybridprune
