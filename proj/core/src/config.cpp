// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include "hybridprune/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace hybridprune {

namespace detail {

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Gelu: return "gelu";
  }
  return "unknown";
}

Activation parse_activation(std::string_view text) {
  for (Activation a : {Activation::Identity, Activation::Relu, Activation::Gelu}) {
    if (activation_name(a) == text) return a;
  }
  fail(ErrorKind::Parse, "unknown activation '" + std::string(text) + "'");
}

json supernet_to_json(const SupernetConfig& c) {
  return json{{"num_layers", c.num_layers},
              {"d_model", c.d_model},
              {"num_heads", c.num_heads},
              {"d_ff", c.d_ff},
              {"sa_bottleneck", c.sa_bottleneck},
              {"pa_rank", c.pa_rank},
              {"vocab_size", c.vocab_size},
              {"num_classes", c.num_classes},
              {"max_seq_len", c.max_seq_len},
              {"sa_activation", activation_name(c.sa_activation)},
              {"pa_activation", activation_name(c.pa_activation)},
              {"pa_linear", c.pa_linear},
              {"n_pa_choices", c.n_pa_choices},
              {"n_sa_choices", c.n_sa_choices}};
}

SupernetConfig supernet_from_json(const json& j, const std::string& context, bool with_task_dims) {
  ObjectReader r(j, context);
  SupernetConfig c;
  c.num_layers = r.optional<std::size_t>("num_layers", c.num_layers);
  c.d_model = r.optional<std::size_t>("d_model", c.d_model);
  c.num_heads = r.optional<std::size_t>("num_heads", c.num_heads);
  c.d_ff = r.optional<std::size_t>("d_ff", c.d_ff);
  c.sa_bottleneck = r.optional<std::size_t>("sa_bottleneck", c.sa_bottleneck);
  c.pa_rank = r.optional<std::size_t>("pa_rank", c.pa_rank);
  if (with_task_dims) {
    c.vocab_size = r.required<std::size_t>("vocab_size");
    c.num_classes = r.required<std::size_t>("num_classes");
    c.max_seq_len = r.required<std::size_t>("max_seq_len");
  }
  c.sa_activation = parse_activation(r.optional<std::string>("sa_activation", "gelu"));
  c.pa_activation = parse_activation(r.optional<std::string>("pa_activation", "gelu"));
  c.pa_linear = r.optional<bool>("pa_linear", c.pa_linear);
  c.n_pa_choices = r.optional<std::size_t>("n_pa_choices", c.n_pa_choices);
  c.n_sa_choices = r.optional<std::size_t>("n_sa_choices", c.n_sa_choices);
  r.finish();
  return c;
}

json task_to_json(const SyntheticTaskSpec& t) {
  return json{{"name", t.name},
              {"generator", to_string(t.generator)},
              {"vocab_size", t.vocab_size},
              {"seq_len", t.seq_len},
              {"num_classes", t.num_classes},
              {"train_size", t.train_size},
              {"val_size", t.val_size},
              {"test_size", t.test_size},
              {"seed", t.seed}};
}

SyntheticTaskSpec task_from_json(const json& j, const std::string& context) {
  ObjectReader r(j, context);
  SyntheticTaskSpec t;
  t.generator = parse_generator_kind(r.optional<std::string>("generator", std::string(to_string(t.generator))));
  t.name = r.optional<std::string>("name", std::string(to_string(t.generator)));
  t.vocab_size = r.optional<std::size_t>("vocab_size", t.vocab_size);
  t.seq_len = r.optional<std::size_t>("seq_len", t.seq_len);
  t.num_classes = r.optional<std::size_t>("num_classes", t.num_classes);
  t.train_size = r.optional<std::size_t>("train_size", t.train_size);
  t.val_size = r.optional<std::size_t>("val_size", t.val_size);
  t.test_size = r.optional<std::size_t>("test_size", t.test_size);
  t.seed = r.optional<std::uint64_t>("seed", t.seed);
  r.finish();
  return t;
}

}  // namespace detail

using detail::json;
using detail::ObjectReader;

std::string ModeSpec::to_string() const {
  switch (mode) {
    case ExperimentMode::Hybrid: return "hybrid";
    case ExperimentMode::RandomPrune: return "random-prune";
    case ExperimentMode::Single: return "single:" + std::string(hybridprune::to_string(*single));
    case ExperimentMode::NoPartition: return "no-partition";
    case ExperimentMode::NoPrune: return "no-prune";
  }
  return "unknown";
}

ModeSpec ModeSpec::parse(std::string_view text) {
  if (text == "hybrid") return {ExperimentMode::Hybrid, std::nullopt};
  if (text == "random-prune") return {ExperimentMode::RandomPrune, std::nullopt};
  if (text == "no-partition") return {ExperimentMode::NoPartition, std::nullopt};
  if (text == "no-prune") return {ExperimentMode::NoPrune, std::nullopt};
  constexpr std::string_view prefix = "single:";
  if (text.substr(0, prefix.size()) == prefix) {
    return {ExperimentMode::Single, parse_criterion_kind(text.substr(prefix.size()))};
  }
  fail(ErrorKind::Parse, "unknown mode '" + std::string(text) +
                             "' (expected hybrid, random-prune, single:<criterion>, no-partition or no-prune)");
}

void ExperimentConfig::finalize() {
  supernet.vocab_size = task.vocab_size;
  supernet.num_classes = task.num_classes;
  supernet.max_seq_len = task.seq_len;
  validate();
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::InvalidConfig, what);
  };
  task.validate();
  supernet.validate();
  require(supernet.vocab_size == task.vocab_size && supernet.num_classes == task.num_classes &&
              supernet.max_seq_len == task.seq_len,
          "supernet dimensions do not match the task (call finalize)");
  require(schedule.budget_fraction > 0.0 && schedule.budget_fraction < 1.0, "schedule.budget_fraction must be in (0, 1)");
  require(!schedule.k || *schedule.k >= 1, "schedule.k must be at least 1");
  require(schedule.epochs_per_round > 0.0, "schedule.epochs_per_round must be positive");
  require(schedule.low_fidelity_fraction > 0.0 && schedule.low_fidelity_fraction <= 1.0,
          "schedule.low_fidelity_fraction must be in (0, 1]");
  require(warmup.rounds >= 1, "warmup.rounds must be at least 1");
  require(warmup.trim_fraction > 0.0 && warmup.trim_fraction <= 1.0, "warmup.trim_fraction must be in (0, 1]");
  require(warmup.num_partitions >= 1 && warmup.num_partitions <= supernet.num_layers,
          "warmup.num_partitions must be in [1, num_layers]");
  require(!warmup.candidates.empty(), "warmup.candidates must not be empty");
  require(batch_size >= 1, "batch_size must be at least 1");
  require(learning_rate > 0.0, "learning_rate must be positive");
  require(!seeds.empty(), "seeds must not be empty");
  require(mode.mode != ExperimentMode::Single || mode.single.has_value(), "single mode needs a criterion");
  if (imported_strategy) {
    require(mode.mode == ExperimentMode::Hybrid, "an imported strategy requires mode hybrid");
    imported_strategy->validate(supernet.num_layers);
  }
  if (imported_architecture) {
    require(imported_architecture->num_layers() == supernet.num_layers,
            "imported architecture has " + std::to_string(imported_architecture->num_layers()) +
                " layers, config has " + std::to_string(supernet.num_layers));
  }
}

ExperimentConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Parse, std::string("config: ") + e.what());
  }
  ObjectReader r(j, "config");
  ExperimentConfig c;
  if (r.has("task")) c.task = detail::task_from_json(r.raw("task"), "config.task");
  else r.optional<json>("task", json());
  if (r.has("supernet")) c.supernet = detail::supernet_from_json(r.raw("supernet"), "config.supernet", false);
  else r.optional<json>("supernet", json());

  if (r.has("schedule")) {
    ObjectReader s(r.raw("schedule"), "config.schedule");
    if (s.has("budget")) c.schedule.budget = s.required<std::size_t>("budget");
    else s.optional<json>("budget", json());
    c.schedule.budget_fraction = s.optional<double>("budget_fraction", c.schedule.budget_fraction);
    if (s.has("k")) c.schedule.k = s.required<std::size_t>("k");
    else s.optional<json>("k", json());
    c.schedule.epochs_per_round = s.optional<double>("epochs_per_round", c.schedule.epochs_per_round);
    c.schedule.fidelity = parse_fidelity(s.optional<std::string>("fidelity", "full"));
    c.schedule.low_fidelity_fraction = s.optional<double>("low_fidelity_fraction", c.schedule.low_fidelity_fraction);
    c.schedule.reinit_survivors = s.optional<bool>("reinit_survivors", c.schedule.reinit_survivors);
    s.finish();
  } else {
    r.optional<json>("schedule", json());
  }

  if (r.has("warmup")) {
    ObjectReader w(r.raw("warmup"), "config.warmup");
    c.warmup.rounds = w.optional<std::size_t>("rounds", c.warmup.rounds);
    c.warmup.trim_fraction = w.optional<double>("trim_fraction", c.warmup.trim_fraction);
    c.warmup.num_partitions = w.optional<std::size_t>("num_partitions", c.warmup.num_partitions);
    if (w.has("candidates")) {
      c.warmup.candidates.clear();
      for (const auto& tag : w.required<std::vector<std::string>>("candidates")) {
        c.warmup.candidates.push_back(parse_criterion_kind(tag));
      }
    } else {
      w.optional<json>("candidates", json());
    }
    w.finish();
  } else {
    r.optional<json>("warmup", json());
  }

  if (r.has("training")) {
    ObjectReader t(r.raw("training"), "config.training");
    c.batch_size = t.optional<std::size_t>("batch_size", c.batch_size);
    c.learning_rate = t.optional<double>("learning_rate", c.learning_rate);
    c.retrain_epochs = t.optional<std::size_t>("retrain_epochs", c.retrain_epochs);
    t.finish();
  } else {
    r.optional<json>("training", json());
  }

  c.mode = ModeSpec::parse(r.optional<std::string>("mode", "hybrid"));
  c.seeds = r.optional<std::vector<std::uint64_t>>("seeds", c.seeds);
  c.report_dir = r.optional<std::string>("report_dir", c.report_dir);
  r.finish();
  c.finalize();
  return c;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_text_file(path)); }

std::string config_to_json(const ExperimentConfig& c) {
  json supernet = detail::supernet_to_json(c.supernet);
  for (const char* derived : {"vocab_size", "num_classes", "max_seq_len"}) supernet.erase(derived);
  json schedule{{"budget_fraction", c.schedule.budget_fraction},
                {"epochs_per_round", c.schedule.epochs_per_round},
                {"fidelity", to_string(c.schedule.fidelity)},
                {"low_fidelity_fraction", c.schedule.low_fidelity_fraction},
                {"reinit_survivors", c.schedule.reinit_survivors}};
  if (c.schedule.budget) schedule["budget"] = *c.schedule.budget;
  if (c.schedule.k) schedule["k"] = *c.schedule.k;
  json candidates = json::array();
  for (CriterionKind k : c.warmup.candidates) candidates.push_back(to_string(k));
  json j{{"task", detail::task_to_json(c.task)},
         {"supernet", supernet},
         {"schedule", schedule},
         {"warmup",
          {{"rounds", c.warmup.rounds},
           {"trim_fraction", c.warmup.trim_fraction},
           {"num_partitions", c.warmup.num_partitions},
           {"candidates", candidates}}},
         {"training",
          {{"batch_size", c.batch_size}, {"learning_rate", c.learning_rate}, {"retrain_epochs", c.retrain_epochs}}},
         {"mode", c.mode.to_string()},
         {"seeds", c.seeds},
         {"report_dir", c.report_dir}};
  return detail::dump(j);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorKind::Io, "write to '" + path + "' failed");
}

}  // namespace hybridprune
