// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hybridprune/config.hpp"
#include "hybridprune/documents.hpp"
#include "hybridprune/error.hpp"
#include "hybridprune/experiment.hpp"
#include "hybridprune/reports.hpp"
#include "json.hpp"

namespace {

using namespace hybridprune;

struct RunFlags {
  std::string config_path;
  std::string mode;
  std::vector<std::uint64_t> seeds;
  std::optional<std::size_t> budget;
  std::string fidelity;
  std::string out;
  std::string strategy_path;
  std::string arch_path;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--config", f.config_path, "Experiment config (JSON)");
  cmd->add_option("--mode", f.mode, "hybrid, random-prune, single:<criterion>, no-partition or no-prune");
  cmd->add_option("--seeds", f.seeds, "Comma-separated seeds")->delimiter(',');
  cmd->add_option("--budget", f.budget, "Maximum trainable parameters, head included");
  cmd->add_option("--fidelity", f.fidelity, "Search fidelity")->check(CLI::IsMember({"full", "low"}));
  cmd->add_option("--out", f.out, "Report directory (overrides report_dir)");
}

ExperimentConfig build_config(const RunFlags& f) {
  ExperimentConfig config;
  if (!f.config_path.empty()) {
    config = load_config(f.config_path);
  } else {
    config.finalize();
  }
  if (!f.mode.empty()) config.mode = ModeSpec::parse(f.mode);
  if (!f.seeds.empty()) config.seeds = f.seeds;
  if (f.budget) config.schedule.budget = *f.budget;
  if (!f.fidelity.empty()) config.schedule.fidelity = parse_fidelity(f.fidelity);
  if (!f.out.empty()) config.report_dir = f.out;
  config.validate();
  return config;
}

int execute(const ExperimentConfig& config) {
  const Report report = run_experiment(config, [](const std::string& line) { std::cout << line << std::endl; });
  for (const SeedReport& s : report.seeds) {
    std::cout << "seed " << s.seed << ": search " << s.log.search_epochs() << " epochs, " << s.log.epoch_seconds
              << " s/epoch, retrain " << s.metrics.seconds << " s" << std::endl;
  }
  for (const std::string& path : emit_reports(report, config.report_dir)) std::cout << "wrote " << path << "\n";
  std::cout << "mean accuracy " << report.mean_accuracy() << std::endl;
  return 0;
}

void emit_document(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
}

void print_error(const std::string& kind, const std::string& message) {
  nlohmann::json record{{"error", kind}, {"message", message}};
  std::cerr << record.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid pruning search over serial and parallel adapters"};
  app.require_subcommand(1);

  RunFlags run_flags;
  CLI::App* run = app.add_subcommand("run", "Search, retrain and write reports");
  add_run_flags(run, run_flags);

  std::string report_path;
  std::optional<std::uint64_t> doc_seed;
  std::string doc_out;
  CLI::App* export_strategy_cmd = app.add_subcommand("export-strategy", "Write the strategy document of a report");
  export_strategy_cmd->add_option("--report", report_path, "report.json of a finished run")->required();
  export_strategy_cmd->add_option("--seed", doc_seed, "Seed to export (default: first)");
  export_strategy_cmd->add_option("--out", doc_out, "Output file (default: stdout)");

  CLI::App* export_arch_cmd = app.add_subcommand("export-arch", "Write the architecture document of a report");
  export_arch_cmd->add_option("--report", report_path, "report.json of a finished run")->required();
  export_arch_cmd->add_option("--seed", doc_seed, "Seed to export (default: first)");
  export_arch_cmd->add_option("--out", doc_out, "Output file (default: stdout)");

  RunFlags import_strategy_flags;
  CLI::App* import_strategy_cmd =
      app.add_subcommand("import-strategy", "Search with a given strategy, skipping warm-up, then retrain");
  add_run_flags(import_strategy_cmd, import_strategy_flags);
  import_strategy_cmd->add_option("--strategy", import_strategy_flags.strategy_path, "Strategy document")->required();

  RunFlags import_arch_flags;
  CLI::App* import_arch_cmd = app.add_subcommand("import-arch", "Retrain a given architecture without searching");
  add_run_flags(import_arch_cmd, import_arch_flags);
  import_arch_cmd->add_option("--arch", import_arch_flags.arch_path, "Architecture document")->required();

  std::string report_out;
  CLI::App* report_cmd = app.add_subcommand("report", "Re-emit all report files from report.json");
  report_cmd->add_option("--report", report_path, "report.json of a finished run")->required();
  report_cmd->add_option("--out", report_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (run->parsed()) return execute(build_config(run_flags));
    if (import_strategy_cmd->parsed()) {
      const ExperimentConfig base = build_config(import_strategy_flags);
      return execute(import_strategy(read_text_file(import_strategy_flags.strategy_path), base));
    }
    if (import_arch_cmd->parsed()) {
      const ExperimentConfig base = build_config(import_arch_flags);
      return execute(import_architecture(read_text_file(import_arch_flags.arch_path), base));
    }
    if (export_strategy_cmd->parsed()) {
      emit_document(export_strategy(report_from_json(read_text_file(report_path)), doc_seed), doc_out);
      return 0;
    }
    if (export_arch_cmd->parsed()) {
      emit_document(export_architecture(report_from_json(read_text_file(report_path)), doc_seed), doc_out);
      return 0;
    }
    if (report_cmd->parsed()) {
      for (const std::string& path : emit_reports(report_from_json(read_text_file(report_path)), report_out)) {
        std::cout << "wrote " << path << "\n";
      }
      return 0;
    }
  } catch (const Error& e) {
    print_error(std::string(to_string(e.kind())), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 1;
}
