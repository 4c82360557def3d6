// Copyright 2026 The hybridprune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "fixtures.hpp"
#include "hybridprune/config.hpp"
#include "hybridprune/documents.hpp"
#include "hybridprune/error.hpp"
#include "hybridprune/experiment.hpp"
#include "hybridprune/reports.hpp"
#include "json.hpp"

namespace hybridprune {
namespace {

namespace fs = std::filesystem;

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorKind::InvalidArgument;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hybridprune_io_test_" + name);
  fs::remove_all(p);
  return p;
}

TEST(ConfigTest, EmptyObjectGivesDefaults) {
  const ExperimentConfig c = parse_config("{}");
  EXPECT_EQ(c.supernet.num_layers, 24u);
  EXPECT_EQ(c.supernet.d_model, 64u);
  EXPECT_EQ(c.supernet.vocab_size, c.task.vocab_size);
  EXPECT_EQ(c.supernet.max_seq_len, c.task.seq_len);
  EXPECT_EQ(c.retrain_epochs, 20u);
  EXPECT_DOUBLE_EQ(c.warmup.trim_fraction, 0.1);
  EXPECT_DOUBLE_EQ(c.schedule.low_fidelity_fraction, 0.01);
  EXPECT_EQ(c.mode.mode, ExperimentMode::Hybrid);
}

TEST(ConfigTest, FieldsAreRead) {
  const ExperimentConfig c = testing::tiny_experiment();
  EXPECT_EQ(c.supernet.num_layers, 4u);
  EXPECT_EQ(c.task.train_size, 64u);
  EXPECT_EQ(c.batch_size, 16u);
  EXPECT_DOUBLE_EQ(c.learning_rate, 0.01);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2}));
  EXPECT_EQ(c.warmup.rounds, 1u);
}

TEST(ConfigTest, UnknownKeysAndBadTypesAreRejected) {
  EXPECT_EQ(kind_of([] { parse_config(R"({"budjet": 3})"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_config(R"({"schedule": {"kk": 3}})"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_config(R"({"training": {"batch_size": -1}})"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_config(R"({"training": {"batch_size": "32"}})"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_config("{not json"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_config(R"({"mode": "single:entropy"})"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_config(R"({"warmup": {"candidates": ["weight", "nope"]}})"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_config(R"({"schedule": {"fidelity": "medium"}})"); }), ErrorKind::Parse);
}

TEST(ConfigTest, InvalidValuesAreRejectedBeforeTraining) {
  EXPECT_EQ(kind_of([] { parse_config(R"({"supernet": {"num_layers": 2}})"); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { parse_config(R"({"schedule": {"budget_fraction": 1.5}})"); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { parse_config(R"({"seeds": []})"); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { parse_config(R"({"supernet": {"num_heads": 3}})"); }), ErrorKind::InvalidConfig);
  EXPECT_EQ(kind_of([] { parse_config(R"({"warmup": {"trim_fraction": 0}})"); }), ErrorKind::InvalidConfig);
}

TEST(ConfigTest, ModesRoundTrip) {
  for (const char* text : {"hybrid", "random-prune", "single:gradient", "single:threshold", "no-partition", "no-prune"}) {
    EXPECT_EQ(ModeSpec::parse(text).to_string(), text);
  }
  EXPECT_EQ(ModeSpec::parse("single:zeros").single, CriterionKind::Zeros);
  EXPECT_THROW(ModeSpec::parse("single"), Error);
  EXPECT_THROW(ModeSpec::parse("greedy"), Error);
}

TEST(ConfigTest, SerializedConfigParsesBackIdentically) {
  ExperimentConfig c = testing::tiny_experiment();
  c.mode = ModeSpec::parse("single:activation");
  c.schedule.budget = 900;
  c.schedule.k = 3;
  c.warmup.candidates = {CriterionKind::Gradient, CriterionKind::Weight};
  const std::string text = config_to_json(c);
  const ExperimentConfig back = parse_config(text);
  EXPECT_EQ(config_to_json(back), text);
  EXPECT_EQ(back.supernet, c.supernet);
  EXPECT_EQ(back.schedule, c.schedule);
  EXPECT_EQ(back.warmup, c.warmup);
  EXPECT_EQ(back.mode, c.mode);
}

TEST(ConfigTest, FilesReportTheirPath) {
  const fs::path missing = scratch("missing") / "config.json";
  try {
    load_config(missing.string());
    FAIL() << "expected an io error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
    EXPECT_NE(std::string(e.what()).find(missing.string()), std::string::npos);
  }
  const fs::path nested = scratch("nested") / "a" / "b.txt";
  write_text_file(nested.string(), "hello");
  EXPECT_EQ(read_text_file(nested.string()), "hello");
}

HybridStrategy sample_strategy() {
  HybridStrategy s;
  s.partitions = partition_layers(10);
  s.assignment = {Criterion::of(CriterionKind::Gradient), Criterion::fixed_threshold(0.0125),
                  Criterion::of(CriterionKind::Threshold), Criterion::of(CriterionKind::Activation)};
  return s;
}

TEST(StrategyDocumentTest, RoundTripIsBitExact) {
  const std::string doc = strategy_to_document(sample_strategy(), 10);
  const HybridStrategy back = strategy_from_document(doc);
  EXPECT_EQ(back, sample_strategy());
  EXPECT_EQ(strategy_to_document(back, 10), doc);
  const nlohmann::json j = nlohmann::json::parse(doc);
  EXPECT_EQ(j.at("format"), std::string(kStrategyFormat));
}

TEST(StrategyDocumentTest, UnknownCriterionIsRejected) {
  nlohmann::json j = nlohmann::json::parse(strategy_to_document(sample_strategy(), 10));
  std::string text = j.dump();
  const auto at = text.find("\"gradient\"");
  ASSERT_NE(at, std::string::npos);
  text.replace(at, 10, "\"entropy\"");
  EXPECT_EQ(kind_of([&] { strategy_from_document(text); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { strategy_from_document(R"({"format": "other/1"})"); }), ErrorKind::Parse);
}

TEST(StrategyDocumentTest, ImportRejectsLayerMismatchAndForcesHybrid) {
  const std::string doc = strategy_to_document(sample_strategy(), 10);
  ExperimentConfig c = testing::tiny_experiment();
  EXPECT_EQ(kind_of([&] { import_strategy(doc, c); }), ErrorKind::InvalidConfig);
  const std::string four = strategy_to_document(HybridStrategy::uniform(4, 4, Criterion::of(CriterionKind::Zeros)), 4);
  c.mode = ModeSpec::parse("random-prune");
  const ExperimentConfig imported = import_strategy(four, c);
  EXPECT_EQ(imported.mode.mode, ExperimentMode::Hybrid);
  ASSERT_TRUE(imported.imported_strategy.has_value());
  EXPECT_EQ(imported.imported_strategy->assignment[2].kind, CriterionKind::Zeros);
}

TEST(ArchitectureDocumentTest, RoundTripIsBitExact) {
  ArchitectureDocument arch;
  arch.supernet = testing::tiny_supernet(5);
  arch.supernet.pa_linear = true;
  arch.mask = MaskState(5);
  arch.mask.deactivate({0, ModuleKind::PA});
  arch.mask.deactivate({3, ModuleKind::SA});
  const std::string doc = architecture_to_document(arch);
  const ArchitectureDocument back = architecture_from_document(doc);
  EXPECT_EQ(back, arch);
  EXPECT_EQ(architecture_to_document(back), doc);
}

TEST(ArchitectureDocumentTest, ImportRejectsLayerMismatch) {
  ArchitectureDocument arch{testing::tiny_supernet(6), MaskState(6)};
  const ExperimentConfig c = testing::tiny_experiment();
  EXPECT_EQ(kind_of([&] { import_architecture(architecture_to_document(arch), c); }), ErrorKind::InvalidConfig);
  ArchitectureDocument four{c.supernet, MaskState(4)};
  four.mask.deactivate({1, ModuleKind::SA});
  const ExperimentConfig imported = import_architecture(architecture_to_document(four), c);
  ASSERT_TRUE(imported.imported_architecture.has_value());
  EXPECT_EQ(*imported.imported_architecture, four.mask);
}

class ReportTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() { report_ = new Report(run_experiment(testing::tiny_experiment())); }
  static void TearDownTestSuite() {
    delete report_;
    report_ = nullptr;
  }
  static Report* report_;
};

Report* ReportTest::report_ = nullptr;

TEST_F(ReportTest, FrequencyCountsMatchRecords) {
  for (const SeedReport& s : report_->seeds) {
    std::size_t pruned = 0;
    for (const PruneRecord& r : s.records) pruned += r.pruned.size();
    std::size_t total = 0;
    for (const auto& [key, count] : frequency_table(s)) total += count;
    EXPECT_EQ(total, pruned);
    ASSERT_TRUE(s.schedule.has_value());
    EXPECT_EQ(total, s.schedule->rounds * s.schedule->k);
  }
}

TEST_F(ReportTest, FrequencyCsvRowsSumPerSeed) {
  const std::string csv = frequency_csv(frequency_table(*report_));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "layer,kind,criterion,count");
  std::size_t total = 0;
  while (std::getline(in, line)) total += std::stoul(line.substr(line.rfind(',') + 1));
  std::size_t expected = 0;
  for (const SeedReport& s : report_->seeds) expected += s.schedule->rounds * s.schedule->k;
  EXPECT_EQ(total, expected);
}

TEST_F(ReportTest, SummaryRatioIsSearchOverRetrain) {
  const nlohmann::json j = nlohmann::json::parse(summary_json(*report_));
  ASSERT_EQ(j.at("seeds").size(), report_->seeds.size());
  for (std::size_t i = 0; i < report_->seeds.size(); ++i) {
    const nlohmann::json& s = j.at("seeds")[i];
    EXPECT_DOUBLE_EQ(s.at("ratio").get<double>(),
                     s.at("search_epochs").get<double>() / s.at("retrain_epochs").get<double>());
    EXPECT_DOUBLE_EQ(s.at("search_epochs").get<double>(), report_->seeds[i].log.search_epochs());
  }
  EXPECT_DOUBLE_EQ(epoch_ratio(report_->seeds[0].log),
                   report_->seeds[0].log.search_epochs() / report_->seeds[0].log.retrain_epochs);
}

TEST_F(ReportTest, JsonRoundTripAndReEmitAreByteIdentical) {
  const std::string text = report_to_json(*report_);
  EXPECT_EQ(report_to_json(report_from_json(text)), text);
  const fs::path a = scratch("emit_a");
  const fs::path b = scratch("emit_b");
  const std::vector<std::string> files = emit_reports(*report_, a.string());
  emit_reports(report_from_json(read_text_file((a / "report.json").string())), b.string());
  ASSERT_FALSE(files.empty());
  for (const std::string& f : files) {
    const fs::path rel = fs::relative(f, a);
    EXPECT_EQ(read_text_file(f), read_text_file((b / rel).string())) << rel;
  }
  for (const char* name : {"frequency.csv", "rounds.json", "summary.json", "metrics.csv", "report.json"}) {
    EXPECT_TRUE(fs::exists(a / name)) << name;
  }
}

TEST_F(ReportTest, UnwritableDirectoryNamesThePath) {
  const fs::path blocker = scratch("blocker");
  write_text_file(blocker.string(), "file, not a directory");
  const std::string target = (blocker / "reports").string();
  try {
    emit_reports(*report_, target);
    FAIL() << "expected an io error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
    EXPECT_NE(std::string(e.what()).find(target), std::string::npos);
  }
}

TEST_F(ReportTest, ExportedDocumentsRoundTrip) {
  const std::string strategy = export_strategy(*report_);
  EXPECT_EQ(strategy_to_document(strategy_from_document(strategy), 4), strategy);
  const std::string arch = export_architecture(*report_, report_->seeds[1].seed);
  EXPECT_EQ(architecture_to_document(architecture_from_document(arch)), arch);
  EXPECT_EQ(architecture_from_document(arch).mask, report_->seeds[1].final_mask);
  EXPECT_THROW(export_architecture(*report_, 99), Error);
}

}  // namespace
}  // namespace hybridprune
