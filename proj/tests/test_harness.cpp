#include <gtest/gtest.h>

#include <cstdlib>
#include <sstream>

#include "ineff/detection.hpp"
#include "ineff/harness.hpp"
#include "ineff/workloads.hpp"
#include "reference_oracle.hpp"

using namespace ineff;

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) rows.push_back(split(line));
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  ADD_FAILURE() << "no column " << name;
  return 0;
}

PipelineConfig embedded() {
  PipelineConfig c;
  c.predictor.kind = PredictorKind::kTraceEmbedded;
  c.predictor_kind_set = true;
  return c;
}

}  // namespace

TEST(Harness, CsvHasStableSchemaAndSpeedup) {
  ExperimentSpec spec;
  spec.traces = {{"speedup", speedup_workload(4000)}};
  spec.variants = {{"proposed", embedded()}};
  const auto rows = run_experiments(spec);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].variant, "baseline");
  std::ostringstream os;
  write_csv(os, rows);
  const auto csv = parse_csv(os.str());
  ASSERT_EQ(csv.size(), 3u);
  EXPECT_EQ(csv[0], csv_columns());
  for (const auto& r : csv) EXPECT_EQ(r.size(), csv_columns().size());
  const auto sp = column(csv[0], "speedup");
  EXPECT_DOUBLE_EQ(std::stod(csv[1][sp]), 1.0);
  EXPECT_GT(std::stod(csv[2][sp]), 1.0);
  EXPECT_EQ(csv[2][column(csv[0], "assertions_ok")], "1");
}

TEST(Harness, SweepIsNineVariantsPlusBaseline) {
  const auto variants = sweep_variants(embedded());
  ASSERT_EQ(variants.size(), 9u);
  ExperimentSpec spec;
  spec.traces = {{"t", generate_synthetic(SynthParams{.count = 1500}, 3)}};
  spec.variants = variants;
  spec.jobs = 2;
  const auto rows = run_experiments(spec);
  ASSERT_EQ(rows.size(), 10u);
  EXPECT_EQ(rows[0].variant, "baseline");
  for (std::size_t i = 0; i < variants.size(); ++i) {
    EXPECT_EQ(rows[i + 1].variant, variants[i].label);
    EXPECT_TRUE(rows[i + 1].ok()) << rows[i + 1].error;
    EXPECT_EQ(rows[i + 1].baseline_cycles, rows[0].result->stats.cycles);
  }
}

TEST(Harness, ParallelRunsAreDeterministic) {
  ExperimentSpec spec;
  for (std::uint64_t s = 1; s <= 3; ++s) {
    spec.traces.push_back({"s" + std::to_string(s), generate_synthetic(SynthParams{.count = 1000}, s)});
  }
  spec.variants = pivot_variants(embedded());
  spec.jobs = 1;
  std::ostringstream a, b;
  write_csv(a, run_experiments(spec));
  spec.jobs = 4;
  write_csv(b, run_experiments(spec));
  EXPECT_EQ(a.str(), b.str());
}

TEST(Harness, FailedRunKeepsRowWithError) {
  PipelineConfig c = embedded();
  c.window_size = 7;  // rob_entries no longer a multiple of W
  ExperimentSpec spec;
  spec.traces = {{"t", speedup_workload(100)}};
  spec.variants = {{"bad", c}};
  spec.with_baseline = false;
  const auto rows = run_experiments(spec);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].ok());
  EXPECT_FALSE(rows[0].error.empty());
  std::ostringstream os;
  write_csv(os, rows);
  const auto csv = parse_csv(os.str());
  EXPECT_EQ(csv[1].size(), csv_columns().size());
}

TEST(Harness, DataPivotsAddTagsOnDeadWriteTrace) {
  SynthParams p;
  p.count = 6000;
  p.dead_write_fraction = 0.12;
  p.cmp_branch_fraction = 0.15;
  p.load_fraction = 0.05;
  p.store_fraction = 0.03;
  const Trace t = generate_synthetic(p, 11);
  const auto variants = pivot_variants(embedded());
  ExperimentSpec spec;
  spec.traces = {{"t", t}};
  spec.variants = variants;
  spec.with_baseline = false;
  const auto rows = run_experiments(spec);
  ASSERT_EQ(rows.size(), 3u);
  const auto c = rows[0].result->tagged_count();
  const auto d = rows[1].result->tagged_count();
  const auto cd = rows[2].result->tagged_count();
  EXPECT_GT(d, 0u);
  EXPECT_GE(cd, c);
  EXPECT_GE(cd, d);
}

TEST(Analyze, WalkthroughFixture) {
  const auto r = analyze(ref::load_fixture("walkthrough.trace"), 5);
  EXPECT_EQ(r.ops, 20u);
  EXPECT_EQ(r.ineffectual, 6u);
  EXPECT_DOUBLE_EQ(r.fraction(), 0.3);
  EXPECT_EQ(r.control_pivots, 1u);
  EXPECT_EQ(r.data_pivots, 1u);
  EXPECT_EQ(r.graphs, 1u);
  EXPECT_EQ(r.oracle.size.counts[5], 1u);  // size 6
  EXPECT_EQ(r.oracle.span.counts[9], 1u);  // span 10
  EXPECT_EQ(r.detector_tagged, 6u);

  std::ostringstream os;
  write_histograms(os, r);
  const auto csv = parse_csv(os.str());
  EXPECT_EQ(csv[0], (std::vector<std::string>{"source", "histogram", "bucket", "count"}));
  EXPECT_EQ(csv.size(), 1 + 4 * kHistogramBuckets);
}

TEST(Analyze, PureChainHasNoIneffectual) {
  TraceBuilder b;
  for (int i = 0; i < 50; ++i) b.alu(0x10, {1}, 1);
  const auto r = analyze(b.take(), 10);
  EXPECT_EQ(r.ineffectual, 0u);
  EXPECT_EQ(r.graphs, 0u);
  EXPECT_DOUBLE_EQ(r.fraction(), 0.0);
}

TEST(Analyze, WiderWindowCoversAtLeastAsMuch) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Trace t = generate_synthetic(SynthParams{.count = 4000}, seed);
    const auto narrow = analyze(t, 10);
    const auto wide = analyze(t, 80);
    EXPECT_EQ(narrow.ineffectual, wide.ineffectual);
    EXPECT_LE(wide.detector_tagged, wide.ineffectual);
    EXPECT_GE(wide.detector_tagged, narrow.detector_tagged) << "seed " << seed;
  }
}

TEST(Check, ContainmentAndMissReasons) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Trace t = generate_synthetic(SynthParams{.count = 3000}, seed);
    const auto r = compare_detector_oracle(t, PipelineConfig{});
    EXPECT_TRUE(r.contained());
    EXPECT_EQ(r.detector - r.violations.size() + r.misses.size(), r.oracle);
    EXPECT_LE(r.coverage(), 1.0);
  }
}

TEST(Check, StreamingDetectorFullyCoversWalkthrough) {
  const Trace t = ref::load_fixture("walkthrough.trace");
  const auto tagged = detect_stream(t, 5, PivotType::kCD);
  std::vector<std::uint8_t> mask(t.size(), 0);
  for (Seq s : tagged) mask[s] = 1;
  const auto r = compare_sets(t, mask, 5, PivotType::kCD);
  EXPECT_TRUE(r.contained());
  EXPECT_TRUE(r.misses.empty());
  EXPECT_DOUBLE_EQ(r.coverage(), 1.0);
  std::ostringstream os;
  write_containment(os, r);
  EXPECT_NE(os.str().find("contained,1"), std::string::npos);
}

TEST(Check, ViolationIsReported) {
  const Trace t = ref::load_fixture("walkthrough.trace");
  std::vector<std::uint8_t> mask(t.size(), 0);
  mask[4] = 1;  // i4 is effectual
  const auto r = compare_sets(t, mask, 5, PivotType::kCD);
  EXPECT_FALSE(r.contained());
  ASSERT_EQ(r.violations.size(), 1u);
  EXPECT_EQ(r.violations[0], 4u);
}

TEST(Harness, TagLogCsv) {
  std::vector<TagRecord> log{{14, 0x38, PivotKind::kControl, 1}, {13, 0x34, std::nullopt, 2}};
  std::ostringstream os;
  write_tag_log(os, log);
  EXPECT_EQ(os.str(), "seq,pc,tag,pivot_kind,discovery_rank\n14,56,1,control,1\n13,52,1,,2\n");
}

TEST(Harness, OutDirFromEnvironment) {
  ::setenv("INEFFSIM_OUT_DIR", "/tmp/ineff-out", 1);
  EXPECT_EQ(default_out_dir(), "/tmp/ineff-out");
  ::unsetenv("INEFFSIM_OUT_DIR");
  EXPECT_EQ(default_out_dir(), ".");
}
