#include <gtest/gtest.h>

#include <sstream>

#include "ineff/pipeline.hpp"
#include "ineff/workloads.hpp"
#include "reference_oracle.hpp"

using namespace ineff;

namespace {

PipelineConfig with_mode(Mode m, PredictorKind kind = PredictorKind::kTraceEmbedded) {
  PipelineConfig c;
  c.mode = m;
  c.predictor.kind = kind;
  c.predictor_kind_set = true;
  return c;
}

// Body of 10: six live accumulators, two dead writes, a compare and a branch.
Trace wide_loop(std::size_t iterations) {
  TraceBuilder b;
  for (std::size_t i = 0; i < iterations; ++i) {
    for (RegIndex r = 1; r <= 6; ++r) b.alu(0x10 + 4u * r, {r}, r);
    b.alu(0x40, {7}, 9);
    b.alu(0x44, {7}, 10);
    b.cmp(0x48, {7, 8});
    b.branch(0x4c, true);
  }
  return b.take();
}

}  // namespace

TEST(Bottleneck, ThresholdSemantics) {
  BottleneckMonitor m(4);
  for (int i = 0; i < 3; ++i) EXPECT_FALSE(m.observe(true));
  EXPECT_FALSE(m.observe(false));
  EXPECT_EQ(m.current_run(), 0u);
  for (int i = 0; i < 3; ++i) EXPECT_FALSE(m.observe(true));
  EXPECT_TRUE(m.observe(true));
  EXPECT_EQ(m.current_run(), 0u);
}

TEST(Pipeline, EmptyTrace) {
  const auto r = simulate({}, PipelineConfig{});
  EXPECT_EQ(r.stats.cycles, 0u);
  EXPECT_EQ(r.stats.committed, 0u);
  EXPECT_EQ(r.final_state, ArchState::initial({}));
}

TEST(Pipeline, BaselineNeverSteers) {
  SynthParams p;
  p.count = 5000;
  const Trace t = generate_synthetic(p, 4);
  const auto r = simulate(t, with_mode(Mode::kBaseline));
  EXPECT_EQ(r.stats.steered, 0u);
  EXPECT_EQ(r.stats.ineffectual_fraction(), 0.0);
  EXPECT_EQ(r.stats.committed, t.size());
  EXPECT_EQ(r.final_state, reference_execute(t));
}

TEST(Pipeline, PerfectPredictorMeansNoRollbacks) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthParams p;
    p.count = 8000;
    p.branch_mispredict_rate = 0.2;
    const Trace t = generate_synthetic(p, seed);
    const auto r = simulate(t, with_mode(Mode::kProposed, PredictorKind::kPerfect));
    EXPECT_EQ(r.stats.type_a_total(), 0u);
    EXPECT_EQ(r.stats.primary_iprf_reads, 0u);
    EXPECT_GT(r.stats.committed_ineffectual, 0u);
    EXPECT_EQ(r.final_state, reference_execute(t));
  }
}

TEST(Pipeline, EquivalenceUnderMispredictionsAllModes) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    SynthParams p;
    p.count = 6000;
    p.branch_mispredict_rate = 0.1 * static_cast<double>(seed % 4);
    p.predicate_mispredict_rate = p.branch_mispredict_rate;
    p.indirect_mispredict_rate = p.branch_mispredict_rate;
    p.max_latency = 1 + seed % 3;
    const Trace t = generate_synthetic(p, seed);
    const ArchState ref = reference_execute(t);
    for (Mode m : {Mode::kProposed, Mode::kBaseline, Mode::kPerfectIpipe, Mode::kIsoResource}) {
      PipelineConfig c = m == Mode::kIsoResource ? PipelineConfig::iso_resource() : with_mode(m);
      const auto r = simulate(t, c);
      EXPECT_EQ(r.final_state, ref) << "seed " << seed << " mode " << to_string(m);
      EXPECT_TRUE(r.stats.assertions_held());
    }
  }
}

TEST(Pipeline, GsharePredictorEquivalence) {
  SynthParams p;
  p.count = 6000;
  p.embed_predictions = false;
  const Trace t = generate_synthetic(p, 8);
  PipelineConfig c;  // no embedded predictions: falls back to gshare
  const auto r = simulate(t, c);
  EXPECT_EQ(r.final_state, reference_execute(t));
  EXPECT_GT(r.stats.accuracy.overall().total(), 0u);
}

TEST(Rename, SixEffectualPlusFourIneffectualInOneCycle) {
  const Trace t = wide_loop(300);
  std::ostringstream log;
  SimOptions o;
  o.cycle_log = &log;
  const auto r = simulate(t, with_mode(Mode::kProposed), o);
  EXPECT_EQ(r.final_state, reference_execute(t));
  std::istringstream in(log.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("cycle,renamed", 0), 0u);
  std::size_t max_renamed = 0;
  while (std::getline(in, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    max_renamed = std::max<std::size_t>(max_renamed, std::stoul(line.substr(a + 1, b - a - 1)));
  }
  EXPECT_EQ(max_renamed, 10u);
}

TEST(Rename, FirstOccurrenceGoesToPrimary) {
  const Trace t = wide_loop(100);
  const auto r = simulate(t, with_mode(Mode::kProposed));
  for (Seq s = 0; s < 10; ++s) EXPECT_EQ(r.steered_at_commit[s], 0) << s;
  EXPECT_GT(r.stats.committed_ineffectual, 0u);
}

TEST(Rename, MemoryOpsNeverSteered) {
  SynthParams p;
  p.count = 8000;
  const Trace t = generate_synthetic(p, 12);
  const auto r = simulate(t, with_mode(Mode::kProposed));
  for (const auto& op : t) {
    if (is_memory(op.op_class)) EXPECT_EQ(r.steered_at_commit[op.seq], 0);
  }
}

TEST(Primary, LoadLatencyDelaysConsumer) {
  TraceBuilder b;
  b.load(0, 1, 8);
  b.alu(4, {1}, 2);
  const Trace t = b.take();
  PipelineConfig c = with_mode(Mode::kBaseline);
  c.latency[static_cast<std::size_t>(OpClass::kLoad)] = 9;
  const auto slow = simulate(t, c);
  c.latency[static_cast<std::size_t>(OpClass::kLoad)] = 1;
  const auto fast = simulate(t, c);
  EXPECT_EQ(slow.stats.cycles - fast.stats.cycles, 8u);
}

TEST(Primary, IndependentOpsIssueTogether) {
  TraceBuilder b;
  for (RegIndex r = 1; r <= 6; ++r) b.alu(4u * r, {r}, r);
  const auto r = simulate(b.take(), with_mode(Mode::kBaseline));
  // rename at 0, issue at 1, complete at 2, commit at 2.
  EXPECT_EQ(r.stats.cycles, 3u);
}

TEST(Primary, StoreToLoadForwarding) {
  TraceBuilder b;
  b.alu(0, {1}, 2);
  b.store(4, {2}, 64);
  b.load(8, 3, 64);
  b.alu(12, {3}, 4);
  const Trace t = b.take();
  EXPECT_EQ(simulate(t, with_mode(Mode::kBaseline)).final_state, reference_execute(t));
}

TEST(Ipipe, IssueOrderIsMonotone) {
  SynthParams p;
  p.count = 10000;
  p.max_latency = 3;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto r = simulate(generate_synthetic(p, seed), with_mode(Mode::kProposed));
    EXPECT_EQ(r.stats.ipipe_order_violations, 0u);
    EXPECT_EQ(r.stats.portion_size_violations, 0u);
  }
}

TEST(Ipipe, WritePortSerializesCompletions) {
  const Trace t = wide_loop(300);
  const auto r = simulate(t, with_mode(Mode::kProposed));
  // Three of the four steered ops per iteration write the I-PRF.
  EXPECT_GT(r.stats.iprf_write_conflicts, 0u);
  PipelineConfig wide = with_mode(Mode::kProposed);
  wide.iprf_write_ports = 4;
  EXPECT_EQ(simulate(t, wide).stats.iprf_write_conflicts, 0u);
}

TEST(Ipipe, PerfectIpipeNoSlowerOnSameSteering) {
  const Trace t = speedup_workload(20000);
  const auto p = simulate(t, with_mode(Mode::kProposed, PredictorKind::kPerfect));
  const auto q = simulate(t, with_mode(Mode::kPerfectIpipe, PredictorKind::kPerfect));
  EXPECT_LE(q.stats.cycles, p.stats.cycles);
  EXPECT_EQ(q.final_state, reference_execute(t));
}

TEST(Mdre, EachInjectedKindRollsBackOnceToPortionA) {
  for (std::size_t k = 0; k < kNumControlKinds; ++k) {
    std::array<std::size_t, kNumControlKinds> per{};
    per[k] = 1;
    const auto w = injected_workload(2000, per);
    const auto r = simulate(w.trace, with_mode(Mode::kProposed));
    ASSERT_EQ(r.rollbacks.size(), 1u) << "kind " << k;
    const auto& ev = r.rollbacks[0];
    EXPECT_EQ(ev.cause, RollbackCause::kTypeA);
    EXPECT_EQ(static_cast<std::size_t>(ev.kind), k);
    EXPECT_EQ(ev.culprit, w.injected[0]);
    EXPECT_EQ(ev.target % 10, 0u);
    EXPECT_LE(ev.target, ev.culprit);
    EXPECT_GE(ev.target + 20, ev.culprit + 1);
    EXPECT_EQ(ev.portion_a, 10u);
    EXPECT_EQ(ev.portion_b, 10u);
    EXPECT_EQ(r.stats.type_a[k], 1u);
    EXPECT_EQ(r.final_state, reference_execute(w.trace));
  }
}

TEST(Mdre, RollbackUntagsPortionsAandB) {
  const auto w = injected_workload(2000, {1, 0, 0});
  SimOptions o;
  o.record_tags = true;
  const auto r = simulate(w.trace, with_mode(Mode::kProposed), o);
  ASSERT_EQ(r.rollbacks.size(), 1u);
  // The re-executed branch ran on the primary pipe.
  EXPECT_EQ(r.steered_at_commit[w.injected[0]], 0);
  EXPECT_EQ(r.prediction_correct[w.injected[0]], 0);
}

TEST(Mpki, ArithmeticIdentity) {
  const auto w = injected_workload(10000, {30, 10, 10});
  const auto r = simulate(w.trace, with_mode(Mode::kProposed));
  EXPECT_EQ(r.stats.committed, 10000u);
  EXPECT_EQ(r.stats.type_a[0], 30u);
  EXPECT_EQ(r.stats.type_a[1], 10u);
  EXPECT_EQ(r.stats.type_a[2], 10u);
  EXPECT_DOUBLE_EQ(r.stats.mpki(), 5.0);
  EXPECT_DOUBLE_EQ(r.stats.mpki(ControlKind::kBranch) + r.stats.mpki(ControlKind::kPredicate) +
                       r.stats.mpki(ControlKind::kIndirect),
                   r.stats.mpki());
}

TEST(Bottleneck, OneFlushPerSustainedEpisode) {
  const Trace t = bottleneck_workload(20000);
  const auto r = simulate(t, with_mode(Mode::kProposed));
  ASSERT_GT(r.stats.bottleneck_flushes, 0u);
  std::size_t flushed = 0;
  for (const auto& e : r.stall_episodes) {
    EXPECT_LE(e.length, 32u);
    if (e.length == 32u) EXPECT_TRUE(e.flushed);
    flushed += e.flushed;
  }
  EXPECT_EQ(flushed, r.stats.bottleneck_flushes);
  for (const auto& ev : r.rollbacks) {
    if (ev.cause == RollbackCause::kBottleneck) EXPECT_EQ(ev.tags_after, 0u);
  }
  EXPECT_EQ(r.final_state, reference_execute(t));
}

TEST(Bottleneck, HigherThresholdMeansFewerFlushes) {
  const Trace t = bottleneck_workload(20000);
  PipelineConfig c = with_mode(Mode::kProposed);
  c.bottleneck_k = 1000000;
  const auto r = simulate(t, c);
  EXPECT_EQ(r.stats.bottleneck_flushes, 0u);
  EXPECT_EQ(r.final_state, reference_execute(t));
}

TEST(Predictor, TrainingIneffectualOpsHelps) {
  SynthParams p;
  p.count = 30000;
  p.embed_predictions = false;
  const Trace t = generate_synthetic(p, 3);
  PipelineConfig c = with_mode(Mode::kProposed, PredictorKind::kGshare);
  SimOptions off;
  off.train_ineffectual = false;
  const auto trained = simulate(t, c);
  const auto untrained = simulate(t, c, off);
  auto wrong = [&](const SimResult& r) {
    std::size_t n = 0;
    for (const auto& op : t) n += is_control(op.op_class) && !r.prediction_correct[op.seq];
    return n;
  };
  EXPECT_LT(wrong(trained), wrong(untrained));
  EXPECT_EQ(trained.stats.accuracy.overall().total(),
            static_cast<std::uint64_t>(std::count_if(t.begin(), t.end(), [](const MicroOp& op) {
              return is_control(op.op_class);
            })));
  EXPECT_EQ(untrained.final_state, reference_execute(t));
}

TEST(Detector, PipelineTagsAreSubsetOfOracleOnReplayedOutcomes) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    SynthParams p;
    p.count = 6000;
    p.embed_predictions = seed % 2 == 0;
    const Trace t = generate_synthetic(p, seed);
    const auto r = simulate(t, PipelineConfig{});
    const auto oracle = ineff::ref::reference_ineffectual(with_prediction_outcomes(t, r.prediction_correct));
    for (Seq s = 0; s < t.size(); ++s) {
      if (r.tagged[s]) EXPECT_TRUE(oracle.count(s)) << "seed " << seed << " seq " << s;
    }
  }
}

TEST(Config, InvalidConfigsRejected) {
  PipelineConfig c;
  c.rob_entries = 375;
  EXPECT_THROW(simulate({}, c), ConfigError);
  c = PipelineConfig{};
  c.ipipe_width = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = PipelineConfig{};
  c.irs_entries = 100;
  EXPECT_THROW(c.validate(), ConfigError);
  c.mode = Mode::kBaseline;  // I-pipe geometry is irrelevant without an I-pipe
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, ParsesFlatKeyValues) {
  const auto c = parse_config_string(
      "# proposed core\n"
      "pipeline.window_size = 5\n"
      "pipeline.rob_entries=185\n"
      "ipipe.width=8\nirs.entries=256\n"
      "predictor.kind=gshare\nmode=perfect_ipipe\n"
      "bottleneck.k=16\nlatency.load=3\npivot_type=D\ncommit.width=5\ndb.entries=20\n");
  EXPECT_EQ(c.window_size, 5u);
  EXPECT_EQ(c.rob_entries, 185u);
  EXPECT_EQ(c.ipipe_width, 8u);
  EXPECT_EQ(c.irs_entries, 256u);
  EXPECT_EQ(c.predictor.kind, PredictorKind::kGshare);
  EXPECT_TRUE(c.predictor_kind_set);
  EXPECT_EQ(c.mode, Mode::kPerfectIpipe);
  EXPECT_EQ(c.bottleneck_k, 16u);
  EXPECT_EQ(c.latency_of(OpClass::kLoad), 3u);
  EXPECT_EQ(c.pivot_type, PivotType::kD);
}

TEST(Config, BadKeysAndValues) {
  EXPECT_THROW(parse_config_string("nonsense.key=1\n"), ConfigError);
  EXPECT_THROW(parse_config_string("ipipe.width=four\n"), ConfigError);
  EXPECT_THROW(parse_config_string("commit.width=6\n"), ConfigError);
  EXPECT_THROW(parse_config_string("db.entries=10\n"), ConfigError);
  EXPECT_THROW(parse_config_string("mode=turbo\n"), ConfigError);
  EXPECT_THROW(parse_config_string("pipeline.window_size\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST(Config, SettingsRoundTrip) {
  PipelineConfig c = PipelineConfig::iso_resource();
  c.predictor.kind = PredictorKind::kTaggedTable;
  std::string text;
  for (const auto& [k, v] : config_settings(c)) text += k + "=" + v + "\n";
  const auto back = parse_config_string(text);
  EXPECT_EQ(config_settings(back), config_settings(c));
  EXPECT_EQ(back.primary_issue_width, 14u);
  EXPECT_EQ(back.primary_rs_entries, 288u);
}
