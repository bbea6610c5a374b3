#include <gtest/gtest.h>

#include "ineff/predictor.hpp"
#include "reference_oracle.hpp"

using namespace ineff;

namespace {

MicroOp branch(Pc pc, bool taken, std::optional<bool> pred = std::nullopt) {
  MicroOp op;
  op.static_pc = pc;
  op.op_class = OpClass::kCondBranch;
  op.srcs = {16};
  op.ctrl = ControlAnnotation{};
  op.ctrl->actual_taken = taken;
  op.ctrl->predicted_taken = pred;
  return op;
}

MicroOp indirect(Pc pc, std::int64_t target) {
  MicroOp op;
  op.static_pc = pc;
  op.op_class = OpClass::kIndirectJump;
  op.ctrl = ControlAnnotation{};
  op.ctrl->actual_target = target;
  return op;
}

MicroOp predicated(Pc pc, bool pfalse) {
  MicroOp op;
  op.static_pc = pc;
  op.op_class = OpClass::kPredicatedAlu;
  op.dest = 1;
  op.ctrl = ControlAnnotation{};
  op.ctrl->actual_pred_false = pfalse;
  return op;
}

}  // namespace

TEST(Predictor, PerfectIsAlwaysRight) {
  BranchPredictor bp({PredictorKind::kPerfect});
  for (int i = 0; i < 20; ++i) {
    const auto b = branch(4, i % 3 == 0);
    EXPECT_TRUE(bp.predict(b).correct_for(b));
    const auto j = indirect(8, 100 + i);
    EXPECT_TRUE(bp.predict(j).correct_for(j));
    const auto p = predicated(12, i % 2 == 0);
    EXPECT_TRUE(bp.predict(p).correct_for(p));
  }
}

TEST(Predictor, TraceEmbeddedReturnsAnnotation) {
  const Trace t = ineff::ref::load_fixture("walkthrough.trace");
  BranchPredictor bp({PredictorKind::kTraceEmbedded});
  EXPECT_TRUE(bp.predict(t[14]).correct_for(t[14]));
  EXPECT_TRUE(bp.predict(branch(0, true, false)).taken == false);
  EXPECT_THROW(bp.predict(branch(0, true)), std::invalid_argument);
}

TEST(Predictor, NonControlOpIsRejected) {
  const Trace t = ineff::ref::load_fixture("walkthrough.trace");
  for (auto kind : {PredictorKind::kPerfect, PredictorKind::kTraceEmbedded, PredictorKind::kGshare,
                    PredictorKind::kTaggedTable}) {
    BranchPredictor bp({kind});
    EXPECT_THROW(bp.predict(t[0]), std::invalid_argument);
    EXPECT_THROW(bp.train(t[0], Prediction{}), std::invalid_argument);
  }
}

TEST(Predictor, GshareLearnsAlwaysTaken) {
  PredictorConfig cfg{PredictorKind::kGshare};
  cfg.history_length = 4;
  BranchPredictor bp(cfg);
  const auto b = branch(0x40, true);
  for (int i = 0; i < 8; ++i) bp.train(b, bp.predict(b));
  EXPECT_TRUE(bp.predict(b).taken);
}

TEST(Predictor, MispredictionMovesCounterOneStep) {
  PredictorConfig cfg{PredictorKind::kGshare};
  cfg.history_length = 0;
  BranchPredictor bp(cfg);
  const auto taken = branch(0x40, true);
  const auto not_taken = branch(0x40, false);
  // Counters start weakly not-taken (1): one taken update flips the prediction.
  EXPECT_FALSE(bp.predict(taken).taken);
  bp.train(taken, bp.predict(taken));
  EXPECT_TRUE(bp.predict(taken).taken);
  bp.train(taken, bp.predict(taken));  // strongly taken
  bp.train(not_taken, bp.predict(not_taken));
  EXPECT_TRUE(bp.predict(taken).taken);  // one step down is still taken
  bp.train(not_taken, bp.predict(not_taken));
  EXPECT_FALSE(bp.predict(taken).taken);
}

TEST(Predictor, AccuracyCountsEveryTrainedOp) {
  BranchPredictor bp({PredictorKind::kTraceEmbedded});
  for (int i = 0; i < 100; ++i) {
    const auto b = branch(4, true, i >= 5);
    bp.train(b, bp.predict(b));
  }
  const auto& acc = bp.accuracy()[ControlKind::kBranch];
  EXPECT_EQ(acc.correct, 95u);
  EXPECT_EQ(acc.total(), 100u);
  EXPECT_DOUBLE_EQ(acc.accuracy(), 0.95);
  EXPECT_EQ(bp.accuracy().overall().total(), 100u);
}

TEST(Predictor, IndirectAndPredicateTables) {
  BranchPredictor bp({PredictorKind::kGshare});
  const auto j = indirect(8, 0x500);
  EXPECT_FALSE(bp.predict(j).correct_for(j));
  bp.train(j, bp.predict(j));
  EXPECT_TRUE(bp.predict(j).correct_for(j));
  const auto p = predicated(12, true);
  bp.train(p, bp.predict(p));
  EXPECT_TRUE(bp.predict(p).pred_false);
  const auto& a = bp.accuracy();
  EXPECT_EQ(a[ControlKind::kIndirect].total(), 1u);
  EXPECT_EQ(a[ControlKind::kPredicate].total(), 1u);
}

TEST(Predictor, CheckpointRestoresHistory) {
  BranchPredictor bp({PredictorKind::kGshare});
  const auto cp = bp.checkpoint();
  bp.predict(branch(4, true));
  bp.predict(branch(4, true));
  EXPECT_NE(bp.checkpoint(), cp);
  bp.restore(cp);
  EXPECT_EQ(bp.checkpoint(), cp);
}

namespace {

double run_accuracy(PredictorKind kind, const Trace& t) {
  BranchPredictor bp({kind});
  for (const auto& op : t) {
    if (op.op_class != OpClass::kCondBranch) continue;
    bp.train(op, bp.predict(op));
  }
  return bp.accuracy()[ControlKind::kBranch].accuracy();
}

}  // namespace

TEST(Predictor, TaggedTableHandlesPeriodicPatterns) {
  // Period-3 pattern T,T,N on one pc interleaved with a biased branch.
  Trace t;
  for (int i = 0; i < 6000; ++i) {
    t.push_back(branch(0x100, i % 3 != 2));
    t.push_back(branch(0x200, i % 17 != 0));
  }
  const double tagged = run_accuracy(PredictorKind::kTaggedTable, t);
  EXPECT_GT(tagged, 0.93);
  EXPECT_GE(tagged + 1e-9, run_accuracy(PredictorKind::kGshare, t) - 0.02);
}

TEST(Predictor, DeterministicSequence) {
  SynthParams p;
  p.count = 5000;
  const Trace t = generate_synthetic(p, 2);
  auto seq = [&] {
    BranchPredictor bp({PredictorKind::kTaggedTable});
    std::vector<bool> out;
    for (const auto& op : t) {
      if (!is_control(op.op_class)) continue;
      const auto pr = bp.predict(op);
      out.push_back(pr.correct_for(op));
      bp.train(op, pr);
    }
    return out;
  };
  EXPECT_EQ(seq(), seq());
}

TEST(Predictor, ConfigValidation) {
  PredictorConfig cfg;
  cfg.table_bits = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  EXPECT_EQ(predictor_kind_from_string("TAGGED-TABLE"), PredictorKind::kTaggedTable);
  EXPECT_FALSE(predictor_kind_from_string("tage-sc-l"));
}
