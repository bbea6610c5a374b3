#include "ineff/predictor.hpp"

#include <cctype>
#include <stdexcept>
#include <string>

namespace ineff {

std::string_view to_string(PredictorKind k) {
  switch (k) {
    case PredictorKind::kPerfect: return "perfect";
    case PredictorKind::kTraceEmbedded: return "trace_embedded";
    case PredictorKind::kGshare: return "gshare";
    case PredictorKind::kTaggedTable: return "tagged_table";
  }
  return "?";
}

std::optional<PredictorKind> predictor_kind_from_string(std::string_view s) {
  std::string l;
  for (char c : s) l.push_back(c == '-' ? '_' : static_cast<char>(std::tolower(c)));
  if (l == "perfect") return PredictorKind::kPerfect;
  if (l == "trace_embedded" || l == "embedded") return PredictorKind::kTraceEmbedded;
  if (l == "gshare") return PredictorKind::kGshare;
  if (l == "tagged_table" || l == "tagged") return PredictorKind::kTaggedTable;
  return std::nullopt;
}

void PredictorConfig::validate() const {
  auto check = [](unsigned v, unsigned lo, unsigned hi, const char* name) {
    if (v < lo || v > hi) {
      throw std::invalid_argument(std::string("predictor.") + name + " must be in [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
  };
  check(table_bits, 1, 24, "table_bits");
  check(history_length, 0, 63, "history_length");
  check(tagged_bits, 1, 20, "tagged_bits");
  check(indirect_bits, 1, 20, "indirect_bits");
  check(predicate_bits, 1, 20, "predicate_bits");
}

std::string_view to_string(ControlKind k) {
  switch (k) {
    case ControlKind::kBranch: return "branch";
    case ControlKind::kPredicate: return "predicate";
    case ControlKind::kIndirect: return "indirect";
  }
  return "?";
}

std::optional<ControlKind> control_kind(OpClass c) {
  switch (c) {
    case OpClass::kCondBranch: return ControlKind::kBranch;
    case OpClass::kPredicatedAlu: return ControlKind::kPredicate;
    case OpClass::kIndirectJump: return ControlKind::kIndirect;
    default: return std::nullopt;
  }
}

bool Prediction::correct_for(const MicroOp& op) const {
  if (!op.ctrl) return false;
  switch (op.op_class) {
    case OpClass::kCondBranch: return taken == op.ctrl->actual_taken;
    case OpClass::kIndirectJump: return target == op.ctrl->actual_target;
    case OpClass::kPredicatedAlu: return pred_false == op.ctrl->actual_pred_false;
    default: return false;
  }
}

AccuracyCounter PredictorAccuracy::overall() const {
  AccuracyCounter sum;
  for (const auto& c : by_kind) {
    sum.correct += c.correct;
    sum.incorrect += c.incorrect;
  }
  return sum;
}

BranchPredictor::BranchPredictor(PredictorConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  counters_.assign(std::size_t{1} << cfg_.table_bits, 1);
  for (auto& t : tagged_) t.assign(std::size_t{1} << cfg_.tagged_bits, TaggedEntry{});
  last_target_.assign(std::size_t{1} << cfg_.indirect_bits, 0);
  predicate_counters_.assign(std::size_t{1} << cfg_.predicate_bits, 1);
}

namespace {

std::uint64_t history_bits(std::uint64_t h, unsigned len) {
  return len >= 64 ? h : h & ((std::uint64_t{1} << len) - 1);
}

// XOR-folds `len` history bits down to `width` bits.
std::uint64_t fold(std::uint64_t h, unsigned len, unsigned width) {
  std::uint64_t v = history_bits(h, len);
  std::uint64_t out = 0;
  const std::uint64_t mask = (std::uint64_t{1} << width) - 1;
  while (v) {
    out ^= v & mask;
    v >>= width;
  }
  return out;
}

void bump(std::uint8_t& c, bool up) {
  if (up && c < 3) ++c;
  if (!up && c > 0) --c;
}

}  // namespace

std::size_t BranchPredictor::gshare_index(Pc pc, std::uint64_t history) const {
  const std::uint64_t mask = (std::uint64_t{1} << cfg_.table_bits) - 1;
  return static_cast<std::size_t>((pc ^ history_bits(history, cfg_.history_length)) & mask);
}

std::size_t BranchPredictor::tagged_index(std::size_t table, Pc pc, std::uint64_t history) const {
  const unsigned w = cfg_.tagged_bits;
  const std::uint64_t mask = (std::uint64_t{1} << w) - 1;
  return static_cast<std::size_t>((pc ^ (pc >> w) ^ fold(history, kTaggedHistory[table], w)) &
                                  mask);
}

std::uint16_t BranchPredictor::tagged_tag(std::size_t table, Pc pc, std::uint64_t history) const {
  const std::uint64_t f = fold(history, kTaggedHistory[table], 8);
  return static_cast<std::uint16_t>(((pc * 0x9e37u) ^ (f << 1) ^ table) & 0xff);
}

std::optional<std::size_t> BranchPredictor::provider(Pc pc, std::uint64_t history) const {
  for (std::size_t t = tagged_.size(); t-- > 0;) {
    const auto& e = tagged_[t][tagged_index(t, pc, history)];
    if (e.valid && e.tag == tagged_tag(t, pc, history)) return t;
  }
  return std::nullopt;
}

bool BranchPredictor::predict_direction(const MicroOp& op, std::uint64_t history) const {
  const Pc pc = op.static_pc;
  if (cfg_.kind == PredictorKind::kGshare) return counters_[gshare_index(pc, history)] >= 2;
  if (auto t = provider(pc, history)) {
    return tagged_[*t][tagged_index(*t, pc, history)].ctr >= 0;
  }
  return counters_[pc & (counters_.size() - 1)] >= 2;
}

void BranchPredictor::train_direction(const MicroOp& op, std::uint64_t history, bool taken) {
  const Pc pc = op.static_pc;
  if (cfg_.kind == PredictorKind::kGshare) {
    bump(counters_[gshare_index(pc, history)], taken);
    return;
  }
  auto& base = counters_[pc & (counters_.size() - 1)];
  const bool base_pred = base >= 2;
  const auto prov = provider(pc, history);
  bool final_pred = base_pred;
  if (prov) {
    auto& e = tagged_[*prov][tagged_index(*prov, pc, history)];
    final_pred = e.ctr >= 0;
    // Alternate prediction: next shorter matching component, else the base.
    bool alt = base_pred;
    for (std::size_t t = *prov; t-- > 0;) {
      const auto& a = tagged_[t][tagged_index(t, pc, history)];
      if (a.valid && a.tag == tagged_tag(t, pc, history)) {
        alt = a.ctr >= 0;
        break;
      }
    }
    if (final_pred != alt) {
      if (final_pred == taken && e.useful < 3) ++e.useful;
      if (final_pred != taken && e.useful > 0) --e.useful;
    }
    if (taken && e.ctr < 3) ++e.ctr;
    if (!taken && e.ctr > -4) --e.ctr;
  } else {
    bump(base, taken);
  }
  if (final_pred == taken) return;
  // Allocate in a longer component; age entries when none is free.
  const std::size_t first = prov ? *prov + 1 : 0;
  bool allocated = false;
  for (std::size_t t = first; t < tagged_.size() && !allocated; ++t) {
    auto& e = tagged_[t][tagged_index(t, pc, history)];
    if (e.valid && e.useful != 0) continue;
    e = TaggedEntry{tagged_tag(t, pc, history), static_cast<std::int8_t>(taken ? 0 : -1), 0, true};
    allocated = true;
  }
  if (!allocated) {
    for (std::size_t t = first; t < tagged_.size(); ++t) {
      auto& e = tagged_[t][tagged_index(t, pc, history)];
      if (e.useful > 0) --e.useful;
    }
  }
}

Prediction BranchPredictor::predict(const MicroOp& op) {
  if (!is_control(op.op_class) || !op.ctrl) {
    throw std::invalid_argument("predict() called on non-control op seq " + std::to_string(op.seq));
  }
  const ControlAnnotation& c = *op.ctrl;
  Prediction p;
  p.history = history_;
  switch (cfg_.kind) {
    case PredictorKind::kPerfect:
      p.taken = c.actual_taken;
      p.target = c.actual_target;
      p.pred_false = c.actual_pred_false;
      break;
    case PredictorKind::kTraceEmbedded: {
      if (!op.has_embedded_prediction()) {
        throw std::invalid_argument("trace has no embedded prediction for seq " +
                                    std::to_string(op.seq));
      }
      p.taken = c.predicted_taken.value_or(false);
      p.target = c.predicted_target.value_or(0);
      p.pred_false = c.predicted_pred_false.value_or(false);
      break;
    }
    case PredictorKind::kGshare:
    case PredictorKind::kTaggedTable:
      switch (op.op_class) {
        case OpClass::kCondBranch:
          p.taken = predict_direction(op, history_);
          break;
        case OpClass::kIndirectJump:
          p.target = last_target_[op.static_pc & (last_target_.size() - 1)];
          break;
        case OpClass::kPredicatedAlu:
          p.pred_false =
              predicate_counters_[op.static_pc & (predicate_counters_.size() - 1)] >= 2;
          break;
        default:
          break;
      }
      break;
  }
  if (op.op_class == OpClass::kCondBranch) history_ = (history_ << 1) | (c.actual_taken ? 1 : 0);
  return p;
}

void BranchPredictor::train(const MicroOp& op, const Prediction& p) {
  const auto kind = control_kind(op.op_class);
  if (!kind || !op.ctrl) {
    throw std::invalid_argument("train() called on non-control op seq " + std::to_string(op.seq));
  }
  auto& acc = accuracy_[*kind];
  if (p.correct_for(op)) {
    ++acc.correct;
  } else {
    ++acc.incorrect;
  }
  if (cfg_.kind != PredictorKind::kGshare && cfg_.kind != PredictorKind::kTaggedTable) return;
  const ControlAnnotation& c = *op.ctrl;
  switch (op.op_class) {
    case OpClass::kCondBranch:
      train_direction(op, p.history, c.actual_taken);
      break;
    case OpClass::kIndirectJump:
      last_target_[op.static_pc & (last_target_.size() - 1)] = c.actual_target;
      break;
    case OpClass::kPredicatedAlu:
      bump(predicate_counters_[op.static_pc & (predicate_counters_.size() - 1)],
           c.actual_pred_false);
      break;
    default:
      break;
  }
}

}  // namespace ineff
