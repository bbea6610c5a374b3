#include "ineff/workloads.hpp"

#include <stdexcept>

namespace ineff {

MicroOp& TraceBuilder::push(MicroOp op) {
  op.seq = ops_.size();
  validate_op(op, regs_);
  ops_.push_back(std::move(op));
  return ops_.back();
}

MicroOp& TraceBuilder::alu(Pc pc, std::vector<RegIndex> srcs, RegIndex dest, unsigned latency) {
  MicroOp op;
  op.static_pc = pc;
  op.op_class = OpClass::kAlu;
  op.srcs = std::move(srcs);
  op.dest = dest;
  if (latency) op.latency = latency;
  return push(std::move(op));
}

MicroOp& TraceBuilder::cmp(Pc pc, std::vector<RegIndex> srcs) {
  MicroOp op;
  op.static_pc = pc;
  op.op_class = OpClass::kCmp;
  op.srcs = std::move(srcs);
  op.dest = flags();
  return push(std::move(op));
}

MicroOp& TraceBuilder::branch(Pc pc, bool taken) {
  MicroOp op;
  op.static_pc = pc;
  op.op_class = OpClass::kCondBranch;
  op.srcs = {flags()};
  op.ctrl = ControlAnnotation{};
  op.ctrl->actual_taken = taken;
  op.ctrl->predicted_taken = taken;
  return push(std::move(op));
}

MicroOp& TraceBuilder::indirect(Pc pc, RegIndex src, std::int64_t target) {
  MicroOp op;
  op.static_pc = pc;
  op.op_class = OpClass::kIndirectJump;
  op.srcs = {src};
  op.ctrl = ControlAnnotation{};
  op.ctrl->actual_target = target;
  op.ctrl->predicted_target = target;
  return push(std::move(op));
}

MicroOp& TraceBuilder::predicated(Pc pc, std::vector<RegIndex> srcs, RegIndex dest,
                                  bool pred_false) {
  MicroOp op;
  op.static_pc = pc;
  op.op_class = OpClass::kPredicatedAlu;
  op.srcs = std::move(srcs);
  op.dest = dest;
  op.ctrl = ControlAnnotation{};
  op.ctrl->actual_pred_false = pred_false;
  op.ctrl->predicted_pred_false = pred_false;
  return push(std::move(op));
}

MicroOp& TraceBuilder::load(Pc pc, RegIndex dest, std::int64_t addr) {
  MicroOp op;
  op.static_pc = pc;
  op.op_class = OpClass::kLoad;
  op.dest = dest;
  op.mem_addr = addr;
  return push(std::move(op));
}

MicroOp& TraceBuilder::store(Pc pc, std::vector<RegIndex> srcs, std::int64_t addr) {
  MicroOp op;
  op.static_pc = pc;
  op.op_class = OpClass::kStore;
  op.srcs = std::move(srcs);
  op.mem_addr = addr;
  return push(std::move(op));
}

MicroOp& TraceBuilder::nop(Pc pc) {
  MicroOp op;
  op.static_pc = pc;
  op.op_class = OpClass::kNop;
  return push(std::move(op));
}

void inject_misprediction(MicroOp& op) {
  if (!op.ctrl) throw std::invalid_argument("only control ops carry predictions");
  auto& c = *op.ctrl;
  switch (op.op_class) {
    case OpClass::kCondBranch:
      c.predicted_taken = !c.actual_taken;
      break;
    case OpClass::kIndirectJump:
      c.predicted_target = c.actual_target + 8;
      break;
    case OpClass::kPredicatedAlu:
      c.actual_pred_false = false;
      c.predicted_pred_false = true;
      break;
    default:
      throw std::invalid_argument("only control ops carry predictions");
  }
}

Trace speedup_workload(std::size_t count) {
  TraceBuilder b;
  const Pc base = 0x400;
  while (b.size() < count) {
    const std::size_t before = b.size();
    auto room = [&](std::size_t i) { return before + i < count; };
    for (RegIndex r = 1; r <= 5 && room(r - 1u); ++r) b.alu(base + 4u * (r - 1u), {r}, r);
    if (room(5)) b.cmp(base + 20, {1});
    if (room(6)) b.branch(base + 24, true);
    if (room(7)) b.predicated(base + 28, {1}, 6, true);
  }
  return b.take();
}

Trace bottleneck_workload(std::size_t count, unsigned chain_length, unsigned latency) {
  if (chain_length < 1 || chain_length > 8) {
    throw std::invalid_argument("chain length must be in [1, 8]");
  }
  TraceBuilder b;
  const Pc base = 0x800;
  while (b.size() < count) {
    Pc pc = base;
    auto room = [&] { return b.size() < count; };
    for (unsigned k = 0; k < chain_length && room(); ++k, pc += 4) {
      b.alu(pc, {static_cast<RegIndex>(1 + k)}, static_cast<RegIndex>(2 + k), latency);
    }
    if (room()) b.cmp(pc, {static_cast<RegIndex>(1 + chain_length), 1});
    pc += 4;
    if (room()) b.branch(pc, true);
    pc += 4;
    for (RegIndex r = 10; r <= 13 && room(); ++r, pc += 4) b.alu(pc, {r}, r);
    if (room()) b.alu(pc, {1}, 1);
  }
  return b.take();
}

namespace {

// Body offsets of the control ops in injected_workload.
constexpr std::array<std::size_t, kNumControlKinds> kInjectSlot{4, 6, 8};  // branch, pred, indirect
constexpr std::size_t kInjectBody = 16;

}  // namespace

InjectedWorkload injected_workload(std::size_t count,
                                   std::array<std::size_t, kNumControlKinds> per_kind,
                                   std::size_t warmup) {
  TraceBuilder b;
  const Pc base = 0x1000;
  auto pc = [&](std::size_t slot) { return base + 4 * slot; };
  while (b.size() < count) {
    const std::size_t slot = b.size() % kInjectBody;
    switch (slot) {
      case 0: b.alu(pc(slot), {1}, 1); break;
      case 1: b.alu(pc(slot), {2}, 2); break;
      case 2: b.alu(pc(slot), {1}, 3); break;
      case 3: b.cmp(pc(slot), {3, 2}); break;
      case 4: b.branch(pc(slot), true); break;
      case 5: b.alu(pc(slot), {4}, 4); break;
      case 6: b.predicated(pc(slot), {2}, 5, true); break;
      case 7: b.alu(pc(slot), {2}, 6); break;
      case 8: b.indirect(pc(slot), 6, 0x2000); break;
      case 9: b.alu(pc(slot), {7}, 7); break;
      case 10: b.store(pc(slot), {1}, 0x40); break;
      case 11: b.load(pc(slot), 8, 0x40); break;
      case 12: b.alu(pc(slot), {8, 9}, 9); break;
      default: {
        const auto r = static_cast<RegIndex>(slot - 3);
        b.alu(pc(slot), {r}, r);
        break;
      }
    }
  }
  InjectedWorkload w;
  w.trace = b.take();
  std::size_t total = 0;
  for (auto k : per_kind) total += k;
  if (total == 0) return w;
  if (warmup >= count) throw std::invalid_argument("warmup exceeds trace length");
  const std::size_t spacing = (count - warmup) / (total + 1);
  if (spacing < 2 * kInjectBody) throw std::invalid_argument("too many injections for trace");

  std::array<std::size_t, kNumControlKinds> left = per_kind;
  std::size_t kind = 0;
  for (std::size_t j = 0; j < total; ++j) {
    while (left[kind] == 0) kind = (kind + 1) % kNumControlKinds;
    const std::size_t at = warmup + (j + 1) * spacing;
    std::size_t seq = at - at % kInjectBody + kInjectSlot[kind];
    if (seq < at) seq += kInjectBody;
    if (seq >= count) throw std::invalid_argument("injection beyond trace end");
    inject_misprediction(w.trace[seq]);
    w.injected.push_back(seq);
    ++w.per_kind[kind];
    --left[kind];
    kind = (kind + 1) % kNumControlKinds;
  }
  return w;
}

SynthParams cmp_branch_params(std::size_t count) {
  SynthParams p;
  p.count = count;
  p.cmp_branch_fraction = 0.5;
  p.dead_write_fraction = 0.0;
  p.predicated_fraction = 0.0;
  p.indirect_fraction = 0.0;
  p.load_fraction = 0.0;
  p.store_fraction = 0.0;
  p.branch_mispredict_rate = 0.0;
  p.chain_depth_weights = {0.4, 0.3, 0.2, 0.1};
  return p;
}

}  // namespace ineff
