#ifndef INEFF_WORKLOADS_HPP
#define INEFF_WORKLOADS_HPP

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "ineff/predictor.hpp"
#include "ineff/trace.hpp"

namespace ineff {

/// Appends ops to a trace with dense seqs. Control ops default to a correct
/// embedded prediction.
class TraceBuilder {
 public:
  explicit TraceBuilder(RegisterSpace regs = {}) : regs_(regs) {}

  MicroOp& alu(Pc pc, std::vector<RegIndex> srcs, RegIndex dest, unsigned latency = 0);
  MicroOp& cmp(Pc pc, std::vector<RegIndex> srcs);
  MicroOp& branch(Pc pc, bool taken);
  MicroOp& indirect(Pc pc, RegIndex src, std::int64_t target);
  MicroOp& predicated(Pc pc, std::vector<RegIndex> srcs, RegIndex dest, bool pred_false);
  MicroOp& load(Pc pc, RegIndex dest, std::int64_t addr);
  MicroOp& store(Pc pc, std::vector<RegIndex> srcs, std::int64_t addr);
  MicroOp& nop(Pc pc);

  std::size_t size() const { return ops_.size(); }
  RegIndex flags() const { return regs_.flags(); }
  Trace take() { return std::move(ops_); }

 private:
  MicroOp& push(MicroOp op);
  RegisterSpace regs_;
  Trace ops_;
};

/// Flips the embedded prediction of `op` so it becomes a misprediction.
/// A predicated op is made to execute (predicate true) while predicted false.
void inject_misprediction(MicroOp& op);

/// Loop of independent accumulators plus a compare, branch and predicated
/// op whose results are dead: over a third of the ops are ineffectual, and
/// the I-pipe is never the bottleneck.
Trace speedup_workload(std::size_t count);

/// Loop whose ineffectual part is a long chain of multi-cycle ALU ops
/// feeding a compare and branch, so the in-order I-pipe cannot keep up.
Trace bottleneck_workload(std::size_t count, unsigned chain_length = 7, unsigned latency = 3);

struct InjectedWorkload {
  Trace trace;
  std::vector<Seq> injected;  // ascending
  std::array<std::size_t, kNumControlKinds> per_kind{};
};

/// Loop with a branch, a predicated op and an indirect jump that all become
/// ineffectual; `per_kind[k]` instances of kind k are turned into
/// mispredictions, evenly spaced after `warmup` ops.
InjectedWorkload injected_workload(std::size_t count,
                                   std::array<std::size_t, kNumControlKinds> per_kind,
                                   std::size_t warmup = 400);

/// Generator settings with only compare/branch pairs fed by short chains.
SynthParams cmp_branch_params(std::size_t count);

}  // namespace ineff

#endif  // INEFF_WORKLOADS_HPP
