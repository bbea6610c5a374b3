#ifndef INEFF_TRACE_HPP
#define INEFF_TRACE_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ineff {

using Seq = std::uint64_t;
using Pc = std::uint64_t;
using RegIndex = std::uint16_t;

// Default architectural register file: r0..r15 plus FLAGS.
inline constexpr unsigned kDefaultArchRegs = 17;

enum class OpClass : std::uint8_t {
  kAlu,
  kCmp,
  kCondBranch,
  kIndirectJump,
  kPredicatedAlu,
  kLoad,
  kStore,
  kNop,
};

inline constexpr unsigned kNumOpClasses = 8;

std::string_view to_string(OpClass c);
std::optional<OpClass> op_class_from_string(std::string_view s);

inline bool is_control(OpClass c) {
  return c == OpClass::kCondBranch || c == OpClass::kIndirectJump ||
         c == OpClass::kPredicatedAlu;
}
inline bool is_memory(OpClass c) { return c == OpClass::kLoad || c == OpClass::kStore; }

/// Outcome and (optionally) embedded prediction of a control micro-op.
/// Only the fields matching the owning op class are meaningful.
struct ControlAnnotation {
  bool actual_taken = false;
  std::optional<bool> predicted_taken;
  std::int64_t actual_target = 0;
  std::optional<std::int64_t> predicted_target;
  bool actual_pred_false = false;
  std::optional<bool> predicted_pred_false;

  bool operator==(const ControlAnnotation&) const = default;
};

struct MicroOp {
  Seq seq = 0;
  Pc static_pc = 0;
  OpClass op_class = OpClass::kNop;
  std::vector<RegIndex> srcs;
  std::optional<RegIndex> dest;
  std::optional<std::int64_t> mem_addr;
  // Execution latency in cycles; absent means the configured class latency.
  std::optional<std::uint32_t> latency;
  std::optional<ControlAnnotation> ctrl;

  bool operator==(const MicroOp&) const = default;

  /// Register written once the predicate is resolved. A predicated op whose
  /// predicate is actually false writes nothing.
  std::optional<RegIndex> effective_dest() const {
    if (op_class == OpClass::kPredicatedAlu && ctrl && ctrl->actual_pred_false) {
      return std::nullopt;
    }
    return dest;
  }

  bool has_embedded_prediction() const;
  /// True when the embedded prediction exists and matches the outcome.
  bool embedded_prediction_correct() const;
};

using Trace = std::vector<MicroOp>;

/// Register namespace of a trace: general registers r0..r(count-2) and FLAGS
/// as the last index.
struct RegisterSpace {
  unsigned count = kDefaultArchRegs;
  RegIndex flags() const { return static_cast<RegIndex>(count - 1); }
};

class TraceError : public std::runtime_error {
 public:
  TraceError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Checks the structural invariants of one op; throws TraceError.
void validate_op(const MicroOp& op, RegisterSpace regs, std::size_t line = 0);

Trace parse_trace(std::istream& in, RegisterSpace regs = {});
Trace parse_trace_string(std::string_view text, RegisterSpace regs = {});
Trace load_trace_file(const std::string& path, RegisterSpace regs = {});

std::string format_op(const MicroOp& op, RegisterSpace regs = {});
void emit_trace(const Trace& ops, std::ostream& out, RegisterSpace regs = {});
std::string emit_trace_string(const Trace& ops, RegisterSpace regs = {});

// Value semantics ------------------------------------------------------------

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t mix_combine(std::uint64_t seed, std::uint64_t v);

std::uint64_t initial_reg_value(RegIndex r);
std::uint64_t initial_mem_value(std::int64_t addr);

/// Result of a non-memory op computing from its source values.
std::uint64_t compute_value(const MicroOp& op, const std::vector<std::uint64_t>& src_values);
std::uint64_t load_value(std::uint64_t mem_word);

struct ArchState {
  std::vector<std::uint64_t> regs;
  std::map<std::int64_t, std::uint64_t> mem;

  static ArchState initial(RegisterSpace regs);
  std::uint64_t read_mem(std::int64_t addr) const;
  bool operator==(const ArchState&) const = default;
};

ArchState reference_execute(const Trace& trace, RegisterSpace regs = {});

// Synthetic traces ------------------------------------------------------------

struct SynthParams {
  std::size_t count = 10000;
  unsigned num_regs = kDefaultArchRegs;
  // Static loop body length; the dynamic trace iterates over it.
  std::size_t body_size = 60;

  double cmp_branch_fraction = 0.25;  // ops belonging to CMP + COND_BRANCH pairs
  double branch_mispredict_rate = 0.05;
  double dead_write_fraction = 0.05;
  double predicated_fraction = 0.05;
  double predicate_false_rate = 0.5;
  double predicate_mispredict_rate = 0.05;
  double indirect_fraction = 0.02;
  double indirect_mispredict_rate = 0.05;
  double load_fraction = 0.15;
  double store_fraction = 0.08;
  // Weights over chain depths 0..N-1 of ALU ops feeding each CMP.
  std::vector<double> chain_depth_weights{0.4, 0.3, 0.2, 0.1};
  std::uint32_t max_latency = 1;
  bool embed_predictions = true;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void validate(const SynthParams& p);

/// Deterministic for identical (params, seed).
Trace generate_synthetic(const SynthParams& params, std::uint64_t seed);

/// Counts per-kind embedded mispredictions in a trace.
struct PredictionCensus {
  std::size_t branches = 0, branch_mispredicts = 0;
  std::size_t predicated = 0, predicate_mispredicts = 0;
  std::size_t indirects = 0, indirect_mispredicts = 0;
};
PredictionCensus census(const Trace& trace);

}  // namespace ineff

#endif  // INEFF_TRACE_HPP
