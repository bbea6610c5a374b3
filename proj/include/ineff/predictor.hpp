#ifndef INEFF_PREDICTOR_HPP
#define INEFF_PREDICTOR_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "ineff/trace.hpp"

namespace ineff {

enum class PredictorKind : std::uint8_t { kPerfect, kTraceEmbedded, kGshare, kTaggedTable };

std::string_view to_string(PredictorKind k);
std::optional<PredictorKind> predictor_kind_from_string(std::string_view s);

struct PredictorConfig {
  PredictorKind kind = PredictorKind::kTraceEmbedded;
  unsigned table_bits = 12;       // gshare / base bimodal table
  unsigned history_length = 12;   // gshare global history bits
  unsigned tagged_bits = 10;      // per tagged component
  unsigned indirect_bits = 9;     // last-target table
  unsigned predicate_bits = 10;   // predicate counter table

  void validate() const;
};

enum class ControlKind : std::uint8_t { kBranch, kPredicate, kIndirect };
inline constexpr std::size_t kNumControlKinds = 3;

std::string_view to_string(ControlKind k);
std::optional<ControlKind> control_kind(OpClass c);

struct Prediction {
  bool taken = false;
  std::int64_t target = 0;
  bool pred_false = false;
  std::uint64_t history = 0;  // global history seen by this prediction

  /// Whether this prediction matches the op's actual outcome.
  bool correct_for(const MicroOp& op) const;
};

struct AccuracyCounter {
  std::uint64_t correct = 0;
  std::uint64_t incorrect = 0;
  std::uint64_t total() const { return correct + incorrect; }
  double accuracy() const {
    return total() ? static_cast<double>(correct) / static_cast<double>(total()) : 0.0;
  }
};

struct PredictorAccuracy {
  std::array<AccuracyCounter, kNumControlKinds> by_kind{};
  AccuracyCounter& operator[](ControlKind k) { return by_kind[static_cast<std::size_t>(k)]; }
  const AccuracyCounter& operator[](ControlKind k) const {
    return by_kind[static_cast<std::size_t>(k)];
  }
  AccuracyCounter overall() const;
};

/// Direction, target and predicate prediction for control micro-ops.
///
/// The simulator is trace driven and never fetches down a wrong path, so the
/// global history is advanced with the actual outcome at predict time; this
/// is what a repaired speculative history would contain. Tables are only
/// updated by train(), which callers invoke at commit.
class BranchPredictor {
 public:
  explicit BranchPredictor(PredictorConfig cfg);

  /// Throws std::invalid_argument for non-control ops, and for
  /// TRACE_EMBEDDED when the op carries no embedded prediction.
  Prediction predict(const MicroOp& op);
  void train(const MicroOp& op, const Prediction& p);

  std::uint64_t checkpoint() const { return history_; }
  void restore(std::uint64_t history) { history_ = history; }

  const PredictorAccuracy& accuracy() const { return accuracy_; }
  const PredictorConfig& config() const { return cfg_; }

 private:
  struct TaggedEntry {
    std::uint16_t tag = 0;
    std::int8_t ctr = 0;  // [-4, 3], taken when >= 0
    std::uint8_t useful = 0;
    bool valid = false;
  };
  static constexpr std::array<unsigned, 3> kTaggedHistory{4, 12, 32};

  bool predict_direction(const MicroOp& op, std::uint64_t history) const;
  void train_direction(const MicroOp& op, std::uint64_t history, bool taken);
  std::size_t gshare_index(Pc pc, std::uint64_t history) const;
  std::size_t tagged_index(std::size_t table, Pc pc, std::uint64_t history) const;
  std::uint16_t tagged_tag(std::size_t table, Pc pc, std::uint64_t history) const;
  std::optional<std::size_t> provider(Pc pc, std::uint64_t history) const;

  PredictorConfig cfg_;
  std::uint64_t history_ = 0;
  std::vector<std::uint8_t> counters_;  // gshare or base bimodal, 2-bit
  std::array<std::vector<TaggedEntry>, 3> tagged_;
  std::vector<std::int64_t> last_target_;
  std::vector<std::uint8_t> predicate_counters_;
  PredictorAccuracy accuracy_;
};

}  // namespace ineff

#endif  // INEFF_PREDICTOR_HPP
