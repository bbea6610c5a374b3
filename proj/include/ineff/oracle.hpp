#ifndef INEFF_ORACLE_HPP
#define INEFF_ORACLE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string_view>
#include <vector>

#include "ineff/trace.hpp"

namespace ineff {

enum class PivotKind : std::uint8_t {
  kControl,  // correctly predicted branch, predicate or indirect target
  kData,     // result overwritten before any use
};

/// Which pivot kinds seed ineffectuality.
enum class PivotType : std::uint8_t { kC, kD, kCD };

std::string_view to_string(PivotType t);
std::optional<PivotType> pivot_type_from_string(std::string_view s);

inline bool admits(PivotType t, PivotKind k) {
  return t == PivotType::kCD || (t == PivotType::kC) == (k == PivotKind::kControl);
}

struct Pivot {
  Seq seq;
  PivotKind kind;
  bool operator==(const Pivot&) const = default;
};

/// Register dependence graph over a whole trace. Node ids are trace seqs.
struct DependenceGraph {
  std::vector<std::vector<Seq>> preds;
  std::vector<std::vector<Seq>> succs;
  // The node's result is still architecturally visible at the end of the trace.
  std::vector<bool> live_out;

  std::size_t size() const { return preds.size(); }
  std::size_t edge_count() const;
  std::set<Seq> input_cone(Seq node) const;
  std::set<Seq> output_cone(Seq node) const;
};

DependenceGraph build_ddg(const Trace& trace);

/// Pivots under the trace's embedded predictions; an op without an embedded
/// prediction is never a control pivot.
std::vector<Pivot> oracle_pivots(const Trace& trace, PivotType type = PivotType::kCD);

/// Least fixed point seeded by `pivots`, as a per-seq mask.
std::vector<bool> ineffectual_mask(const Trace& trace, const DependenceGraph& ddg,
                                   const std::vector<Pivot>& pivots);

std::vector<Seq> oracle_ineffectual(const Trace& trace, PivotType type = PivotType::kCD);

struct IneffectualGraph {
  std::vector<Seq> nodes;  // ascending
  std::vector<Seq> roots;
  std::vector<Seq> pivots;
  std::size_t size = 0;
  std::uint64_t span = 0;
};

/// Connected components of the subgraph induced by `ineffectual`, ordered by
/// their earliest node.
std::vector<IneffectualGraph> extract_graphs(const std::vector<Seq>& ineffectual,
                                             const DependenceGraph& ddg,
                                             const std::vector<Pivot>& pivots);

inline constexpr std::size_t kHistogramBuckets = 17;  // 1..16, then >16

struct Histogram {
  std::array<std::size_t, kHistogramBuckets> counts{};
  void add(std::uint64_t value);
  std::size_t total() const;
  static std::string_view bucket_label(std::size_t bucket);
};

struct GraphHistograms {
  Histogram size;
  Histogram span;
};

GraphHistograms graph_histograms(const std::vector<IneffectualGraph>& graphs);

/// Replaces every control op's embedded prediction; `correct[seq]` selects
/// whether the op was predicted correctly. Used to replay pipeline outcomes.
Trace with_prediction_outcomes(const Trace& trace, const std::vector<std::uint8_t>& correct);

}  // namespace ineff

#endif  // INEFF_ORACLE_HPP
