#include "ineff/oracle.hpp"

#include <algorithm>
#include <numeric>

namespace ineff {

std::string_view to_string(PivotType t) {
  switch (t) {
    case PivotType::kC: return "C";
    case PivotType::kD: return "D";
    case PivotType::kCD: return "CD";
  }
  return "?";
}

std::optional<PivotType> pivot_type_from_string(std::string_view s) {
  if (s == "C" || s == "c") return PivotType::kC;
  if (s == "D" || s == "d") return PivotType::kD;
  if (s == "CD" || s == "cd") return PivotType::kCD;
  return std::nullopt;
}

std::size_t DependenceGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& s : succs) n += s.size();
  return n;
}

namespace {

std::set<Seq> closure(const std::vector<std::vector<Seq>>& adj, Seq start) {
  std::set<Seq> seen;
  std::vector<Seq> stack(adj[start].begin(), adj[start].end());
  while (!stack.empty()) {
    Seq n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    stack.insert(stack.end(), adj[n].begin(), adj[n].end());
  }
  return seen;
}

}  // namespace

std::set<Seq> DependenceGraph::input_cone(Seq node) const { return closure(preds, node); }
std::set<Seq> DependenceGraph::output_cone(Seq node) const { return closure(succs, node); }

DependenceGraph build_ddg(const Trace& trace) {
  DependenceGraph g;
  const std::size_t n = trace.size();
  g.preds.resize(n);
  g.succs.resize(n);
  g.live_out.assign(n, false);
  std::vector<std::optional<Seq>> last_writer;
  for (const auto& op : trace) {
    const Seq i = op.seq;
    for (RegIndex r : op.srcs) {
      if (r >= last_writer.size() || !last_writer[r]) continue;
      const Seq j = *last_writer[r];
      auto& p = g.preds[i];
      if (std::find(p.begin(), p.end(), j) != p.end()) continue;
      p.push_back(j);
      g.succs[j].push_back(i);
    }
    if (auto d = op.effective_dest()) {
      if (*d >= last_writer.size()) last_writer.resize(*d + 1u);
      last_writer[*d] = i;
    }
  }
  for (const auto& w : last_writer) {
    if (w) g.live_out[*w] = true;
  }
  return g;
}

std::vector<Pivot> oracle_pivots(const Trace& trace, PivotType type) {
  std::vector<Pivot> out;
  // Walk backwards tracking, per register, whether its next access is a write.
  enum class Next : std::uint8_t { kNone, kRead, kWrite };
  std::vector<Next> next;
  auto at = [&](RegIndex r) -> Next& {
    if (r >= next.size()) next.resize(r + 1u, Next::kNone);
    return next[r];
  };
  for (auto it = trace.rbegin(); it != trace.rend(); ++it) {
    const MicroOp& op = *it;
    const auto dest = op.effective_dest();
    bool pivot_c = false;
    bool pivot_d = false;
    switch (op.op_class) {
      case OpClass::kCondBranch:
      case OpClass::kIndirectJump:
        pivot_c = op.embedded_prediction_correct();
        break;
      case OpClass::kPredicatedAlu:
        pivot_c = op.embedded_prediction_correct() && op.ctrl->actual_pred_false;
        break;
      default:
        break;
    }
    if (dest && op.op_class != OpClass::kLoad) pivot_d = at(*dest) == Next::kWrite;
    if (pivot_c && admits(type, PivotKind::kControl)) out.push_back({op.seq, PivotKind::kControl});
    if (pivot_d && admits(type, PivotKind::kData)) out.push_back({op.seq, PivotKind::kData});
    // Reads happen before the write of the same op.
    if (dest) at(*dest) = Next::kWrite;
    for (RegIndex r : op.srcs) at(r) = Next::kRead;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<bool> ineffectual_mask(const Trace& trace, const DependenceGraph& ddg,
                                   const std::vector<Pivot>& pivots) {
  const std::size_t n = trace.size();
  std::vector<bool> pivot(n, false);
  for (const auto& p : pivots) pivot[p.seq] = true;
  std::vector<bool> inef(n, false);
  // Edges point forward in program order, so one reverse sweep reaches the
  // least fixed point: every successor is decided before its producer.
  for (std::size_t k = n; k-- > 0;) {
    if (pivot[k]) {
      inef[k] = true;
      continue;
    }
    const MicroOp& op = trace[k];
    if (is_memory(op.op_class) || !op.effective_dest() || ddg.live_out[k]) continue;
    const auto& s = ddg.succs[k];
    if (s.empty()) continue;
    inef[k] = std::all_of(s.begin(), s.end(), [&](Seq j) { return inef[j]; });
  }
  return inef;
}

std::vector<Seq> oracle_ineffectual(const Trace& trace, PivotType type) {
  const auto ddg = build_ddg(trace);
  const auto mask = ineffectual_mask(trace, ddg, oracle_pivots(trace, type));
  std::vector<Seq> out;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) out.push_back(i);
  }
  return out;
}

std::vector<IneffectualGraph> extract_graphs(const std::vector<Seq>& ineffectual,
                                             const DependenceGraph& ddg,
                                             const std::vector<Pivot>& pivots) {
  const std::size_t n = ddg.size();
  std::vector<bool> member(n, false);
  for (Seq s : ineffectual) member[s] = true;
  std::vector<bool> is_pivot(n, false);
  for (const auto& p : pivots) is_pivot[p.seq] = true;

  std::vector<Seq> parent(n);
  std::iota(parent.begin(), parent.end(), Seq{0});
  auto find = [&](Seq x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (Seq s : ineffectual) {
    for (Seq t : ddg.succs[s]) {
      if (!member[t]) continue;
      Seq a = find(s), b = find(t);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }

  std::vector<Seq> sorted = ineffectual;
  std::sort(sorted.begin(), sorted.end());
  std::vector<IneffectualGraph> graphs;
  std::vector<std::size_t> index_of(n, SIZE_MAX);
  for (Seq s : sorted) {
    const Seq root = find(s);
    if (index_of[root] == SIZE_MAX) {
      index_of[root] = graphs.size();
      graphs.emplace_back();
    }
    auto& g = graphs[index_of[root]];
    g.nodes.push_back(s);
    const auto& p = ddg.preds[s];
    if (std::none_of(p.begin(), p.end(), [&](Seq q) { return member[q]; })) g.roots.push_back(s);
    if (is_pivot[s]) g.pivots.push_back(s);
  }
  for (auto& g : graphs) {
    g.size = g.nodes.size();
    const Seq earliest_root = g.roots.empty() ? g.nodes.front() : g.roots.front();
    const Seq latest_pivot = g.pivots.empty() ? g.nodes.back() : g.pivots.back();
    g.span = latest_pivot >= earliest_root ? latest_pivot - earliest_root + 1 : 1;
  }
  return graphs;
}

void Histogram::add(std::uint64_t value) {
  if (value == 0) return;
  counts[value > 16 ? 16 : value - 1]++;
}

std::size_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::string_view Histogram::bucket_label(std::size_t bucket) {
  static constexpr std::array<std::string_view, kHistogramBuckets> kLabels{
      "1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12", "13", "14", "15", "16", ">16"};
  return kLabels.at(bucket);
}

GraphHistograms graph_histograms(const std::vector<IneffectualGraph>& graphs) {
  GraphHistograms h;
  for (const auto& g : graphs) {
    h.size.add(g.size);
    h.span.add(g.span);
  }
  return h;
}

Trace with_prediction_outcomes(const Trace& trace, const std::vector<std::uint8_t>& correct) {
  Trace out = trace;
  for (auto& op : out) {
    if (!op.ctrl) continue;
    const bool ok = op.seq < correct.size() && correct[op.seq];
    auto& c = *op.ctrl;
    switch (op.op_class) {
      case OpClass::kCondBranch:
        c.predicted_taken = ok ? c.actual_taken : !c.actual_taken;
        break;
      case OpClass::kIndirectJump:
        c.predicted_target = ok ? c.actual_target : c.actual_target + 1;
        break;
      case OpClass::kPredicatedAlu:
        c.predicted_pred_false = ok ? c.actual_pred_false : !c.actual_pred_false;
        break;
      default:
        break;
    }
  }
  return out;
}

}  // namespace ineff
