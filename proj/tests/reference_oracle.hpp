// Definition-level ineffectuality oracle used to cross-check the library.
// Deliberately naive: forward scans and fixed-point iteration, no shared code.
#ifndef INEFF_TESTS_REFERENCE_ORACLE_HPP
#define INEFF_TESTS_REFERENCE_ORACLE_HPP

#include <algorithm>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "ineff/oracle.hpp"
#include "ineff/trace.hpp"

namespace ineff::ref {

inline Trace load_fixture(const std::string& name) {
  return load_trace_file(std::string(INEFF_TEST_DATA) + "/" + name);
}

inline bool reads_reg(const MicroOp& op, RegIndex r) {
  return std::find(op.srcs.begin(), op.srcs.end(), r) != op.srcs.end();
}

// Consumers of op i's result, plus whether the value survives to the end.
struct Uses {
  std::vector<Seq> consumers;
  bool overwritten = false;
};

inline Uses uses_of(const Trace& t, Seq i) {
  Uses u;
  const auto d = t[i].effective_dest();
  if (!d) return u;
  for (Seq j = i + 1; j < t.size(); ++j) {
    if (reads_reg(t[j], *d)) u.consumers.push_back(j);
    if (t[j].effective_dest() == d) {
      u.overwritten = true;
      break;
    }
  }
  return u;
}

inline bool is_control_pivot(const MicroOp& op) {
  if (!op.embedded_prediction_correct()) return false;
  if (op.op_class == OpClass::kPredicatedAlu) return op.ctrl->actual_pred_false;
  return op.op_class == OpClass::kCondBranch || op.op_class == OpClass::kIndirectJump;
}

inline bool is_data_pivot(const Trace& t, Seq i) {
  if (t[i].op_class == OpClass::kLoad) return false;
  const Uses u = uses_of(t, i);
  return u.overwritten && u.consumers.empty();
}

inline std::set<Seq> reference_ineffectual(const Trace& t, PivotType type = PivotType::kCD) {
  std::vector<bool> inef(t.size(), false);
  for (Seq i = 0; i < t.size(); ++i) {
    if (admits(type, PivotKind::kControl) && is_control_pivot(t[i])) inef[i] = true;
    if (admits(type, PivotKind::kData) && is_data_pivot(t, i)) inef[i] = true;
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (Seq i = 0; i < t.size(); ++i) {
      if (inef[i] || is_memory(t[i].op_class) || !t[i].effective_dest()) continue;
      const Uses u = uses_of(t, i);
      if (!u.overwritten || u.consumers.empty()) continue;
      if (std::all_of(u.consumers.begin(), u.consumers.end(), [&](Seq j) { return inef[j]; })) {
        inef[i] = true;
        changed = true;
      }
    }
  }
  std::set<Seq> out;
  for (Seq i = 0; i < t.size(); ++i) {
    if (inef[i]) out.insert(i);
  }
  return out;
}

}  // namespace ineff::ref

#endif
