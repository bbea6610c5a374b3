#include "ineff/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdlib>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "ineff/detection.hpp"

namespace ineff {

std::optional<double> RunRow::speedup() const {
  if (!baseline_cycles || !result || result->stats.cycles == 0) return std::nullopt;
  return static_cast<double>(*baseline_cycles) / static_cast<double>(result->stats.cycles);
}

namespace {

struct Job {
  std::size_t trace;
  std::string label;
  PipelineConfig config;
};

PipelineConfig baseline_of(const PipelineConfig& c) {
  PipelineConfig b = c;
  b.mode = Mode::kBaseline;
  return b;
}

}  // namespace

std::vector<RunRow> run_experiments(const ExperimentSpec& spec) {
  std::vector<Job> jobs;
  for (std::size_t t = 0; t < spec.traces.size(); ++t) {
    if (spec.with_baseline && !spec.variants.empty()) {
      jobs.push_back({t, "baseline", baseline_of(spec.variants.front().config)});
    }
    for (const auto& v : spec.variants) jobs.push_back({t, v.label, v.config});
  }

  std::vector<RunRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const Job& j = jobs[i];
      RunRow& row = rows[i];
      row.trace = spec.traces[j.trace].label;
      row.variant = j.label;
      row.config = j.config;
      try {
        row.result = simulate(spec.traces[j.trace].trace, j.config, spec.options);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  unsigned n = spec.jobs ? spec.jobs : std::max(1u, std::thread::hardware_concurrency());
  n = static_cast<unsigned>(std::min<std::size_t>(n, jobs.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Attach each trace's baseline cycles to its rows.
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].variant != "baseline" || !spec.with_baseline || !rows[i].result) continue;
    for (std::size_t k = i; k < rows.size() && jobs[k].trace == jobs[i].trace; ++k) {
      rows[k].baseline_cycles = rows[i].result->stats.cycles;
    }
  }
  return rows;
}

std::vector<Variant> sweep_variants(const PipelineConfig& base) {
  std::vector<Variant> out;
  for (unsigned w : {2u, 4u, 8u}) {
    for (unsigned irs : {64u, 128u, 256u}) {
      PipelineConfig c = base;
      c.ipipe_width = w;
      c.irs_entries = irs;
      out.push_back({"w" + std::to_string(w) + "_irs" + std::to_string(irs), c});
    }
  }
  return out;
}

std::vector<Variant> pivot_variants(const PipelineConfig& base) {
  std::vector<Variant> out;
  for (PivotType t : {PivotType::kC, PivotType::kD, PivotType::kCD}) {
    PipelineConfig c = base;
    c.pivot_type = t;
    out.push_back({"pivot_" + std::string(to_string(t)), c});
  }
  return out;
}

std::vector<std::string> csv_columns() {
  return {"trace",          "variant",          "mode",
          "pivot_type",     "predictor",        "window_size",
          "ipipe_width",    "irs_entries",      "cycles",
          "committed",      "ipc",              "ineffectual_committed",
          "ineffectual_fraction", "tagged_fraction", "steered",
          "type_a_branch",  "type_a_predicate", "type_a_indirect",
          "type_b",         "rollbacks",        "mpki",
          "mpki_branch",    "mpki_predicate",   "mpki_indirect",
          "bottleneck_flushes", "effectual_redirects", "ipipe_issue_rate",
          "iprf_write_conflicts", "branch_accuracy", "predicate_accuracy",
          "indirect_accuracy", "irs_occupancy",  "assertions_ok",
          "baseline_cycles", "speedup",         "error"};
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << v;
  return os.str();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

std::string accuracy_cell(const SimStats& s, ControlKind k) {
  const auto& a = s.accuracy[k];
  return a.total() ? fmt(a.accuracy()) : "";
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<RunRow>& rows) {
  const auto cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& row : rows) {
    std::vector<std::string> v;
    const PipelineConfig& c = row.config;
    v.push_back(csv_escape(row.trace));
    v.push_back(csv_escape(row.variant));
    v.emplace_back(to_string(c.mode));
    v.emplace_back(to_string(c.pivot_type));
    v.emplace_back(c.predictor_kind_set ? to_string(c.predictor.kind) : "default");
    v.push_back(std::to_string(c.window_size));
    v.push_back(c.single_cluster() ? "" : std::to_string(c.ipipe_width));
    v.push_back(c.single_cluster() ? "" : std::to_string(c.irs_entries));
    if (row.result) {
      const SimStats& s = row.result->stats;
      v.push_back(std::to_string(s.cycles));
      v.push_back(std::to_string(s.committed));
      v.push_back(fmt(s.ipc()));
      v.push_back(std::to_string(s.committed_ineffectual));
      v.push_back(fmt(s.ineffectual_fraction()));
      v.push_back(fmt(row.result->tagged_fraction()));
      v.push_back(std::to_string(s.steered));
      for (auto a : s.type_a) v.push_back(std::to_string(a));
      v.push_back(std::to_string(s.type_b));
      v.push_back(std::to_string(s.rollbacks()));
      v.push_back(fmt(s.mpki()));
      v.push_back(fmt(s.mpki(ControlKind::kBranch)));
      v.push_back(fmt(s.mpki(ControlKind::kPredicate)));
      v.push_back(fmt(s.mpki(ControlKind::kIndirect)));
      v.push_back(std::to_string(s.bottleneck_flushes));
      v.push_back(std::to_string(s.effectual_redirects));
      v.push_back(c.single_cluster() ? "" : fmt(s.ipipe_issue_rate()));
      v.push_back(std::to_string(s.iprf_write_conflicts));
      v.push_back(accuracy_cell(s, ControlKind::kBranch));
      v.push_back(accuracy_cell(s, ControlKind::kPredicate));
      v.push_back(accuracy_cell(s, ControlKind::kIndirect));
      std::string occ;
      if (!c.single_cluster()) {
        for (std::size_t k = 0; k < s.irs_occupancy.size(); ++k) {
          occ += (k ? ";" : "") + std::to_string(s.irs_occupancy[k]);
        }
      }
      v.push_back(occ);
      v.push_back(s.assertions_held() ? "1" : "0");
    } else {
      v.resize(v.size() + 25);
    }
    v.push_back(row.baseline_cycles ? std::to_string(*row.baseline_cycles) : "");
    auto sp = row.speedup();
    v.push_back(sp ? fmt(*sp) : "");
    v.push_back(csv_escape(row.error));
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
    out << '\n';
  }
}

AnalysisReport analyze(const Trace& trace, unsigned window_size, PivotType type) {
  AnalysisReport r;
  r.ops = trace.size();
  r.window_size = window_size;
  const auto ddg = build_ddg(trace);
  const auto pivots = oracle_pivots(trace, type);
  for (const auto& p : pivots) (p.kind == PivotKind::kControl ? r.control_pivots : r.data_pivots)++;
  const auto mask = ineffectual_mask(trace, ddg, pivots);
  std::vector<Seq> inef;
  for (Seq s = 0; s < mask.size(); ++s) {
    if (mask[s]) inef.push_back(s);
  }
  r.ineffectual = inef.size();
  const auto graphs = extract_graphs(inef, ddg, pivots);
  r.graphs = graphs.size();
  r.oracle = graph_histograms(graphs);

  const auto tagged = detect_stream(trace, window_size, type, RegisterSpace{});
  r.detector_tagged = tagged.size();
  const auto det_graphs = extract_graphs(tagged, ddg, pivots);
  r.detector_graphs = det_graphs.size();
  r.detector = graph_histograms(det_graphs);
  return r;
}

void write_analysis_summary(std::ostream& out, const AnalysisReport& r) {
  out << "metric,value\n"
      << "ops," << r.ops << '\n'
      << "ineffectual," << r.ineffectual << '\n'
      << "ineffectual_fraction," << fmt(r.fraction()) << '\n'
      << "control_pivots," << r.control_pivots << '\n'
      << "data_pivots," << r.data_pivots << '\n'
      << "graphs," << r.graphs << '\n'
      << "window_size," << r.window_size << '\n'
      << "detector_tagged," << r.detector_tagged << '\n'
      << "detector_graphs," << r.detector_graphs << '\n';
}

void write_histograms(std::ostream& out, const AnalysisReport& r) {
  out << "source,histogram,bucket,count\n";
  auto emit = [&](const char* src, const char* name, const Histogram& h) {
    for (std::size_t b = 0; b < kHistogramBuckets; ++b) {
      out << src << ',' << name << ',' << Histogram::bucket_label(b) << ',' << h.counts[b] << '\n';
    }
  };
  emit("oracle", "size", r.oracle.size);
  emit("oracle", "span", r.oracle.span);
  emit("detector", "size", r.detector.size);
  emit("detector", "span", r.detector.span);
}

std::string_view to_string(MissReason r) {
  switch (r) {
    case MissReason::kPivotNotAnalyzed: return "pivot_not_analyzed";
    case MissReason::kPivotNotMarked: return "pivot_not_marked";
    case MissReason::kOutOfWindowSuccessor: return "out_of_window_successor";
    case MissReason::kMissingOverwrite: return "missing_overwrite";
    case MissReason::kUntaggedSuccessor: return "untagged_successor";
    case MissReason::kDiscardedPredecessor: return "discarded_predecessor";
  }
  return "?";
}

ContainmentReport compare_sets(const Trace& trace, const std::vector<std::uint8_t>& tagged,
                               unsigned window_size, PivotType type) {
  ContainmentReport r;
  r.ops = trace.size();
  const auto ddg = build_ddg(trace);
  const auto pivots = oracle_pivots(trace, type);
  const auto mask = ineffectual_mask(trace, ddg, pivots);
  std::vector<bool> is_pivot(trace.size(), false);
  for (const auto& p : pivots) is_pivot[p.seq] = true;

  // Middle windows analysed so far cover [W, (k + 2) W) after k identifications.
  const Seq w = window_size;
  const std::size_t idents = trace.size() >= 3 * w ? trace.size() / w - 2 : 0;
  const Seq analysed_end = idents ? (idents + 1) * w : 0;

  // Distance from each op to the next write of its destination.
  std::vector<Seq> next_write(trace.size(), SIZE_MAX);
  std::vector<Seq> last(kDefaultArchRegs + 64, SIZE_MAX);
  for (Seq s = trace.size(); s-- > 0;) {
    if (auto d = trace[s].effective_dest()) {
      if (*d >= last.size()) last.resize(*d + 1u, SIZE_MAX);
      next_write[s] = last[*d];
      last[*d] = s;
    }
  }

  for (Seq s = 0; s < trace.size(); ++s) {
    const bool det = s < tagged.size() && tagged[s];
    r.detector += det;
    r.oracle += mask[s];
    if (det && !mask[s]) r.violations.push_back(s);
    if (!mask[s] || det) continue;
    MissReason why;
    const auto& succ = ddg.succs[s];
    if (is_pivot[s]) {
      why = s >= analysed_end ? MissReason::kPivotNotAnalyzed : MissReason::kPivotNotMarked;
    } else if (std::any_of(succ.begin(), succ.end(), [&](Seq j) { return j >= s + 2 * w; })) {
      why = MissReason::kOutOfWindowSuccessor;
    } else if (next_write[s] == SIZE_MAX || next_write[s] >= s + 2 * w) {
      why = MissReason::kMissingOverwrite;
    } else if (std::any_of(succ.begin(), succ.end(),
                           [&](Seq j) { return j >= tagged.size() || !tagged[j]; })) {
      why = MissReason::kUntaggedSuccessor;
    } else {
      why = MissReason::kDiscardedPredecessor;
    }
    r.misses.push_back({s, why});
  }
  return r;
}

ContainmentReport compare_detector_oracle(const Trace& trace, const PipelineConfig& config) {
  const SimResult sim = simulate(trace, config);
  const Trace replay = with_prediction_outcomes(trace, sim.prediction_correct);
  return compare_sets(replay, sim.tagged, config.window_size, config.pivot_type);
}

void write_containment(std::ostream& out, const ContainmentReport& r) {
  out << "metric,value\n"
      << "ops," << r.ops << '\n'
      << "detector," << r.detector << '\n'
      << "oracle," << r.oracle << '\n'
      << "contained," << (r.contained() ? 1 : 0) << '\n'
      << "violations," << r.violations.size() << '\n'
      << "coverage," << fmt(r.coverage()) << '\n';
  std::array<std::size_t, 6> counts{};
  for (const auto& m : r.misses) counts[static_cast<std::size_t>(m.reason)]++;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out << "miss_" << to_string(static_cast<MissReason>(k)) << ',' << counts[k] << '\n';
  }
}

void write_tag_log(std::ostream& out, const std::vector<TagRecord>& log) {
  out << "seq,pc,tag,pivot_kind,discovery_rank\n";
  for (const auto& t : log) {
    out << t.seq << ',' << t.pc << ",1,";
    if (t.pivot_kind) out << (*t.pivot_kind == PivotKind::kControl ? "control" : "data");
    out << ',' << t.rank << '\n';
  }
}

std::string default_out_dir() {
  const char* env = std::getenv("INEFFSIM_OUT_DIR");
  return env && *env ? env : ".";
}

}  // namespace ineff
