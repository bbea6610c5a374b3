#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ineff/config.hpp"
#include "ineff/harness.hpp"
#include "ineff/oracle.hpp"
#include "ineff/pipeline.hpp"
#include "ineff/trace.hpp"
#include "ineff/workloads.hpp"

namespace fs = std::filesystem;
using namespace ineff;

namespace {

// Options shared by every subcommand that consumes traces.
struct InputOptions {
  std::vector<std::string> traces;
  std::size_t synthetic = 0;  // number of generated traces when no file is given
  std::size_t count = 10000;
  std::uint64_t seed = 1;
  double mispredict = -1;  // negative: keep the generator default
};

struct ConfigOptions {
  std::string config_path;
  std::string mode;
  std::string pivot_type;
  std::string predictor;
  std::vector<std::string> settings;  // key=value
};

void add_input_options(CLI::App* app, InputOptions& in) {
  app->add_option("--trace", in.traces, "Trace file (repeatable)")->check(CLI::ExistingFile);
  app->add_option("--synthetic", in.synthetic, "Generate this many synthetic traces instead");
  app->add_option("--count", in.count, "Ops per generated trace")->check(CLI::PositiveNumber);
  app->add_option("--seed", in.seed, "Seed of the first generated trace");
  app->add_option("--mispredict", in.mispredict, "Misprediction rate of generated traces")
      ->check(CLI::Range(0.0, 1.0));
}

void add_config_options(CLI::App* app, ConfigOptions& c) {
  app->add_option("--config", c.config_path, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--mode", c.mode, "PROPOSED, BASELINE, PERFECT_IPIPE or ISO_RESOURCE");
  app->add_option("--pivot-type", c.pivot_type, "C, D or CD");
  app->add_option("--predictor", c.predictor, "PERFECT, TRACE_EMBEDDED, GSHARE or TAGGED_TABLE");
  app->add_option("--set", c.settings, "Override one config key (key=value, repeatable)");
}

PipelineConfig build_config(const ConfigOptions& c) {
  PipelineConfig cfg;
  if (!c.config_path.empty()) cfg = load_config(c.config_path);
  if (!c.mode.empty()) apply_setting(cfg, "mode", c.mode);
  if (!c.pivot_type.empty()) apply_setting(cfg, "pivot_type", c.pivot_type);
  if (!c.predictor.empty()) apply_setting(cfg, "predictor.kind", c.predictor);
  for (const auto& kv : c.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value: " + kv);
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

SynthParams synth_params(const InputOptions& in) {
  SynthParams p;
  p.count = in.count;
  if (in.mispredict >= 0) {
    p.branch_mispredict_rate = in.mispredict;
    p.predicate_mispredict_rate = in.mispredict;
    p.indirect_mispredict_rate = in.mispredict;
  }
  return p;
}

std::vector<NamedTrace> load_inputs(const InputOptions& in) {
  std::vector<NamedTrace> out;
  for (const auto& path : in.traces) {
    out.push_back({fs::path(path).filename().string(), load_trace_file(path)});
  }
  std::size_t n = in.synthetic;
  if (out.empty() && n == 0) n = 1;
  const SynthParams p = synth_params(in);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t seed = in.seed + i;
    out.push_back({"synthetic_seed" + std::to_string(seed), generate_synthetic(p, seed)});
  }
  return out;
}

std::string out_path(const std::string& given, const std::string& name) {
  if (!given.empty()) return given;
  return (fs::path(default_out_dir()) / name).string();
}

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

int report_rows(const std::vector<RunRow>& rows, const std::string& csv) {
  {
    auto f = open_out(csv);
    write_csv(f, rows);
  }
  int failures = 0;
  for (const auto& r : rows) {
    if (!r.result) {
      std::cerr << r.trace << " / " << r.variant << ": " << r.error << '\n';
      ++failures;
      continue;
    }
    const auto& s = r.result->stats;
    std::cout << r.trace << " / " << r.variant << ": cycles=" << s.cycles << " ipc=" << s.ipc()
              << " ineffectual=" << s.ineffectual_fraction() << " rollbacks=" << s.rollbacks();
    if (auto sp = r.speedup()) std::cout << " speedup=" << *sp;
    if (!s.assertions_held()) {
      std::cout << " ASSERTION FAILED";
      ++failures;
    }
    std::cout << '\n';
  }
  std::cout << "wrote " << csv << '\n';
  return failures ? 1 : 0;
}

// gen -------------------------------------------------------------------------------

struct GenOptions {
  std::string kind = "synthetic";
  std::size_t count = 10000;
  std::uint64_t seed = 1;
  std::string out;
  SynthParams synth;
  std::vector<std::size_t> inject{30, 10, 10};
};

int run_gen(const GenOptions& g) {
  Trace t;
  if (g.kind == "synthetic") {
    SynthParams p = g.synth;
    p.count = g.count;
    t = generate_synthetic(p, g.seed);
  } else if (g.kind == "cmp-branch") {
    t = generate_synthetic(cmp_branch_params(g.count), g.seed);
  } else if (g.kind == "speedup") {
    t = speedup_workload(g.count);
  } else if (g.kind == "bottleneck") {
    t = bottleneck_workload(g.count);
  } else if (g.kind == "injected") {
    if (g.inject.size() != kNumControlKinds) throw std::invalid_argument("--inject needs 3 counts");
    t = injected_workload(g.count, {g.inject[0], g.inject[1], g.inject[2]}).trace;
  } else {
    throw std::invalid_argument("unknown workload kind " + g.kind);
  }
  if (g.out == "-") {
    emit_trace(t, std::cout);
    return 0;
  }
  const std::string path = out_path(g.out, "trace.txt");
  auto f = open_out(path);
  emit_trace(t, f);
  std::cout << "wrote " << t.size() << " ops to " << path << '\n';
  return 0;
}

// sim / sweep -----------------------------------------------------------------------

struct SimOptionsCli {
  InputOptions in;
  ConfigOptions cfg;
  std::string out;
  std::string debug_tags;
  std::string cycle_log;
  bool no_baseline = false;
  unsigned jobs = 0;
};

int run_sim(const SimOptionsCli& o) {
  const PipelineConfig cfg = build_config(o.cfg);
  ExperimentSpec spec;
  spec.traces = load_inputs(o.in);
  spec.variants = {{std::string(to_string(cfg.mode)), cfg}};
  spec.with_baseline = !o.no_baseline && !cfg.single_cluster();
  spec.jobs = o.jobs;
  spec.options.record_tags = !o.debug_tags.empty();

  std::optional<std::ofstream> cycles;
  if (!o.cycle_log.empty()) {
    if (spec.traces.size() != 1) throw std::invalid_argument("--cycle-log needs a single trace");
    cycles.emplace(open_out(o.cycle_log));
    spec.options.cycle_log = &*cycles;
    spec.jobs = 1;
  }
  const auto rows = run_experiments(spec);
  if (!o.debug_tags.empty()) {
    auto f = open_out(o.debug_tags);
    std::vector<TagRecord> all;
    for (const auto& r : rows) {
      if (r.result && r.variant != "baseline") {
        all.insert(all.end(), r.result->tag_log.begin(), r.result->tag_log.end());
      }
    }
    write_tag_log(f, all);
  }
  return report_rows(rows, out_path(o.out, "sim.csv"));
}

struct SweepOptions {
  SimOptionsCli sim;
  bool pivots = false;
};

int run_sweep(const SweepOptions& o) {
  const PipelineConfig cfg = build_config(o.sim.cfg);
  ExperimentSpec spec;
  spec.traces = load_inputs(o.sim.in);
  PipelineConfig split = cfg;
  if (split.single_cluster()) split.mode = Mode::kProposed;
  spec.variants = sweep_variants(split);
  if (o.pivots) {
    for (auto& v : pivot_variants(split)) spec.variants.push_back(std::move(v));
  }
  spec.jobs = o.sim.jobs;
  return report_rows(run_experiments(spec), out_path(o.sim.out, "sweep.csv"));
}

// analyze ---------------------------------------------------------------------------

struct AnalyzeOptions {
  InputOptions in;
  std::string pivot_type = "CD";
  unsigned window = 80;
  std::string out;
};

int run_analyze(const AnalyzeOptions& o) {
  const auto type = pivot_type_from_string(o.pivot_type);
  if (!type) throw std::invalid_argument("unknown pivot type " + o.pivot_type);
  const fs::path dir = o.out.empty() ? fs::path(default_out_dir()) : fs::path(o.out);
  for (const auto& t : load_inputs(o.in)) {
    const AnalysisReport r = analyze(t.trace, o.window, *type);
    const std::string stem = t.label + "_";
    {
      auto f = open_out((dir / (stem + "analysis.csv")).string());
      write_analysis_summary(f, r);
    }
    {
      auto f = open_out((dir / (stem + "histograms.csv")).string());
      write_histograms(f, r);
    }
    std::cout << t.label << ": ops=" << r.ops << " ineffectual=" << r.ineffectual
              << " fraction=" << r.fraction() << " control_pivots=" << r.control_pivots
              << " data_pivots=" << r.data_pivots << " graphs=" << r.graphs
              << " detector_tagged(W=" << r.window_size << ")=" << r.detector_tagged << '\n';
  }
  std::cout << "wrote reports to " << dir.string() << '\n';
  return 0;
}

// check -----------------------------------------------------------------------------

struct CheckOptions {
  InputOptions in;
  ConfigOptions cfg;
  std::string out;
};

int run_check(const CheckOptions& o) {
  const PipelineConfig cfg = build_config(o.cfg);
  const fs::path dir = o.out.empty() ? fs::path(default_out_dir()) : fs::path(o.out);
  auto summary = open_out((dir / "check.csv").string());
  auto misses = open_out((dir / "misses.csv").string());
  summary << "trace,ops,detector,oracle,violations,coverage,state_match";
  for (std::size_t k = 0; k <= static_cast<std::size_t>(MissReason::kDiscardedPredecessor); ++k) {
    summary << ",miss_" << to_string(static_cast<MissReason>(k));
  }
  summary << '\n';
  misses << "trace,seq,reason\n";

  int failures = 0;
  for (const auto& t : load_inputs(o.in)) {
    const SimResult sim = simulate(t.trace, cfg);
    const Trace replay = with_prediction_outcomes(t.trace, sim.prediction_correct);
    const ContainmentReport r =
        compare_sets(replay, sim.tagged, cfg.window_size, cfg.pivot_type);
    const bool state_ok = sim.final_state == reference_execute(t.trace, RegisterSpace{cfg.arch_regs});
    std::array<std::size_t, 6> counts{};
    for (const auto& m : r.misses) {
      counts[static_cast<std::size_t>(m.reason)]++;
      misses << t.label << ',' << m.seq << ',' << to_string(m.reason) << '\n';
    }
    summary << t.label << ',' << r.ops << ',' << r.detector << ',' << r.oracle << ','
            << r.violations.size() << ',' << r.coverage() << ',' << (state_ok ? 1 : 0);
    for (auto c : counts) summary << ',' << c;
    summary << '\n';
    const bool ok = r.contained() && state_ok && sim.stats.assertions_held();
    failures += !ok;
    std::cout << t.label << ": detector=" << r.detector << " oracle=" << r.oracle
              << " violations=" << r.violations.size() << " coverage=" << r.coverage()
              << (state_ok ? "" : " STATE MISMATCH") << (ok ? " ok" : " FAIL") << '\n';
  }
  std::cout << "wrote " << (dir / "check.csv").string() << '\n';
  return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cycle-level simulator for detecting and offloading ineffectual micro-ops"};
  app.require_subcommand(1);

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a synthetic or crafted trace");
  gen_cmd->add_option("--kind", gen.kind, "synthetic, cmp-branch, speedup, bottleneck, injected")
      ->check(CLI::IsMember({"synthetic", "cmp-branch", "speedup", "bottleneck", "injected"}));
  gen_cmd->add_option("--count", gen.count, "Number of ops")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--out", gen.out, "Output file, '-' for stdout");
  gen_cmd->add_option("--body-size", gen.synth.body_size, "Static loop body length");
  gen_cmd->add_option("--cmp-branch", gen.synth.cmp_branch_fraction, "Fraction in CMP/BR pairs");
  gen_cmd->add_option("--branch-mispredict", gen.synth.branch_mispredict_rate);
  gen_cmd->add_option("--dead-write", gen.synth.dead_write_fraction, "Fraction of dead writes");
  gen_cmd->add_option("--predicated", gen.synth.predicated_fraction);
  gen_cmd->add_option("--predicate-false", gen.synth.predicate_false_rate);
  gen_cmd->add_option("--predicate-mispredict", gen.synth.predicate_mispredict_rate);
  gen_cmd->add_option("--indirect", gen.synth.indirect_fraction);
  gen_cmd->add_option("--indirect-mispredict", gen.synth.indirect_mispredict_rate);
  gen_cmd->add_option("--load", gen.synth.load_fraction);
  gen_cmd->add_option("--store", gen.synth.store_fraction);
  gen_cmd->add_option("--max-latency", gen.synth.max_latency);
  gen_cmd->add_flag("!--no-predictions", gen.synth.embed_predictions, "Omit embedded predictions");
  gen_cmd->add_option("--inject", gen.inject, "Injected mispredictions: branch pred indirect")
      ->expected(3);

  SimOptionsCli sim;
  auto* sim_cmd = app.add_subcommand("sim", "Simulate traces and write a CSV row per run");
  add_input_options(sim_cmd, sim.in);
  add_config_options(sim_cmd, sim.cfg);
  sim_cmd->add_option("--out", sim.out, "CSV path");
  sim_cmd->add_option("--debug-tags", sim.debug_tags, "Write every tag record to this CSV");
  sim_cmd->add_option("--cycle-log", sim.cycle_log, "Write a per-cycle CSV");
  sim_cmd->add_flag("--no-baseline", sim.no_baseline, "Skip the baseline run");
  sim_cmd->add_option("--jobs", sim.jobs, "Parallel runs (0: all cores)");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "I-pipe width by I-RS size grid plus baseline");
  add_input_options(sweep_cmd, sweep.sim.in);
  add_config_options(sweep_cmd, sweep.sim.cfg);
  sweep_cmd->add_option("--out", sweep.sim.out, "CSV path");
  sweep_cmd->add_flag("--pivot-types", sweep.pivots, "Also run pivot types C, D and CD");
  sweep_cmd->add_option("--jobs", sweep.sim.jobs, "Parallel runs (0: all cores)");

  AnalyzeOptions an;
  auto* an_cmd = app.add_subcommand("analyze", "Oracle statistics and graph histograms");
  add_input_options(an_cmd, an.in);
  an_cmd->add_option("--pivot-type", an.pivot_type, "C, D or CD");
  an_cmd->add_option("--window", an.window, "Detector window size")->check(CLI::PositiveNumber);
  an_cmd->add_option("--out", an.out, "Output directory");

  CheckOptions chk;
  auto* chk_cmd = app.add_subcommand("check", "Detector tags against the oracle");
  add_input_options(chk_cmd, chk.in);
  add_config_options(chk_cmd, chk.cfg);
  chk_cmd->add_option("--out", chk.out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) return run_gen(gen);
    if (*sim_cmd) return run_sim(sim);
    if (*sweep_cmd) return run_sweep(sweep);
    if (*an_cmd) return run_analyze(an);
    if (*chk_cmd) return run_check(chk);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
