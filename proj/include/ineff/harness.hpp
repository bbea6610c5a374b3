#ifndef INEFF_HARNESS_HPP
#define INEFF_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ineff/config.hpp"
#include "ineff/oracle.hpp"
#include "ineff/pipeline.hpp"
#include "ineff/trace.hpp"

namespace ineff {

struct NamedTrace {
  std::string label;
  Trace trace;
};

struct Variant {
  std::string label;
  PipelineConfig config;
};

struct ExperimentSpec {
  std::vector<NamedTrace> traces;
  std::vector<Variant> variants;
  // Adds a BASELINE run per trace, sharing the first variant's primary
  // cluster and predictor, and fills the speedup column.
  bool with_baseline = true;
  unsigned jobs = 0;  // 0: hardware concurrency
  SimOptions options;
};

struct RunRow {
  std::string trace;
  std::string variant;
  PipelineConfig config;
  std::optional<SimResult> result;  // empty when the run failed
  std::string error;
  std::optional<std::uint64_t> baseline_cycles;

  std::optional<double> speedup() const;
  bool ok() const { return result && result->stats.assertions_held(); }
};

/// Runs every (trace, variant) pair, in parallel when jobs allow. Rows are
/// ordered by trace, then baseline, then variants in spec order.
std::vector<RunRow> run_experiments(const ExperimentSpec& spec);

/// 3 x 3 grid of I-pipe width {2,4,8} by I-RS size {64,128,256}.
std::vector<Variant> sweep_variants(const PipelineConfig& base);

/// One variant per pivot type C, D and CD.
std::vector<Variant> pivot_variants(const PipelineConfig& base);

std::vector<std::string> csv_columns();
void write_csv(std::ostream& out, const std::vector<RunRow>& rows);

// Oracle analysis ---------------------------------------------------------------

struct AnalysisReport {
  std::size_t ops = 0;
  std::size_t ineffectual = 0;
  std::size_t control_pivots = 0;
  std::size_t data_pivots = 0;
  std::size_t graphs = 0;
  GraphHistograms oracle;
  unsigned window_size = 0;
  std::size_t detector_tagged = 0;
  std::size_t detector_graphs = 0;
  GraphHistograms detector;

  double fraction() const {
    return ops ? static_cast<double>(ineffectual) / static_cast<double>(ops) : 0.0;
  }
};

AnalysisReport analyze(const Trace& trace, unsigned window_size, PivotType type = PivotType::kCD);
void write_analysis_summary(std::ostream& out, const AnalysisReport& r);
/// Columns: source,histogram,bucket,count.
void write_histograms(std::ostream& out, const AnalysisReport& r);

// Detector vs oracle --------------------------------------------------------------

enum class MissReason : std::uint8_t {
  kPivotNotAnalyzed,      // never reached the analysed middle window
  kPivotNotMarked,        // overwrite came too late for the producer map
  kOutOfWindowSuccessor,  // a consumer lies beyond the analysed region
  kMissingOverwrite,      // the overwrite of its result lies beyond the region
  kUntaggedSuccessor,     // some consumer was itself missed
  kDiscardedPredecessor,  // consumers were tagged only after it left the buffer
};

std::string_view to_string(MissReason r);

struct Miss {
  Seq seq = 0;
  MissReason reason = MissReason::kUntaggedSuccessor;
};

struct ContainmentReport {
  std::size_t ops = 0;
  std::size_t detector = 0;
  std::size_t oracle = 0;
  std::vector<Seq> violations;  // tagged by the detector, not ineffectual
  std::vector<Miss> misses;     // ineffectual, never tagged

  bool contained() const { return violations.empty(); }
  double coverage() const {
    return oracle ? static_cast<double>(detector - violations.size()) / static_cast<double>(oracle)
                  : 1.0;
  }
};

/// Compares a set of detector tags with the oracle on `trace`, whose
/// embedded predictions must already reflect the outcomes the detector saw.
ContainmentReport compare_sets(const Trace& trace, const std::vector<std::uint8_t>& tagged,
                               unsigned window_size, PivotType type);

/// Simulates `trace` and checks the pipeline's detector against the oracle
/// replayed with the pipeline's committed prediction outcomes.
ContainmentReport compare_detector_oracle(const Trace& trace, const PipelineConfig& config);

void write_containment(std::ostream& out, const ContainmentReport& r);

/// Writes `seq,pc,tag,pivot_kind,discovery_rank` rows for every record.
void write_tag_log(std::ostream& out, const std::vector<TagRecord>& log);

/// Output directory from INEFFSIM_OUT_DIR, else the working directory.
std::string default_out_dir();

}  // namespace ineff

#endif  // INEFF_HARNESS_HPP
