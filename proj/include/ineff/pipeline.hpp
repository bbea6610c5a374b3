#ifndef INEFF_PIPELINE_HPP
#define INEFF_PIPELINE_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "ineff/config.hpp"
#include "ineff/detection.hpp"
#include "ineff/predictor.hpp"
#include "ineff/trace.hpp"

namespace ineff {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Counts consecutive cycles in which rename stalled on a full I-RS and
/// fires once the run reaches the threshold.
class BottleneckMonitor {
 public:
  explicit BottleneckMonitor(unsigned threshold) : k_(threshold) {}

  /// Returns true when a flush must be triggered this cycle.
  bool observe(bool irs_full_stall);
  void reset() { run_ = 0; }
  std::uint64_t current_run() const { return run_; }
  unsigned threshold() const { return k_; }

 private:
  unsigned k_;
  std::uint64_t run_ = 0;
};

enum class RollbackCause : std::uint8_t { kTypeA, kTypeB, kBottleneck };
std::string_view to_string(RollbackCause c);

struct RollbackEvent {
  std::uint64_t cycle = 0;
  RollbackCause cause = RollbackCause::kTypeA;
  ControlKind kind = ControlKind::kBranch;  // Type-A only
  Seq culprit = 0;  // mispredicted op (Type-A) or effectual consumer (Type-B)
  Seq target = 0;   // first op re-fetched
  std::size_t portion_a = 0;
  std::size_t portion_b = 0;
  std::size_t tags_after = 0;
};

struct StallEpisode {
  std::uint64_t start_cycle = 0;
  std::uint64_t length = 0;
  bool flushed = false;
};

inline constexpr std::size_t kOccupancyBuckets = 9;  // eighths of the I-RS, then full

struct SimStats {
  std::uint64_t cycles = 0;
  std::uint64_t committed = 0;
  std::uint64_t committed_ineffectual = 0;  // executed on the I-pipe and committed
  std::uint64_t steered = 0;                // including squashed attempts
  std::array<std::uint64_t, kNumControlKinds> type_a{};
  std::uint64_t type_b = 0;
  std::uint64_t bottleneck_flushes = 0;
  std::uint64_t effectual_redirects = 0;
  std::uint64_t primary_issued = 0;
  std::uint64_t ipipe_issued = 0;
  std::uint64_t iprf_write_conflicts = 0;  // completions delayed by the write port
  std::uint64_t identifications = 0;
  std::uint64_t tagged_records = 0;
  std::array<std::uint64_t, kOccupancyBuckets> irs_occupancy{};
  PredictorAccuracy accuracy;

  // Assertion counters; all must stay zero.
  std::uint64_t primary_iprf_reads = 0;
  std::uint64_t ipipe_order_violations = 0;
  std::uint64_t portion_size_violations = 0;

  std::uint64_t rollbacks() const;
  std::uint64_t type_a_total() const;
  double mpki() const;
  double mpki(ControlKind k) const;
  double ineffectual_fraction() const;
  double ipipe_issue_rate() const;
  double ipc() const;
  bool assertions_held() const {
    return primary_iprf_reads == 0 && ipipe_order_violations == 0 && portion_size_violations == 0;
  }
};

struct SimOptions {
  bool record_tags = false;             // keep every TagRecord produced at commit
  bool train_ineffectual = true;        // train the predictor on steered ops too
  std::ostream* cycle_log = nullptr;    // per-cycle CSV when set
  std::uint64_t deadlock_factor = 10;   // cycles without commit, times rob entries
};

struct SimResult {
  SimStats stats;
  ArchState final_state;
  std::vector<std::uint8_t> tagged;              // per seq: tagged by the detector at least once
  std::vector<std::uint8_t> prediction_correct;  // per seq, at commit; 1 for non-control ops
  std::vector<std::uint8_t> steered_at_commit;   // per seq
  std::vector<TagRecord> tag_log;                // only with record_tags
  std::vector<RollbackEvent> rollbacks;
  std::vector<StallEpisode> stall_episodes;
  std::size_t final_tag_count = 0;

  std::size_t tagged_count() const;
  double tagged_fraction() const;
};

/// Picks the predictor used when the config does not name one: the trace's
/// embedded predictions when every control op carries one, gshare otherwise.
PredictorKind default_predictor_kind(const Trace& trace);

/// Cycle-level simulation of `trace`. Throws ConfigError for an invalid
/// config and SimulationError when no window commits for too long.
SimResult simulate(const Trace& trace, const PipelineConfig& config, const SimOptions& options = {});

}  // namespace ineff

#endif  // INEFF_PIPELINE_HPP
