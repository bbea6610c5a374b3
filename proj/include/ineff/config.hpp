#ifndef INEFF_CONFIG_HPP
#define INEFF_CONFIG_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ineff/oracle.hpp"
#include "ineff/predictor.hpp"
#include "ineff/trace.hpp"

namespace ineff {

enum class Mode : std::uint8_t {
  kProposed,      // primary cluster plus I-pipe
  kBaseline,      // single cluster, every op effectual
  kPerfectIpipe,  // I-pipe free of data and structural hazards
  kIsoResource,   // single cluster widened to the combined resources
};

std::string_view to_string(Mode m);
std::optional<Mode> mode_from_string(std::string_view s);

struct PipelineConfig {
  unsigned window_size = 10;
  unsigned rob_entries = 370;
  unsigned primary_issue_width = 10;
  unsigned primary_rs_entries = 160;
  unsigned rename_width = 6;  // effectual ops per cycle
  unsigned ipipe_width = 4;
  unsigned irs_entries = 128;
  unsigned prf_int = 280;
  unsigned prf_vec = 224;  // reported only; the trace model has no vector registers
  unsigned arch_regs = kDefaultArchRegs;
  unsigned iprf_read_ports = 2;
  unsigned iprf_write_ports = 1;
  unsigned mprf_read_ports = 2;
  std::array<unsigned, kNumOpClasses> latency{1, 1, 1, 1, 1, 5, 5, 1};
  unsigned bottleneck_k = 32;
  unsigned redirect_penalty = 12;
  unsigned baseline_rob_entries = 352;
  unsigned baseline_commit_width = 6;
  unsigned uop_cache_entries = 2304;  // reported only
  Mode mode = Mode::kProposed;
  PivotType pivot_type = PivotType::kCD;
  PredictorConfig predictor;
  // False until a key or the caller picks the predictor kind explicitly.
  bool predictor_kind_set = false;

  unsigned latency_of(OpClass c) const { return latency[static_cast<std::size_t>(c)]; }
  bool single_cluster() const { return mode == Mode::kBaseline || mode == Mode::kIsoResource; }
  unsigned commit_width() const { return single_cluster() ? baseline_commit_width : window_size; }
  unsigned rob_capacity() const { return single_cluster() ? baseline_rob_entries : rob_entries; }

  /// Throws ConfigError describing the first violated constraint.
  void validate() const;

  /// Single cluster with issue width 14, rename/commit 10 and a 288-entry
  /// scheduler, for qualitative comparison against the split design.
  static PipelineConfig iso_resource();
};

/// Applies one `key=value` setting. Unknown keys and bad values throw ConfigError.
void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value);

/// Flat `key=value` lines; blank lines and `#` comments are ignored.
PipelineConfig parse_config(std::istream& in, PipelineConfig base = {});
PipelineConfig parse_config_string(std::string_view text, PipelineConfig base = {});
PipelineConfig load_config(const std::string& path, PipelineConfig base = {});

/// Every key with its current value, in documentation order.
std::vector<std::pair<std::string, std::string>> config_settings(const PipelineConfig& cfg);

}  // namespace ineff

#endif  // INEFF_CONFIG_HPP
