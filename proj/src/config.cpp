#include "ineff/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <type_traits>

namespace ineff {

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::kProposed: return "proposed";
    case Mode::kBaseline: return "baseline";
    case Mode::kPerfectIpipe: return "perfect_ipipe";
    case Mode::kIsoResource: return "iso_resource";
  }
  return "?";
}

std::optional<Mode> mode_from_string(std::string_view s) {
  std::string l;
  for (char c : s) l.push_back(c == '-' ? '_' : static_cast<char>(std::tolower(c)));
  if (l == "proposed") return Mode::kProposed;
  if (l == "baseline") return Mode::kBaseline;
  if (l == "perfect_ipipe") return Mode::kPerfectIpipe;
  if (l == "iso_resource") return Mode::kIsoResource;
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

unsigned parse_unsigned(std::string_view key, std::string_view v) {
  unsigned out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("bad value for " + std::string(key) + ": '" + std::string(v) + "'");
  }
  return out;
}

struct LatencyKey {
  std::string_view name;
  OpClass cls;
};
constexpr std::array<LatencyKey, kNumOpClasses> kLatencyKeys{{
    {"alu", OpClass::kAlu},
    {"cmp", OpClass::kCmp},
    {"branch", OpClass::kCondBranch},
    {"indirect", OpClass::kIndirectJump},
    {"predicated", OpClass::kPredicatedAlu},
    {"load", OpClass::kLoad},
    {"store", OpClass::kStore},
    {"nop", OpClass::kNop},
}};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void PipelineConfig::validate() const {
  require(window_size >= 1, "pipeline.window_size must be positive");
  require(rob_entries % window_size == 0 && rob_entries >= 2 * window_size,
          "pipeline.rob_entries must be a multiple of the window size holding at least two "
          "windows");
  require(primary_issue_width >= 1, "primary.issue_width must be positive");
  require(primary_rs_entries >= 1, "primary.rs_entries must be positive");
  require(rename_width >= 1, "rename.width must be positive");
  if (!single_cluster()) {
    require(ipipe_width == 2 || ipipe_width == 4 || ipipe_width == 8,
            "ipipe.width must be 2, 4 or 8");
    require(irs_entries == 64 || irs_entries == 128 || irs_entries == 256,
            "irs.entries must be 64, 128 or 256");
  }
  require(arch_regs >= 2, "arch.regs must be at least 2");
  require(prf_int > arch_regs, "prf.int must exceed arch.regs");
  require(iprf_read_ports >= 1 && iprf_write_ports >= 1 && mprf_read_ports >= 1,
          "register file port counts must be positive");
  for (const auto& k : kLatencyKeys) {
    require(latency_of(k.cls) >= 1, "latency." + std::string(k.name) + " must be positive");
  }
  require(bottleneck_k >= 1, "bottleneck.k must be positive");
  require(baseline_rob_entries >= 1, "baseline.rob_entries must be positive");
  require(baseline_commit_width >= 1, "baseline.commit_width must be positive");
  try {
    predictor.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

PipelineConfig PipelineConfig::iso_resource() {
  PipelineConfig c;
  c.mode = Mode::kIsoResource;
  c.primary_issue_width = 14;
  c.rename_width = 10;
  c.baseline_commit_width = 10;
  c.primary_rs_entries = 288;
  return c;
}

void apply_setting(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  auto num = [&] { return parse_unsigned(key, value); };
  if (key == "pipeline.window_size") {
    cfg.window_size = num();
  } else if (key == "pipeline.rob_entries") {
    cfg.rob_entries = num();
  } else if (key == "primary.issue_width") {
    cfg.primary_issue_width = num();
  } else if (key == "primary.rs_entries") {
    cfg.primary_rs_entries = num();
  } else if (key == "rename.width") {
    cfg.rename_width = num();
  } else if (key == "ipipe.width") {
    cfg.ipipe_width = num();
  } else if (key == "irs.entries") {
    cfg.irs_entries = num();
  } else if (key == "prf.int") {
    cfg.prf_int = num();
  } else if (key == "prf.vec") {
    cfg.prf_vec = num();
  } else if (key == "arch.regs") {
    cfg.arch_regs = num();
  } else if (key == "iprf.read_ports") {
    cfg.iprf_read_ports = num();
  } else if (key == "iprf.write_ports") {
    cfg.iprf_write_ports = num();
  } else if (key == "mprf.read_ports") {
    cfg.mprf_read_ports = num();
  } else if (key.starts_with("latency.")) {
    const auto name = key.substr(8);
    for (const auto& k : kLatencyKeys) {
      if (k.name == name) {
        cfg.latency[static_cast<std::size_t>(k.cls)] = num();
        return;
      }
    }
    throw ConfigError("unknown config key: " + std::string(key));
  } else if (key == "bottleneck.k") {
    cfg.bottleneck_k = num();
  } else if (key == "redirect.penalty") {
    cfg.redirect_penalty = num();
  } else if (key == "baseline.rob_entries") {
    cfg.baseline_rob_entries = num();
  } else if (key == "baseline.commit_width") {
    cfg.baseline_commit_width = num();
  } else if (key == "microop_cache.entries") {
    cfg.uop_cache_entries = num();
  } else if (key == "commit.width") {
    // Windowed commit retires one whole window at a time.
    if (num() != cfg.window_size) {
      throw ConfigError("commit.width must equal pipeline.window_size");
    }
  } else if (key == "db.entries") {
    if (num() != 4 * cfg.window_size) {
      throw ConfigError("db.entries must be four windows");
    }
  } else if (key == "mode") {
    auto m = mode_from_string(value);
    if (!m) throw ConfigError("bad mode: " + std::string(value));
    if (*m == Mode::kIsoResource) {
      const PipelineConfig iso = PipelineConfig::iso_resource();
      cfg.primary_issue_width = iso.primary_issue_width;
      cfg.rename_width = iso.rename_width;
      cfg.baseline_commit_width = iso.baseline_commit_width;
      cfg.primary_rs_entries = iso.primary_rs_entries;
    }
    cfg.mode = *m;
  } else if (key == "pivot_type") {
    auto t = pivot_type_from_string(value);
    if (!t) throw ConfigError("bad pivot_type: " + std::string(value));
    cfg.pivot_type = *t;
  } else if (key == "predictor.kind") {
    auto k = predictor_kind_from_string(value);
    if (!k) throw ConfigError("bad predictor.kind: " + std::string(value));
    cfg.predictor.kind = *k;
    cfg.predictor_kind_set = true;
  } else if (key == "predictor.table_bits") {
    cfg.predictor.table_bits = num();
  } else if (key == "predictor.history_length") {
    cfg.predictor.history_length = num();
  } else if (key == "predictor.tagged_bits") {
    cfg.predictor.tagged_bits = num();
  } else if (key == "predictor.indirect_bits") {
    cfg.predictor.indirect_bits = num();
  } else if (key == "predictor.predicate_bits") {
    cfg.predictor.predicate_bits = num();
  } else {
    throw ConfigError("unknown config key: " + std::string(key));
  }
}

PipelineConfig parse_config(std::istream& in, PipelineConfig base) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string_view text = line;
    if (auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(n) + ": expected key=value");
    }
    try {
      apply_setting(base, text.substr(0, eq), text.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(n) + ": " + e.what());
    }
  }
  base.validate();
  return base;
}

PipelineConfig parse_config_string(std::string_view text, PipelineConfig base) {
  std::istringstream in{std::string(text)};
  return parse_config(in, base);
}

PipelineConfig load_config(const std::string& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in, base);
}

std::vector<std::pair<std::string, std::string>> config_settings(const PipelineConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  auto add = [&](std::string k, auto v) {
    if constexpr (std::is_convertible_v<decltype(v), std::string_view>) {
      out.emplace_back(std::move(k), std::string(v));
    } else {
      out.emplace_back(std::move(k), std::to_string(v));
    }
  };
  add("mode", to_string(cfg.mode));
  add("pipeline.window_size", cfg.window_size);
  add("pipeline.rob_entries", cfg.rob_entries);
  add("commit.width", cfg.window_size);
  add("db.entries", 4 * cfg.window_size);
  add("primary.issue_width", cfg.primary_issue_width);
  add("primary.rs_entries", cfg.primary_rs_entries);
  add("rename.width", cfg.rename_width);
  add("ipipe.width", cfg.ipipe_width);
  add("irs.entries", cfg.irs_entries);
  add("prf.int", cfg.prf_int);
  add("prf.vec", cfg.prf_vec);
  add("arch.regs", cfg.arch_regs);
  add("iprf.read_ports", cfg.iprf_read_ports);
  add("iprf.write_ports", cfg.iprf_write_ports);
  add("mprf.read_ports", cfg.mprf_read_ports);
  for (const auto& k : kLatencyKeys) add("latency." + std::string(k.name), cfg.latency_of(k.cls));
  add("bottleneck.k", cfg.bottleneck_k);
  add("redirect.penalty", cfg.redirect_penalty);
  add("baseline.rob_entries", cfg.baseline_rob_entries);
  add("baseline.commit_width", cfg.baseline_commit_width);
  add("microop_cache.entries", cfg.uop_cache_entries);
  add("pivot_type", to_string(cfg.pivot_type));
  add("predictor.kind", to_string(cfg.predictor.kind));
  add("predictor.table_bits", cfg.predictor.table_bits);
  add("predictor.history_length", cfg.predictor.history_length);
  add("predictor.tagged_bits", cfg.predictor.tagged_bits);
  add("predictor.indirect_bits", cfg.predictor.indirect_bits);
  add("predictor.predicate_bits", cfg.predictor.predicate_bits);
  return out;
}

}  // namespace ineff
