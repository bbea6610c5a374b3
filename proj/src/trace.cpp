#include "ineff/trace.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace ineff {

namespace {

struct ClassName {
  OpClass cls;
  std::string_view canonical;
  std::string_view alias;
};

constexpr std::array<ClassName, kNumOpClasses> kClassNames{{
    {OpClass::kAlu, "ALU", "ALU"},
    {OpClass::kCmp, "CMP", "CMP"},
    {OpClass::kCondBranch, "BR.C", "COND_BRANCH"},
    {OpClass::kIndirectJump, "JMP.IND", "INDIRECT_JUMP"},
    {OpClass::kPredicatedAlu, "ALU.PRED", "PREDICATED_ALU"},
    {OpClass::kLoad, "LOAD", "LOAD"},
    {OpClass::kStore, "STORE", "STORE"},
    {OpClass::kNop, "NOP", "NOP"},
}};

}  // namespace

std::string_view to_string(OpClass c) {
  return kClassNames[static_cast<std::size_t>(c)].canonical;
}

std::optional<OpClass> op_class_from_string(std::string_view s) {
  for (const auto& n : kClassNames) {
    if (s == n.canonical || s == n.alias) return n.cls;
  }
  return std::nullopt;
}

bool MicroOp::has_embedded_prediction() const {
  if (!ctrl) return false;
  switch (op_class) {
    case OpClass::kCondBranch: return ctrl->predicted_taken.has_value();
    case OpClass::kIndirectJump: return ctrl->predicted_target.has_value();
    case OpClass::kPredicatedAlu: return ctrl->predicted_pred_false.has_value();
    default: return false;
  }
}

bool MicroOp::embedded_prediction_correct() const {
  if (!has_embedded_prediction()) return false;
  switch (op_class) {
    case OpClass::kCondBranch: return *ctrl->predicted_taken == ctrl->actual_taken;
    case OpClass::kIndirectJump: return *ctrl->predicted_target == ctrl->actual_target;
    case OpClass::kPredicatedAlu:
      return *ctrl->predicted_pred_false == ctrl->actual_pred_false;
    default: return false;
  }
}

// Validation -------------------------------------------------------------------

void validate_op(const MicroOp& op, RegisterSpace regs, std::size_t line) {
  auto fail = [line](const std::string& msg) { throw TraceError(msg, line); };
  if (op.srcs.size() > 3) fail("more than 3 source registers");
  for (RegIndex r : op.srcs) {
    if (r >= regs.count) fail("register index " + std::to_string(r) + " out of range");
  }
  if (op.dest && *op.dest >= regs.count) {
    fail("register index " + std::to_string(*op.dest) + " out of range");
  }
  if (op.latency && *op.latency == 0) fail("latency must be >= 1");
  if (is_control(op.op_class) != op.ctrl.has_value()) {
    fail(std::string(to_string(op.op_class)) +
         (op.ctrl ? ": control annotation not allowed" : ": missing control annotation"));
  }
  if (is_memory(op.op_class) != op.mem_addr.has_value()) {
    fail(std::string(to_string(op.op_class)) +
         (op.mem_addr ? ": addr not allowed" : ": missing addr"));
  }
  const RegIndex flags = regs.flags();
  switch (op.op_class) {
    case OpClass::kCmp:
      if (op.dest != flags) fail("CMP must write FLAGS");
      break;
    case OpClass::kCondBranch:
      if (op.dest) fail("BR.C has no destination");
      if (std::find(op.srcs.begin(), op.srcs.end(), flags) == op.srcs.end()) {
        fail("BR.C must read FLAGS");
      }
      break;
    case OpClass::kIndirectJump:
      if (op.dest) fail("JMP.IND has no destination");
      break;
    case OpClass::kPredicatedAlu:
      if (!op.dest) fail("ALU.PRED needs a destination");
      break;
    case OpClass::kLoad:
      if (!op.dest) fail("LOAD needs a destination");
      break;
    case OpClass::kStore:
      if (op.dest) fail("STORE has no register destination");
      break;
    case OpClass::kNop:
      if (op.dest || !op.srcs.empty()) fail("NOP has no operands");
      break;
    case OpClass::kAlu:
      break;
  }
  if (op.ctrl) {
    const auto& c = *op.ctrl;
    if (op.op_class != OpClass::kCondBranch && (c.actual_taken || c.predicted_taken)) {
      fail("taken/pred only apply to BR.C");
    }
    if (op.op_class != OpClass::kIndirectJump && (c.actual_target || c.predicted_target)) {
      fail("target/ptarget only apply to JMP.IND");
    }
    if (op.op_class != OpClass::kPredicatedAlu &&
        (c.actual_pred_false || c.predicted_pred_false)) {
      fail("pfalse/ppfalse only apply to ALU.PRED");
    }
  }
}

// Parsing ------------------------------------------------------------------------

namespace {

template <typename T>
T parse_number(std::string_view text, std::size_t line, std::string_view key) {
  T value{};
  int base = 10;
  std::string_view digits = text;
  if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
    digits.remove_prefix(2);
    base = 16;
  }
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, base);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
    throw TraceError("bad integer for " + std::string(key) + ": '" + std::string(text) + "'",
                     line);
  }
  return value;
}

bool parse_bit(std::string_view text, std::size_t line, std::string_view key) {
  if (text == "0") return false;
  if (text == "1") return true;
  throw TraceError("expected 0 or 1 for " + std::string(key), line);
}

RegIndex parse_reg(std::string_view text, RegisterSpace regs, std::size_t line) {
  if (text == "FLAGS") return regs.flags();
  if (text.size() < 2 || text[0] != 'r') {
    throw TraceError("bad register '" + std::string(text) + "'", line);
  }
  auto idx = parse_number<unsigned>(text.substr(1), line, "register");
  // rN names general registers only; FLAGS is spelled out.
  if (idx >= regs.count - 1u) {
    throw TraceError("register index " + std::to_string(idx) + " out of range", line);
  }
  return static_cast<RegIndex>(idx);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find(sep, start);
    if (end == std::string_view::npos) end = s.size();
    out.push_back(s.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

MicroOp parse_line(std::string_view text, RegisterSpace regs, std::size_t line) {
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    if (pos >= text.size()) break;
    std::size_t end = pos;
    while (end < text.size() && text[end] != ' ' && text[end] != '\t') ++end;
    tokens.push_back(text.substr(pos, end - pos));
    pos = end;
  }
  MicroOp op;
  auto cls = op_class_from_string(tokens.front());
  if (!cls) throw TraceError("unknown op class '" + std::string(tokens.front()) + "'", line);
  op.op_class = *cls;

  std::set<std::string_view> seen;
  std::optional<bool> taken, pred, pfalse, ppfalse;
  std::optional<std::int64_t> target, ptarget;
  bool have_pc = false;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    auto tok = tokens[i];
    auto eq = tok.find('=');
    if (eq == std::string_view::npos) {
      throw TraceError("expected key=value, got '" + std::string(tok) + "'", line);
    }
    auto key = tok.substr(0, eq);
    auto val = tok.substr(eq + 1);
    if (!seen.insert(key).second) throw TraceError("duplicate key " + std::string(key), line);
    if (key == "pc") {
      op.static_pc = parse_number<std::uint64_t>(val, line, key);
      have_pc = true;
    } else if (key == "srcs") {
      for (auto r : split(val, ',')) op.srcs.push_back(parse_reg(r, regs, line));
    } else if (key == "dest") {
      op.dest = parse_reg(val, regs, line);
    } else if (key == "addr") {
      op.mem_addr = parse_number<std::int64_t>(val, line, key);
    } else if (key == "lat") {
      op.latency = parse_number<std::uint32_t>(val, line, key);
    } else if (key == "taken") {
      taken = parse_bit(val, line, key);
    } else if (key == "pred") {
      pred = parse_bit(val, line, key);
    } else if (key == "target") {
      target = parse_number<std::int64_t>(val, line, key);
    } else if (key == "ptarget") {
      ptarget = parse_number<std::int64_t>(val, line, key);
    } else if (key == "pfalse") {
      pfalse = parse_bit(val, line, key);
    } else if (key == "ppfalse") {
      ppfalse = parse_bit(val, line, key);
    } else {
      throw TraceError("unknown key '" + std::string(key) + "'", line);
    }
  }
  if (!have_pc) throw TraceError("missing pc", line);

  const bool any_ctrl = taken || pred || target || ptarget || pfalse || ppfalse;
  if (any_ctrl) {
    ControlAnnotation c;
    switch (op.op_class) {
      case OpClass::kCondBranch:
        if (!taken) throw TraceError("BR.C needs taken=", line);
        if (target || ptarget || pfalse || ppfalse) {
          throw TraceError("BR.C only takes taken/pred", line);
        }
        c.actual_taken = *taken;
        c.predicted_taken = pred;
        break;
      case OpClass::kIndirectJump:
        if (!target) throw TraceError("JMP.IND needs target=", line);
        if (taken || pred || pfalse || ppfalse) {
          throw TraceError("JMP.IND only takes target/ptarget", line);
        }
        c.actual_target = *target;
        c.predicted_target = ptarget;
        break;
      case OpClass::kPredicatedAlu:
        if (!pfalse) throw TraceError("ALU.PRED needs pfalse=", line);
        if (taken || pred || target || ptarget) {
          throw TraceError("ALU.PRED only takes pfalse/ppfalse", line);
        }
        c.actual_pred_false = *pfalse;
        c.predicted_pred_false = ppfalse;
        break;
      default:
        throw TraceError(std::string(to_string(op.op_class)) + ": control fields not allowed",
                         line);
    }
    op.ctrl = c;
  }
  validate_op(op, regs, line);
  return op;
}

}  // namespace

Trace parse_trace(std::istream& in, RegisterSpace regs) {
  Trace out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text(raw);
    if (auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
      text.remove_suffix(1);
    }
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    if (text.empty()) continue;
    MicroOp op = parse_line(text, regs, line);
    op.seq = out.size();
    out.push_back(std::move(op));
  }
  if (in.bad()) throw TraceError("read failure", line);
  return out;
}

Trace parse_trace_string(std::string_view text, RegisterSpace regs) {
  std::istringstream in{std::string(text)};
  return parse_trace(in, regs);
}

Trace load_trace_file(const std::string& path, RegisterSpace regs) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open trace file " + path, 0);
  return parse_trace(in, regs);
}

// Emission -----------------------------------------------------------------------

namespace {

std::string reg_name(RegIndex r, RegisterSpace regs) {
  return r == regs.flags() ? std::string("FLAGS") : "r" + std::to_string(r);
}

}  // namespace

std::string format_op(const MicroOp& op, RegisterSpace regs) {
  std::string s(to_string(op.op_class));
  s += " pc=" + std::to_string(op.static_pc);
  if (!op.srcs.empty()) {
    s += " srcs=";
    for (std::size_t i = 0; i < op.srcs.size(); ++i) {
      if (i) s += ',';
      s += reg_name(op.srcs[i], regs);
    }
  }
  if (op.dest) s += " dest=" + reg_name(*op.dest, regs);
  if (op.mem_addr) s += " addr=" + std::to_string(*op.mem_addr);
  if (op.latency) s += " lat=" + std::to_string(*op.latency);
  if (op.ctrl) {
    const auto& c = *op.ctrl;
    switch (op.op_class) {
      case OpClass::kCondBranch:
        s += c.actual_taken ? " taken=1" : " taken=0";
        if (c.predicted_taken) s += *c.predicted_taken ? " pred=1" : " pred=0";
        break;
      case OpClass::kIndirectJump:
        s += " target=" + std::to_string(c.actual_target);
        if (c.predicted_target) s += " ptarget=" + std::to_string(*c.predicted_target);
        break;
      case OpClass::kPredicatedAlu:
        s += c.actual_pred_false ? " pfalse=1" : " pfalse=0";
        if (c.predicted_pred_false) s += *c.predicted_pred_false ? " ppfalse=1" : " ppfalse=0";
        break;
      default:
        break;
    }
  }
  return s;
}

void emit_trace(const Trace& ops, std::ostream& out, RegisterSpace regs) {
  for (const auto& op : ops) out << format_op(op, regs) << '\n';
  if (!out) throw TraceError("write failure", 0);
}

std::string emit_trace_string(const Trace& ops, RegisterSpace regs) {
  std::ostringstream out;
  emit_trace(ops, out, regs);
  return out.str();
}

// Values -------------------------------------------------------------------------

std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t mix_combine(std::uint64_t seed, std::uint64_t v) {
  return mix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

std::uint64_t initial_reg_value(RegIndex r) { return mix64(r); }
std::uint64_t initial_mem_value(std::int64_t addr) {
  return mix64(static_cast<std::uint64_t>(addr));
}

std::uint64_t compute_value(const MicroOp& op, const std::vector<std::uint64_t>& src_values) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(op.op_class));
  h = mix_combine(h, op.static_pc);
  for (auto v : src_values) h = mix_combine(h, v);
  return h;
}

std::uint64_t load_value(std::uint64_t mem_word) { return mix64(mem_word); }

ArchState ArchState::initial(RegisterSpace regs) {
  ArchState s;
  s.regs.resize(regs.count);
  for (unsigned r = 0; r < regs.count; ++r) s.regs[r] = initial_reg_value(static_cast<RegIndex>(r));
  return s;
}

std::uint64_t ArchState::read_mem(std::int64_t addr) const {
  auto it = mem.find(addr);
  return it == mem.end() ? initial_mem_value(addr) : it->second;
}

ArchState reference_execute(const Trace& trace, RegisterSpace regs) {
  ArchState st = ArchState::initial(regs);
  std::vector<std::uint64_t> vals;
  for (const auto& op : trace) {
    vals.clear();
    for (RegIndex r : op.srcs) vals.push_back(st.regs[r]);
    switch (op.op_class) {
      case OpClass::kAlu:
      case OpClass::kCmp:
        if (op.dest) st.regs[*op.dest] = compute_value(op, vals);
        break;
      case OpClass::kPredicatedAlu:
        if (!op.ctrl->actual_pred_false) st.regs[*op.dest] = compute_value(op, vals);
        break;
      case OpClass::kLoad:
        st.regs[*op.dest] = load_value(st.read_mem(*op.mem_addr));
        break;
      case OpClass::kStore:
        st.mem[*op.mem_addr] = compute_value(op, vals);
        break;
      case OpClass::kCondBranch:
      case OpClass::kIndirectJump:
      case OpClass::kNop:
        break;
    }
  }
  return st;
}

// Synthetic generation ---------------------------------------------------------------

namespace {

double expected_chain_depth(const std::vector<double>& w) {
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  double e = 0;
  for (std::size_t d = 0; d < w.size(); ++d) e += static_cast<double>(d) * w[d] / total;
  return e;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  std::uint64_t below(std::uint64_t n) { return eng_() % n; }
  bool chance(double p) { return uniform() < p; }
  std::size_t pick(const std::vector<double>& weights) {
    double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double x = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (x < weights[i]) return i;
      x -= weights[i];
    }
    return weights.size() - 1;
  }

 private:
  std::mt19937_64 eng_;
};

enum class Chunk { kCmpBranch, kDeadWrite, kPredicated, kIndirect, kLoad, kStore, kAlu };

struct ChunkMix {
  std::vector<Chunk> kinds;
  std::vector<double> weights;
};

// Chunk selection weights so that the expected op share of each planted
// category matches its requested fraction; plain ALU chunks fill the rest.
ChunkMix chunk_mix(const SynthParams& p) {
  const double cmp_size = expected_chain_depth(p.chain_depth_weights) + 2.0;
  struct Item {
    Chunk kind;
    double fraction;
    double planted_per_chunk;
    double size;
  };
  const std::array<Item, 6> items{{
      {Chunk::kCmpBranch, p.cmp_branch_fraction, 2.0, cmp_size},
      {Chunk::kDeadWrite, p.dead_write_fraction, 1.0, 3.0},
      {Chunk::kPredicated, p.predicated_fraction, 1.0, 1.0},
      {Chunk::kIndirect, p.indirect_fraction, 1.0, 1.0},
      {Chunk::kLoad, p.load_fraction, 1.0, 2.0},
      {Chunk::kStore, p.store_fraction, 1.0, 1.0},
  }};
  ChunkMix mix;
  double consumed = 0;
  for (const auto& it : items) {
    consumed += it.fraction * it.size / it.planted_per_chunk;
    mix.kinds.push_back(it.kind);
    mix.weights.push_back(it.fraction / it.planted_per_chunk);
  }
  mix.kinds.push_back(Chunk::kAlu);
  mix.weights.push_back(std::max(0.0, 1.0 - consumed));
  return mix;
}

struct BranchProfile {
  bool periodic = false;
  double p_taken = 0.5;
  std::uint32_t period = 1;
};

struct StaticOp {
  MicroOp tmpl;
  BranchProfile branch;
  double p_false = 0.5;
  std::vector<std::int64_t> targets;
  std::int64_t addr_base = 0;
};

}  // namespace

void validate(const SynthParams& p) {
  auto frac = [](double f, const char* name) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError(std::string(name) + " must be in [0,1]");
  };
  frac(p.cmp_branch_fraction, "cmp_branch_fraction");
  frac(p.branch_mispredict_rate, "branch_mispredict_rate");
  frac(p.dead_write_fraction, "dead_write_fraction");
  frac(p.predicated_fraction, "predicated_fraction");
  frac(p.predicate_false_rate, "predicate_false_rate");
  frac(p.predicate_mispredict_rate, "predicate_mispredict_rate");
  frac(p.indirect_fraction, "indirect_fraction");
  frac(p.indirect_mispredict_rate, "indirect_mispredict_rate");
  frac(p.load_fraction, "load_fraction");
  frac(p.store_fraction, "store_fraction");
  if (p.num_regs < 8 || p.num_regs > 4096) throw ConfigError("num_regs must be in [8, 4096]");
  if (p.body_size == 0) throw ConfigError("body_size must be >= 1");
  if (p.max_latency == 0) throw ConfigError("max_latency must be >= 1");
  if (p.chain_depth_weights.empty()) throw ConfigError("chain_depth_weights is empty");
  double wsum = 0;
  for (double w : p.chain_depth_weights) {
    if (!(w >= 0.0)) throw ConfigError("chain_depth_weights must be non-negative");
    wsum += w;
  }
  if (wsum <= 0) throw ConfigError("chain_depth_weights must have positive mass");
  const double planted = p.cmp_branch_fraction + p.dead_write_fraction + p.predicated_fraction +
                         p.indirect_fraction + p.load_fraction + p.store_fraction;
  if (planted > 1.0) throw ConfigError("op-class fractions sum to more than 1");
  // Chunks carry companion ops (chain ALUs, consumers); those must fit too.
  const double cmp_size = expected_chain_depth(p.chain_depth_weights) + 2.0;
  const double consumed = p.cmp_branch_fraction * cmp_size / 2.0 + p.dead_write_fraction * 3.0 +
                          p.predicated_fraction + p.indirect_fraction + p.load_fraction * 2.0 +
                          p.store_fraction;
  if (consumed > 1.0 + 1e-12) {
    throw ConfigError("infeasible mix: planted ops plus their companions exceed the trace");
  }
}

Trace generate_synthetic(const SynthParams& p, std::uint64_t seed) {
  validate(p);
  Trace out;
  if (p.count == 0) return out;
  Rng rng(seed);
  const RegisterSpace regs{p.num_regs};
  const RegIndex flags = regs.flags();
  const unsigned general = p.num_regs - 1;
  const unsigned num_acc = std::max(2u, general / 3);
  const unsigned num_tmp = general - num_acc;
  unsigned next_tmp = 0;
  auto acc = [&] { return static_cast<RegIndex>(rng.below(num_acc)); };
  auto tmp = [&] {
    auto r = static_cast<RegIndex>(num_acc + next_tmp);
    next_tmp = (next_tmp + 1) % num_tmp;
    return r;
  };
  auto lat = [&]() -> std::optional<std::uint32_t> {
    if (p.max_latency <= 1) return std::nullopt;
    return static_cast<std::uint32_t>(1 + rng.below(p.max_latency));
  };

  std::vector<StaticOp> body;
  auto add = [&](OpClass cls, std::vector<RegIndex> srcs, std::optional<RegIndex> dest) -> StaticOp& {
    StaticOp s;
    s.tmpl.op_class = cls;
    s.tmpl.static_pc = body.size();
    s.tmpl.srcs = std::move(srcs);
    s.tmpl.dest = dest;
    if (cls == OpClass::kAlu || cls == OpClass::kPredicatedAlu) s.tmpl.latency = lat();
    body.push_back(std::move(s));
    return body.back();
  };

  const ChunkMix mix = chunk_mix(p);
  while (body.size() < p.body_size) {
    switch (mix.kinds[rng.pick(mix.weights)]) {
      case Chunk::kCmpBranch: {
        const std::size_t depth = rng.pick(p.chain_depth_weights);
        const RegIndex a = acc();
        RegIndex last = a;
        for (std::size_t d = 0; d < depth; ++d) {
          const RegIndex t = tmp();
          add(OpClass::kAlu, {last}, t);
          last = t;
        }
        add(OpClass::kCmp, {last, acc()}, flags);
        auto& br = add(OpClass::kCondBranch, {flags}, std::nullopt);
        if (rng.chance(0.3)) {
          br.branch.periodic = true;
          br.branch.period = static_cast<std::uint32_t>(2 + rng.below(7));
        } else {
          br.branch.p_taken = rng.chance(0.5) ? 0.9 + 0.1 * rng.uniform() : 0.1 * rng.uniform();
        }
        break;
      }
      case Chunk::kDeadWrite: {
        // First write is overwritten before any read.
        const RegIndex t = tmp();
        add(OpClass::kAlu, {acc()}, t);
        add(OpClass::kAlu, {acc()}, t);
        const RegIndex a = acc();
        add(OpClass::kAlu, {a, t}, a);
        break;
      }
      case Chunk::kPredicated: {
        // Reads its own destination so the previous producer never goes dead.
        const RegIndex a = acc();
        auto& s = add(OpClass::kPredicatedAlu, {a, acc()}, a);
        s.p_false = std::clamp(p.predicate_false_rate + 0.2 * (rng.uniform() - 0.5), 0.0, 1.0);
        break;
      }
      case Chunk::kIndirect: {
        auto& s = add(OpClass::kIndirectJump, {acc()}, std::nullopt);
        const std::size_t n = 1 + rng.below(4);
        for (std::size_t i = 0; i < n; ++i) s.targets.push_back(0x1000 + 64 * static_cast<std::int64_t>(rng.below(256)));
        break;
      }
      case Chunk::kLoad: {
        const RegIndex t = tmp();
        auto& ld = add(OpClass::kLoad, {acc()}, t);
        ld.addr_base = 8 * static_cast<std::int64_t>(rng.below(64));
        const RegIndex a = acc();
        add(OpClass::kAlu, {a, t}, a);
        break;
      }
      case Chunk::kStore: {
        auto& st = add(OpClass::kStore, {acc(), acc()}, std::nullopt);
        st.addr_base = 8 * static_cast<std::int64_t>(rng.below(64));
        break;
      }
      case Chunk::kAlu: {
        const RegIndex a = acc();
        add(OpClass::kAlu, {a, acc()}, a);
        break;
      }
    }
  }

  out.reserve(p.count);
  std::vector<std::uint32_t> visits(body.size(), 0);
  for (std::size_t iter = 0; out.size() < p.count; ++iter) {
    for (std::size_t i = 0; i < body.size() && out.size() < p.count; ++i) {
      const StaticOp& s = body[i];
      MicroOp op = s.tmpl;
      op.seq = out.size();
      const std::uint32_t visit = visits[i]++;
      switch (op.op_class) {
        case OpClass::kCondBranch: {
          ControlAnnotation c;
          c.actual_taken = s.branch.periodic ? (visit % s.branch.period) != s.branch.period - 1
                                             : rng.chance(s.branch.p_taken);
          const bool miss = rng.chance(p.branch_mispredict_rate);
          if (p.embed_predictions) c.predicted_taken = miss ? !c.actual_taken : c.actual_taken;
          op.ctrl = c;
          break;
        }
        case OpClass::kPredicatedAlu: {
          ControlAnnotation c;
          c.actual_pred_false = rng.chance(s.p_false);
          const bool miss = rng.chance(p.predicate_mispredict_rate);
          if (p.embed_predictions) {
            c.predicted_pred_false = miss ? !c.actual_pred_false : c.actual_pred_false;
          }
          op.ctrl = c;
          break;
        }
        case OpClass::kIndirectJump: {
          ControlAnnotation c;
          const std::size_t pick = rng.chance(0.8) ? 0 : rng.below(s.targets.size());
          c.actual_target = s.targets[pick];
          const bool miss = rng.chance(p.indirect_mispredict_rate);
          if (p.embed_predictions) c.predicted_target = miss ? c.actual_target + 4 : c.actual_target;
          op.ctrl = c;
          break;
        }
        case OpClass::kLoad:
        case OpClass::kStore:
          op.mem_addr = s.addr_base + 8 * static_cast<std::int64_t>(iter % 8);
          break;
        default:
          break;
      }
      out.push_back(std::move(op));
    }
  }
  return out;
}

PredictionCensus census(const Trace& trace) {
  PredictionCensus c;
  for (const auto& op : trace) {
    if (!op.ctrl) continue;
    const bool miss = op.has_embedded_prediction() && !op.embedded_prediction_correct();
    switch (op.op_class) {
      case OpClass::kCondBranch:
        ++c.branches;
        c.branch_mispredicts += miss;
        break;
      case OpClass::kPredicatedAlu:
        ++c.predicated;
        c.predicate_mispredicts += miss;
        break;
      case OpClass::kIndirectJump:
        ++c.indirects;
        c.indirect_mispredicts += miss;
        break;
      default:
        break;
    }
  }
  return c;
}

}  // namespace ineff
