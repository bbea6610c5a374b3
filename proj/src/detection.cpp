#include "ineff/detection.hpp"

#include <algorithm>
#include <stdexcept>

namespace ineff {

RegisterProducerMap::RegisterProducerMap(unsigned num_regs, unsigned window_size)
    : entries_(num_regs), window_(window_size) {
  if (window_size == 0) throw std::invalid_argument("window size must be positive");
}

std::optional<Seq> RegisterProducerMap::observe_rename(Seq seq, std::span<const RegIndex> reads,
                                                       std::optional<RegIndex> write) {
  for (RegIndex r : reads) entries_.at(r).has_dependants = true;
  if (!write) return std::nullopt;
  RpmEntry& e = entries_.at(*write);
  std::optional<Seq> marked;
  if (e.valid && !e.has_dependants) {
    const Seq current = seq / window_;
    const Seq producer = e.producer_seq / window_;
    if (producer == current || producer + 1 == current) marked = e.producer_seq;
  }
  e = RpmEntry{true, false, seq};
  return marked;
}

void RegisterProducerMap::clear() { std::fill(entries_.begin(), entries_.end(), RpmEntry{}); }

DbEntry DbEntry::from_committed(const MicroOp& op, PivotFlags flags) {
  DbEntry e;
  e.seq = op.seq;
  e.pc = op.static_pc;
  e.op_class = op.op_class;
  e.srcs = op.srcs;
  e.dest = op.effective_dest();
  e.pivot = flags;
  return e;
}

DetectionBuffer::DetectionBuffer(unsigned window_size)
    : storage_(4u * window_size), window_(window_size) {
  if (window_size == 0) throw std::invalid_argument("window size must be positive");
}

void DetectionBuffer::push(DbEntry e) {
  if (count_ == storage_.size()) throw std::logic_error("detection buffer overflow");
  storage_[(head_ + count_) % storage_.size()] = std::move(e);
  ++count_;
}

void DetectionBuffer::discard_oldest_window() {
  const std::size_t n = std::min<std::size_t>(window_, count_);
  head_ = (head_ + n) % storage_.size();
  count_ -= n;
}

void DetectionBuffer::clear() {
  head_ = 0;
  count_ = 0;
}

namespace {

std::size_t region_end(const DetectionBuffer& db) {
  return std::min(db.size(), db.analysis_span());
}

bool reads(const DbEntry& e, RegIndex r) {
  return std::find(e.srcs.begin(), e.srcs.end(), r) != e.srcs.end();
}

}  // namespace

std::vector<std::size_t> get_pred(const DetectionBuffer& db, std::size_t i) {
  std::vector<std::size_t> out;
  for (RegIndex r : db.slot(i).srcs) {
    for (std::size_t k = i; k-- > 0;) {
      const DbEntry& p = db.slot(k);
      if (p.dest != r) continue;
      if (!is_memory(p.op_class) && std::find(out.begin(), out.end(), k) == out.end()) {
        out.push_back(k);
      }
      break;
    }
  }
  return out;
}

std::vector<std::size_t> get_succ(const DetectionBuffer& db, std::size_t i) {
  std::vector<std::size_t> out;
  const auto dest = db.slot(i).dest;
  if (!dest) return out;
  const std::size_t end = region_end(db);
  for (std::size_t k = i + 1; k < end; ++k) {
    const DbEntry& s = db.slot(k);
    if (reads(s, *dest)) out.push_back(k);
    if (s.dest == dest) break;
  }
  return out;
}

bool analyze_olc(const DetectionBuffer& db, std::size_t i) {
  for (std::size_t s : get_succ(db, i)) {
    if (!db.slot(s).ineffectual) return false;
  }
  const auto dest = db.slot(i).dest;
  if (!dest) return false;
  const std::size_t end = region_end(db);
  for (std::size_t k = i + 1; k < end; ++k) {
    if (db.slot(k).dest == dest) return true;
  }
  return false;
}

void analyze_ilc(DetectionBuffer& db, std::size_t i, IdentifyResult& result) {
  for (std::size_t p : get_pred(db, i)) {
    DbEntry& pe = db.slot(p);
    if (pe.ineffectual) continue;
    if (!analyze_olc(db, p)) continue;
    pe.ineffectual = true;
    result.tagged.push_back(
        {pe.seq, pe.pc, std::nullopt, static_cast<std::uint32_t>(result.tagged.size() + 1)});
    analyze_ilc(db, p, result);
  }
}

IdentifyResult identify_window(DetectionBuffer& db) {
  if (!db.ready()) throw std::logic_error("identify_window needs three full windows");
  const std::size_t w = db.window_size();
  for (std::size_t k = 0; k < db.analysis_span(); ++k) db.slot(k).ineffectual = false;
  IdentifyResult result;
  for (std::size_t k = 2 * w; k-- > w;) {
    DbEntry& e = db.slot(k);
    if (!e.pivot.any()) continue;
    if (!e.ineffectual) {
      e.ineffectual = true;
      result.tagged.push_back({e.seq, e.pc,
                               e.pivot.control ? PivotKind::kControl : PivotKind::kData,
                               static_cast<std::uint32_t>(result.tagged.size() + 1)});
    }
    analyze_ilc(db, k, result);
  }
  return result;
}

std::optional<IdentifyResult> DetectionEngine::insert_committed(DbEntry e) {
  db_.push(std::move(e));
  if (!db_.ready()) return std::nullopt;
  IdentifyResult r = identify_window(db_);
  db_.discard_oldest_window();
  return r;
}

void tag_uop_cache(const IdentifyResult& result, TagStore& tags) {
  for (const auto& t : result.tagged) tags.tag(t.pc);
}

std::vector<Seq> detect_stream(const Trace& trace, unsigned window_size, PivotType type,
                               RegisterSpace regs) {
  std::vector<std::uint8_t> ri(trace.size(), 0);
  RegisterProducerMap rpm(regs.count, window_size);
  for (const auto& op : trace) {
    const auto dest = op.effective_dest();
    if (auto p = rpm.observe_rename(op.seq, op.srcs, dest)) {
      if (trace[*p].op_class != OpClass::kLoad) ri[*p] = 1;
    }
  }
  DetectionEngine engine(window_size);
  std::vector<Seq> tagged;
  for (const auto& op : trace) {
    PivotFlags flags;
    if (admits(type, PivotKind::kControl) && op.embedded_prediction_correct() &&
        (op.op_class != OpClass::kPredicatedAlu || op.ctrl->actual_pred_false)) {
      flags.control = true;
    }
    flags.data = admits(type, PivotKind::kData) && ri[op.seq] && op.effective_dest();
    if (auto r = engine.insert_committed(DbEntry::from_committed(op, flags))) {
      for (const auto& t : r->tagged) tagged.push_back(t.seq);
    }
  }
  std::sort(tagged.begin(), tagged.end());
  tagged.erase(std::unique(tagged.begin(), tagged.end()), tagged.end());
  return tagged;
}

}  // namespace ineff
