#ifndef INEFF_DETECTION_HPP
#define INEFF_DETECTION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "ineff/oracle.hpp"
#include "ineff/trace.hpp"

namespace ineff {

struct PivotFlags {
  bool control = false;
  bool data = false;
  bool any() const { return control || data; }
  bool operator==(const PivotFlags&) const = default;
};

// Register Producer Map --------------------------------------------------------

struct RpmEntry {
  bool valid = false;
  bool has_dependants = false;
  Seq producer_seq = 0;
};

/// Per-architectural-register record of the last renamed producer, used to
/// find results that are overwritten before anything reads them.
class RegisterProducerMap {
 public:
  RegisterProducerMap(unsigned num_regs, unsigned window_size);

  /// Applies the rename-time update for one op and returns the producer that
  /// becomes a register-ineffectual pivot, if any. `reads` may include
  /// implicit reads (e.g. the old destination of a conditional move).
  std::optional<Seq> observe_rename(Seq seq, std::span<const RegIndex> reads,
                                    std::optional<RegIndex> write);
  void clear();
  const RpmEntry& entry(RegIndex r) const { return entries_.at(r); }
  unsigned window_size() const { return window_; }

 private:
  std::vector<RpmEntry> entries_;
  unsigned window_;
};

// Detection Buffer ---------------------------------------------------------------

struct DbEntry {
  Seq seq = 0;
  Pc pc = 0;
  OpClass op_class = OpClass::kNop;
  std::vector<RegIndex> srcs;
  std::optional<RegIndex> dest;  // resolved destination; none for predicated-false ops
  PivotFlags pivot;
  bool ineffectual = false;

  static DbEntry from_committed(const MicroOp& op, PivotFlags flags);
};

/// Circular buffer of 4 windows of committed instructions. Slot 0 is the
/// oldest retained entry; only slots [0, 3W) are visible to analysis.
class DetectionBuffer {
 public:
  explicit DetectionBuffer(unsigned window_size);

  unsigned window_size() const { return window_; }
  std::size_t capacity() const { return storage_.size(); }
  std::size_t size() const { return count_; }
  std::size_t analysis_span() const { return 3u * window_; }
  bool ready() const { return count_ >= analysis_span(); }

  void push(DbEntry e);
  DbEntry& slot(std::size_t i) { return storage_[(head_ + i) % storage_.size()]; }
  const DbEntry& slot(std::size_t i) const { return storage_[(head_ + i) % storage_.size()]; }
  void discard_oldest_window();
  void clear();

 private:
  std::vector<DbEntry> storage_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  unsigned window_;
};

// Detection Engine ----------------------------------------------------------------

struct TagRecord {
  Seq seq = 0;
  Pc pc = 0;
  std::optional<PivotKind> pivot_kind;  // set when the op was itself a pivot
  std::uint32_t rank = 0;               // 1-based discovery order within one identification
};

struct IdentifyResult {
  std::vector<TagRecord> tagged;  // discovery order
};

/// Producers (non-memory) of slot `i` within the analysed region, in source
/// operand order. A source whose last writer fell out of the buffer is omitted.
std::vector<std::size_t> get_pred(const DetectionBuffer& db, std::size_t i);

/// Consumers of slot `i`'s result within the analysed region.
std::vector<std::size_t> get_succ(const DetectionBuffer& db, std::size_t i);

bool analyze_olc(const DetectionBuffer& db, std::size_t i);
void analyze_ilc(DetectionBuffer& db, std::size_t i, IdentifyResult& result);

/// Runs the identification over the middle window. Requires db.ready().
IdentifyResult identify_window(DetectionBuffer& db);

/// Owns the buffer and triggers identification when three windows are full.
class DetectionEngine {
 public:
  explicit DetectionEngine(unsigned window_size) : db_(window_size) {}

  std::optional<IdentifyResult> insert_committed(DbEntry e);
  const DetectionBuffer& buffer() const { return db_; }
  void clear() { db_.clear(); }

 private:
  DetectionBuffer db_;
};

// Micro-op cache tags -------------------------------------------------------------

class TagStore {
 public:
  void tag(Pc pc) { tagged_.insert(pc); }
  bool is_tagged(Pc pc) const { return tagged_.count(pc) != 0; }
  void reset(Pc pc) { tagged_.erase(pc); }
  void reset(std::span<const Pc> pcs) {
    for (Pc pc : pcs) tagged_.erase(pc);
  }
  void reset_all() { tagged_.clear(); }
  std::size_t size() const { return tagged_.size(); }

 private:
  std::unordered_set<Pc> tagged_;
};

void tag_uop_cache(const IdentifyResult& result, TagStore& tags);

/// Streams a trace through rename (RPM) and commit (detection buffer) in
/// program order with no timing model, using embedded predictions. Returns
/// every seq tagged ineffectual, ascending.
std::vector<Seq> detect_stream(const Trace& trace, unsigned window_size, PivotType type,
                               RegisterSpace regs = {});

}  // namespace ineff

#endif  // INEFF_DETECTION_HPP
