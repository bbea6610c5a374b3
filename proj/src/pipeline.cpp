#include "ineff/pipeline.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <unordered_set>

namespace ineff {

std::string_view to_string(RollbackCause c) {
  switch (c) {
    case RollbackCause::kTypeA: return "type_a";
    case RollbackCause::kTypeB: return "type_b";
    case RollbackCause::kBottleneck: return "bottleneck";
  }
  return "?";
}

bool BottleneckMonitor::observe(bool irs_full_stall) {
  if (!irs_full_stall) {
    run_ = 0;
    return false;
  }
  if (++run_ < k_) return false;
  run_ = 0;
  return true;
}

std::uint64_t SimStats::type_a_total() const {
  std::uint64_t n = 0;
  for (auto v : type_a) n += v;
  return n;
}

std::uint64_t SimStats::rollbacks() const { return type_a_total() + type_b; }

double SimStats::mpki() const {
  return committed ? 1000.0 * static_cast<double>(type_a_total()) / static_cast<double>(committed)
                   : 0.0;
}

double SimStats::mpki(ControlKind k) const {
  return committed ? 1000.0 * static_cast<double>(type_a[static_cast<std::size_t>(k)]) /
                         static_cast<double>(committed)
                   : 0.0;
}

double SimStats::ineffectual_fraction() const {
  return committed ? static_cast<double>(committed_ineffectual) / static_cast<double>(committed)
                   : 0.0;
}

double SimStats::ipipe_issue_rate() const {
  return cycles ? static_cast<double>(ipipe_issued) / static_cast<double>(cycles) : 0.0;
}

double SimStats::ipc() const {
  return cycles ? static_cast<double>(committed) / static_cast<double>(cycles) : 0.0;
}

std::size_t SimResult::tagged_count() const {
  return static_cast<std::size_t>(std::count(tagged.begin(), tagged.end(), std::uint8_t{1}));
}

double SimResult::tagged_fraction() const {
  return tagged.empty() ? 0.0
                        : static_cast<double>(tagged_count()) / static_cast<double>(tagged.size());
}

PredictorKind default_predictor_kind(const Trace& trace) {
  for (const auto& op : trace) {
    if (is_control(op.op_class) && !op.has_embedded_prediction()) return PredictorKind::kGshare;
  }
  return PredictorKind::kTraceEmbedded;
}

namespace {

struct Operand {
  RegIndex reg = 0;
  std::optional<Seq> producer;  // in-flight producer at rename; none means committed state
};

struct RobEntry {
  const MicroOp* op = nullptr;
  Seq seq = 0;
  bool steered = false;
  bool ri_pivot = false;
  bool issued = false;
  bool completed = false;
  bool value_ready = false;
  bool allocates_prf = false;
  bool mispredicted = false;
  std::optional<RegIndex> writes;  // register this entry maps at rename
  std::vector<Operand> operands;   // sources, then the old destination for a conditional move
  std::uint64_t earliest_issue = 0;
  std::uint64_t value = 0;
  Prediction prediction;
  std::uint64_t history_before = 0;
};

struct PendingPrediction {
  Seq seq = 0;
  Prediction prediction;
  std::uint64_t history_before = 0;
};

struct Writeback {
  std::uint64_t cycle;
  Seq seq;
};

class Core {
 public:
  Core(const Trace& trace, const PipelineConfig& cfg, const SimOptions& opts)
      : trace_(trace),
        cfg_(cfg),
        opts_(opts),
        bp_(resolve_predictor(trace, cfg)),
        rpm_(cfg.arch_regs, cfg.window_size),
        engine_(cfg.window_size),
        monitor_(cfg.bottleneck_k),
        map_(cfg.arch_regs),
        arch_(ArchState::initial(RegisterSpace{cfg.arch_regs})) {
    const std::size_t n = trace.size();
    result_.tagged.assign(n, 0);
    result_.prediction_correct.assign(n, 1);
    result_.steered_at_commit.assign(n, 0);
  }

  SimResult run() {
    const std::size_t n = trace_.size();
    const std::uint64_t limit = opts_.deadlock_factor * cfg_.rob_capacity();
    while (committed_ < n) {
      cycle_events_.clear();
      const std::size_t renamed = rename_stage();
      const unsigned p_issued = primary_stage();
      const unsigned i_issued = ipipe_stage();
      const std::size_t retired = cfg_.single_cluster() ? baseline_commit() : mdre_and_commit();
      sample_occupancy();
      if (opts_.cycle_log) log_cycle(renamed, p_issued, i_issued, retired);
      if (retired) last_commit_cycle_ = cycle_;
      if (cycle_ - last_commit_cycle_ > limit) throw SimulationError(deadlock_dump());
      ++cycle_;
    }
    close_stall_episode();
    result_.stats.cycles = cycle_;
    result_.stats.accuracy = bp_.accuracy();
    result_.final_state = arch_;
    result_.final_tag_count = tags_.size();
    return std::move(result_);
  }

 private:
  static PredictorConfig resolve_predictor(const Trace& trace, const PipelineConfig& cfg) {
    PredictorConfig p = cfg.predictor;
    if (!cfg.predictor_kind_set) p.kind = default_predictor_kind(trace);
    return p;
  }

  // ROB helpers ---------------------------------------------------------------

  Seq head_seq() const { return rob_.front().seq; }
  bool in_rob(Seq s) const {
    return !rob_.empty() && s >= head_seq() && s < head_seq() + rob_.size();
  }
  RobEntry& entry(Seq s) { return rob_[s - head_seq()]; }

  unsigned latency(const MicroOp& op) const {
    return op.latency.value_or(cfg_.latency_of(op.op_class));
  }

  std::uint64_t operand_value(const Operand& o) {
    if (o.producer && in_rob(*o.producer)) return entry(*o.producer).value;
    return arch_.regs[o.reg];
  }

  bool operand_ready(const Operand& o) {
    return !o.producer || !in_rob(*o.producer) || entry(*o.producer).completed;
  }

  // Youngest older in-flight store to the same address, if any.
  RobEntry* forwarding_store(const RobEntry& load) {
    for (Seq s = load.seq; s-- > head_seq();) {
      RobEntry& e = entry(s);
      if (e.op->op_class == OpClass::kStore && e.op->mem_addr == load.op->mem_addr) return &e;
    }
    return nullptr;
  }

  std::uint64_t compute(RobEntry& e) {
    const MicroOp& op = *e.op;
    if (op.op_class == OpClass::kLoad) {
      if (RobEntry* st = forwarding_store(e)) return load_value(st->value);
      return load_value(arch_.read_mem(*op.mem_addr));
    }
    std::vector<std::uint64_t> vals;
    vals.reserve(e.operands.size());
    for (const auto& o : e.operands) vals.push_back(operand_value(o));
    if (op.op_class == OpClass::kPredicatedAlu && !e.steered) {
      // Conditional move: the last operand is the old destination value.
      const std::uint64_t old = vals.back();
      vals.pop_back();
      return op.ctrl->actual_pred_false ? old : compute_value(op, vals);
    }
    return compute_value(op, vals);
  }

  // Rename ------------------------------------------------------------------------

  void ensure_prediction(const MicroOp& op) {
    if (pending_ && pending_->seq == op.seq) return;
    PendingPrediction p;
    p.seq = op.seq;
    p.history_before = bp_.checkpoint();
    if (is_control(op.op_class)) p.prediction = bp_.predict(op);
    pending_ = p;
  }

  bool should_steer(const MicroOp& op) const {
    if (cfg_.single_cluster()) return false;
    if (is_memory(op.op_class) || op.op_class == OpClass::kNop) return false;
    if (!tags_.is_tagged(op.static_pc) || !seen_.count(op.static_pc)) return false;
    if (op.op_class == OpClass::kPredicatedAlu) return pending_->prediction.pred_false;
    return true;
  }

  std::vector<Operand> gather_operands(const MicroOp& op, bool steer) const {
    std::vector<Operand> out;
    out.reserve(op.srcs.size() + 1);
    for (RegIndex r : op.srcs) out.push_back({r, map_[r]});
    if (op.op_class == OpClass::kPredicatedAlu && !steer && op.dest) {
      out.push_back({*op.dest, map_[*op.dest]});
    }
    return out;
  }

  std::size_t prf_free() const {
    const std::size_t reserved = cfg_.arch_regs + prf_inflight_;
    return cfg_.prf_int > reserved ? cfg_.prf_int - reserved : 0;
  }

  std::size_t rename_stage() {
    std::size_t renamed = 0;
    bool irs_stall = false;
    const std::size_t n = trace_.size();
    if (cycle_ >= fetch_resume_ && !waiting_on_) {
      unsigned eff = 0;
      unsigned ineff = 0;
      while (next_ < n && rob_.size() < cfg_.rob_capacity()) {
        const MicroOp& op = trace_[next_];
        ensure_prediction(op);
        const bool steer = should_steer(op);
        std::vector<Operand> operands = gather_operands(op, steer);
        if (steer) {
          if (ineff >= cfg_.ipipe_width) break;
          if (irs_.size() >= cfg_.irs_entries) {
            irs_stall = true;
            break;
          }
        } else {
          if (eff >= cfg_.rename_width) break;
          if (rs_.size() >= cfg_.primary_rs_entries) break;
          if (op.dest && prf_free() == 0) break;
          // An effectual op needing a value that only the I-pipe holds.
          for (const auto& o : operands) {
            if (o.producer && in_rob(*o.producer) && entry(*o.producer).steered) {
              const Pc producer_pc = entry(*o.producer).op->static_pc;
              ++result_.stats.type_b;
              rollback(RollbackCause::kTypeB, ControlKind::kBranch, op.seq, producer_pc);
              observe_stall(false);
              return renamed;
            }
          }
        }
        allocate(op, steer, std::move(operands));
        ++renamed;
        steer ? ++ineff : ++eff;
        const RobEntry& e = rob_.back();
        if (!steer && e.mispredicted &&
            (op.op_class == OpClass::kCondBranch || op.op_class == OpClass::kIndirectJump)) {
          waiting_on_ = op.seq;
          break;
        }
      }
    }
    observe_stall(irs_stall);
    return renamed;
  }

  void allocate(const MicroOp& op, bool steer, std::vector<Operand> operands) {
    RobEntry e;
    e.op = &op;
    e.seq = op.seq;
    e.steered = steer;
    e.operands = std::move(operands);
    e.earliest_issue = cycle_ + 1;
    e.history_before = pending_->history_before;
    if (is_control(op.op_class)) {
      e.prediction = pending_->prediction;
      e.mispredicted = !e.prediction.correct_for(op);
    }
    pending_.reset();
    if (!(steer && op.op_class == OpClass::kPredicatedAlu)) e.writes = op.dest;
    e.allocates_prf = !steer && e.writes.has_value();
    if (e.allocates_prf) ++prf_inflight_;

    std::vector<RegIndex> reads;
    reads.reserve(e.operands.size());
    for (const auto& o : e.operands) reads.push_back(o.reg);
    const auto marked = rpm_.observe_rename(op.seq, reads, e.writes);
    if (e.writes) map_[*e.writes] = op.seq;

    rob_.push_back(std::move(e));
    if (marked && in_rob(*marked) && *marked != op.seq) entry(*marked).ri_pivot = true;
    if (steer) {
      irs_.push_back(op.seq);
      ++result_.stats.steered;
    } else {
      rs_.push_back(op.seq);
    }
    ++next_;
  }

  void observe_stall(bool stalled) {
    if (stalled && monitor_.current_run() == 0) stall_start_ = cycle_;
    const std::uint64_t before = monitor_.current_run();
    if (monitor_.observe(stalled)) {
      result_.stall_episodes.push_back({stall_start_, before + 1, true});
      ++result_.stats.bottleneck_flushes;
      rollback(RollbackCause::kBottleneck, ControlKind::kBranch, head_seq(), std::nullopt);
      return;
    }
    if (!stalled && before > 0) result_.stall_episodes.push_back({stall_start_, before, false});
  }

  void close_stall_episode() {
    if (monitor_.current_run() > 0) {
      result_.stall_episodes.push_back({stall_start_, monitor_.current_run(), false});
    }
  }

  // Primary cluster -------------------------------------------------------------

  bool memory_ready(RobEntry& e) {
    if (e.op->op_class != OpClass::kLoad) return true;
    const RobEntry* st = forwarding_store(e);
    return !st || st->completed;
  }

  unsigned primary_stage() {
    while (!completions_.empty() && completions_.top().first <= cycle_) {
      const Seq s = completions_.top().second;
      completions_.pop();
      entry(s).completed = true;
      if (waiting_on_ == s) {
        waiting_on_.reset();
        fetch_resume_ = cycle_ + cfg_.redirect_penalty;
        ++result_.stats.effectual_redirects;
      }
    }
    unsigned issued = 0;
    for (auto it = rs_.begin(); it != rs_.end() && issued < cfg_.primary_issue_width;) {
      RobEntry& e = entry(*it);
      bool ready = e.earliest_issue <= cycle_ && memory_ready(e);
      for (const auto& o : e.operands) {
        if (!ready) break;
        ready = operand_ready(o);
      }
      if (!ready) {
        ++it;
        continue;
      }
      for (const auto& o : e.operands) {
        if (o.producer && in_rob(*o.producer) && entry(*o.producer).steered) {
          ++result_.stats.primary_iprf_reads;
        }
      }
      e.value = compute(e);
      e.value_ready = true;
      e.issued = true;
      completions_.emplace(cycle_ + latency(*e.op), e.seq);
      ++issued;
      it = rs_.erase(it);
    }
    result_.stats.primary_issued += issued;
    return issued;
  }

  // I-pipe ------------------------------------------------------------------------

  unsigned ipipe_stage() {
    if (cfg_.single_cluster()) return 0;
    const bool perfect = cfg_.mode == Mode::kPerfectIpipe;
    unsigned writes_left = cfg_.iprf_write_ports;
    for (auto it = ipipe_wb_.begin(); it != ipipe_wb_.end();) {
      if (it->cycle > cycle_) {
        ++it;
        continue;
      }
      RobEntry& e = entry(it->seq);
      if (e.writes && !perfect) {
        if (writes_left == 0) {
          ++result_.stats.iprf_write_conflicts;
          ++it;
          continue;
        }
        --writes_left;
      }
      e.completed = true;
      it = ipipe_wb_.erase(it);
    }

    unsigned issued = 0;
    unsigned iprf_reads = cfg_.iprf_read_ports;
    unsigned mprf_reads = cfg_.mprf_read_ports;
    while (!irs_.empty() && issued < cfg_.ipipe_width) {
      RobEntry& e = entry(irs_.front());
      if (e.earliest_issue > cycle_) break;
      if (!perfect) {
        unsigned need_i = 0;
        unsigned need_m = 0;
        bool ready = true;
        for (const auto& o : e.operands) {
          ready = ready && operand_ready(o);
          const bool from_iprf = o.producer && in_rob(*o.producer) && entry(*o.producer).steered;
          from_iprf ? ++need_i : ++need_m;
        }
        if (!ready) break;
        // The first op of a cycle may always go, so wide ops cannot starve.
        if (issued > 0 && (need_i > iprf_reads || need_m > mprf_reads)) break;
        iprf_reads -= std::min(iprf_reads, need_i);
        mprf_reads -= std::min(mprf_reads, need_m);
        e.value = compute(e);
        e.value_ready = true;
      }
      if (last_ipipe_issue_ && e.seq <= *last_ipipe_issue_) ++result_.stats.ipipe_order_violations;
      last_ipipe_issue_ = e.seq;
      e.issued = true;
      ipipe_wb_.push_back({cycle_ + latency(*e.op), e.seq});
      irs_.pop_front();
      ++issued;
    }
    result_.stats.ipipe_issued += issued;
    return issued;
  }

  // MDRE and commit ---------------------------------------------------------------

  std::size_t mdre_and_commit() {
    if (rob_.empty()) return 0;
    const std::size_t n = trace_.size();
    const Seq w = cfg_.window_size;
    const Seq head = head_seq();
    if (head % w != 0) ++result_.stats.portion_size_violations;
    const Seq a_end = std::min<Seq>(head + w, n);
    const Seq b_end = std::min<Seq>(a_end + w, n);
    if (next_ < b_end) return 0;
    for (Seq s = a_end; s < b_end; ++s) {
      if (!entry(s).completed) return 0;
    }
    // Portion A was verified as Portion B before, except after a flush or
    // at the tail of the trace, so check it too.
    for (Seq s = head; s < b_end; ++s) {
      const RobEntry& e = entry(s);
      if (!e.steered || !e.mispredicted) continue;
      if (s < a_end && !e.completed) return 0;
      const bool full = a_end - head == w && b_end - a_end == w;
      if (!full && b_end < n) ++result_.stats.portion_size_violations;
      const ControlKind kind = *control_kind(e.op->op_class);
      ++result_.stats.type_a[static_cast<std::size_t>(kind)];
      rollback(RollbackCause::kTypeA, kind, s, std::nullopt);
      return 0;
    }
    for (Seq s = head; s < a_end; ++s) {
      if (!entry(s).completed) return 0;
    }
    if ((a_end - head != w || b_end - a_end != w) && b_end < n) {
      ++result_.stats.portion_size_violations;
    }
    for (Seq s = head; s < a_end; ++s) commit_head();
    return a_end - head;
  }

  std::size_t baseline_commit() {
    std::size_t retired = 0;
    while (!rob_.empty() && retired < cfg_.commit_width() && rob_.front().completed) {
      commit_head();
      ++retired;
    }
    return retired;
  }

  PivotFlags pivot_flags(const RobEntry& e) const {
    const MicroOp& op = *e.op;
    PivotFlags f;
    if (admits(cfg_.pivot_type, PivotKind::kControl) && is_control(op.op_class) && !e.mispredicted) {
      f.control = op.op_class != OpClass::kPredicatedAlu || op.ctrl->actual_pred_false;
    }
    f.data = admits(cfg_.pivot_type, PivotKind::kData) && e.ri_pivot &&
             op.op_class != OpClass::kLoad && op.effective_dest().has_value();
    return f;
  }

  void commit_head() {
    RobEntry& e = rob_.front();
    const MicroOp& op = *e.op;
    if (!e.value_ready) {
      // Perfect I-pipe: operands are all architectural by now.
      std::vector<std::uint64_t> vals;
      for (const auto& o : e.operands) vals.push_back(arch_.regs[o.reg]);
      e.value = compute_value(op, vals);
      e.value_ready = true;
    }
    if (e.writes) arch_.regs[*e.writes] = e.value;
    if (op.op_class == OpClass::kStore) arch_.mem[*op.mem_addr] = e.value;
    if (is_control(op.op_class)) {
      if (!e.steered || opts_.train_ineffectual) bp_.train(op, e.prediction);
      result_.prediction_correct[op.seq] = e.mispredicted ? 0 : 1;
    }
    if (e.allocates_prf) --prf_inflight_;
    if (e.writes && map_[*e.writes] == e.seq) map_[*e.writes].reset();
    seen_.insert(op.static_pc);
    result_.steered_at_commit[op.seq] = e.steered ? 1 : 0;
    ++result_.stats.committed;
    if (e.steered) ++result_.stats.committed_ineffectual;
    ++committed_;

    auto identified = engine_.insert_committed(DbEntry::from_committed(op, pivot_flags(e)));
    rob_.pop_front();
    if (!identified) return;
    ++result_.stats.identifications;
    result_.stats.tagged_records += identified->tagged.size();
    tag_uop_cache(*identified, tags_);
    for (const auto& t : identified->tagged) {
      result_.tagged[t.seq] = 1;
      if (opts_.record_tags) result_.tag_log.push_back(t);
    }
  }

  // Recovery ------------------------------------------------------------------------

  void rollback(RollbackCause cause, ControlKind kind, Seq culprit, std::optional<Pc> extra_pc) {
    const Seq head = head_seq();
    const Seq w = cfg_.window_size;
    const Seq a_end = std::min<Seq>(head + w, next_);
    const Seq b_end = std::min<Seq>(a_end + w, next_);
    if (cause == RollbackCause::kBottleneck) {
      tags_.reset_all();
    } else {
      for (Seq s = head; s < b_end; ++s) tags_.reset(entry(s).op->static_pc);
      if (extra_pc) tags_.reset(*extra_pc);
    }
    bp_.restore(rob_.front().history_before);

    RollbackEvent ev;
    ev.cycle = cycle_;
    ev.cause = cause;
    ev.kind = kind;
    ev.culprit = culprit;
    ev.target = head;
    ev.portion_a = a_end - head;
    ev.portion_b = b_end - a_end;
    ev.tags_after = tags_.size();
    result_.rollbacks.push_back(ev);
    cycle_events_.push_back(std::string(to_string(cause)));

    rob_.clear();
    rs_.clear();
    irs_.clear();
    ipipe_wb_.clear();
    completions_ = {};
    std::fill(map_.begin(), map_.end(), std::nullopt);
    rpm_.clear();
    prf_inflight_ = 0;
    waiting_on_.reset();
    pending_.reset();
    last_ipipe_issue_.reset();
    monitor_.reset();
    next_ = head;
    fetch_resume_ = cycle_ + cfg_.redirect_penalty;
  }

  // Reporting -----------------------------------------------------------------------

  void sample_occupancy() {
    if (cfg_.single_cluster()) return;
    std::size_t b = irs_.size() * (kOccupancyBuckets - 1) / cfg_.irs_entries;
    result_.stats.irs_occupancy[std::min(b, kOccupancyBuckets - 1)]++;
  }

  void log_cycle(std::size_t renamed, unsigned p, unsigned i, std::size_t retired) {
    std::ostream& os = *opts_.cycle_log;
    if (cycle_ == 0) os << "cycle,renamed,primary_issued,ipipe_issued,committed,rob,rs,irs,event\n";
    os << cycle_ << ',' << renamed << ',' << p << ',' << i << ',' << retired << ',' << rob_.size()
       << ',' << rs_.size() << ',' << irs_.size() << ',';
    for (std::size_t k = 0; k < cycle_events_.size(); ++k) os << (k ? ";" : "") << cycle_events_[k];
    os << '\n';
  }

  std::string deadlock_dump() const {
    std::ostringstream os;
    os << "no commit for " << (cycle_ - last_commit_cycle_) << " cycles at cycle " << cycle_
       << ": committed=" << committed_ << " next_rename=" << next_ << " rob=" << rob_.size()
       << " rs=" << rs_.size() << " irs=" << irs_.size() << " pending_wb=" << ipipe_wb_.size()
       << " prf_inflight=" << prf_inflight_;
    if (waiting_on_) os << " waiting_on=" << *waiting_on_;
    if (!rob_.empty()) {
      const RobEntry& h = rob_.front();
      os << " head{seq=" << h.seq << " class=" << to_string(h.op->op_class)
         << " steered=" << h.steered << " issued=" << h.issued << " completed=" << h.completed
         << "}";
    }
    return os.str();
  }

  const Trace& trace_;
  const PipelineConfig& cfg_;
  const SimOptions& opts_;
  BranchPredictor bp_;
  RegisterProducerMap rpm_;
  DetectionEngine engine_;
  TagStore tags_;
  BottleneckMonitor monitor_;
  std::unordered_set<Pc> seen_;

  std::vector<std::optional<Seq>> map_;
  ArchState arch_;
  std::deque<RobEntry> rob_;
  std::vector<Seq> rs_;
  std::deque<Seq> irs_;
  std::vector<Writeback> ipipe_wb_;
  std::priority_queue<std::pair<std::uint64_t, Seq>, std::vector<std::pair<std::uint64_t, Seq>>,
                      std::greater<>>
      completions_;
  std::optional<PendingPrediction> pending_;
  std::optional<Seq> waiting_on_;
  std::optional<Seq> last_ipipe_issue_;

  std::uint64_t cycle_ = 0;
  std::uint64_t fetch_resume_ = 0;
  std::uint64_t last_commit_cycle_ = 0;
  std::uint64_t stall_start_ = 0;
  std::size_t prf_inflight_ = 0;
  Seq next_ = 0;
  std::size_t committed_ = 0;
  std::vector<std::string> cycle_events_;
  SimResult result_;
};

}  // namespace

SimResult simulate(const Trace& trace, const PipelineConfig& config, const SimOptions& options) {
  config.validate();
  for (std::size_t i = 0; i < trace.size(); ++i) {
    if (trace[i].seq != i) throw TraceError("seq numbers must be dense from 0", 0);
    validate_op(trace[i], RegisterSpace{config.arch_regs});
  }
  Core core(trace, config, options);
  return core.run();
}

}  // namespace ineff
