#include "cxlgpu/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <unordered_map>

#include "cxlgpu/event_queue.hpp"

namespace cxlgpu {

namespace {

using ReadDone = std::function<void(std::uint64_t)>;
using WriteDone = std::function<void()>;

constexpr std::uint32_t kHeaderBytes = 16;

/// Memory behind the GPU's last-level cache. Completions are always delivered
/// through events, never synchronously.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual void read(Hpa line, ReadDone done) = 0;
  virtual void write(Hpa line, std::uint64_t value, WriteDone done) = 0;
  virtual void collect(std::map<Hpa, std::uint64_t>& image) const = 0;
};

// ---------------------------------------------------------------------------

class LocalBackend final : public Backend {
 public:
  LocalBackend(EventQueue& ev, const GpuSettings& gpu) : ev_(ev), gpu_(gpu) {}

  void read(Hpa line, ReadDone done) override {
    auto it = data_.find(line);
    const std::uint64_t v = it == data_.end() ? 0 : it->second;
    ev_.schedule_in(gpu_.read_ns, [done = std::move(done), v] { done(v); });
  }
  void write(Hpa line, std::uint64_t value, WriteDone done) override {
    data_[line] = value;
    ev_.schedule_in(gpu_.write_ns, std::move(done));
  }
  void collect(std::map<Hpa, std::uint64_t>& image) const override {
    for (const auto& [a, v] : data_) image[a] = v;
  }

 private:
  EventQueue& ev_;
  GpuSettings gpu_;
  std::unordered_map<Hpa, std::uint64_t> data_;
};

// ---------------------------------------------------------------------------

class UvmBackend final : public Backend {
 public:
  UvmBackend(EventQueue& ev, UvmConfig cfg) : ev_(ev), model_(cfg) {}

  void read(Hpa line, ReadDone done) override {
    const auto a = access(line, false, 0);
    ev_.schedule_at(a.completion, [done = std::move(done), v = a.value] { done(v); });
  }
  void write(Hpa line, std::uint64_t value, WriteDone done) override {
    const auto a = access(line, true, value);
    ev_.schedule_at(a.completion, std::move(done));
  }
  void collect(std::map<Hpa, std::uint64_t>& image) const override {
    for (const auto& [a, v] : model_.image()) image[a] = v;
  }

  const UvmModel& model() const { return model_; }
  const std::vector<UvmAccessRecord>& records() const { return records_; }

 private:
  UvmModel::Access access(Hpa line, bool store, std::uint64_t value) {
    const Ns now = ev_.now();
    const auto a = model_.access(now, line, store, value);
    records_.push_back({a.completion - now, a.faulted, a.joined});
    return a;
  }

  EventQueue& ev_;
  UvmModel model_;
  std::vector<UvmAccessRecord> records_;
};

// ---------------------------------------------------------------------------

/// One CXL root port with its link and endpoint. Loads flow through the SR
/// queue and SR reader; writes go straight to the memory queue. Requests the
/// queues cannot take wait in an upstream FIFO that keeps arrival order.
class RootPort {
 public:
  RootPort(EventQueue& ev, const ScenarioConfig& cfg, std::uint32_t index, SrPolicy policy, bool ds)
      : ev_(ev),
        index_(index),
        gpu_(cfg.gpu),
        link_(cfg.link),
        hop_(cfg.link.controller_rtt_ns / 2),
        srq_(SrQueueConfig{policy, cfg.sr.sr_capacity, cfg.sr.mem_capacity, cfg.sr.ring_capacity}),
        ep_(ev, cfg.endpoints[index].endpoint_config(),
            [this](const FlitMsg& resp) { on_endpoint_response(resp); },
            [this] { on_credit(); }),
        credits_(cfg.endpoints[index].ingress_capacity) {
    if (ds) {
      DsConfig dc = cfg.ds;
      if (dc.slow_threshold_ns == 0) {
        const Ns nominal = cfg.link.controller_rtt_ns + ep_.config().media.write_time(kRequestBytes) +
                           serialize(kHeaderBytes + kRequestBytes) + serialize(kHeaderBytes);
        dc.slow_threshold_ns = 2 * nominal;
      }
      ds_.emplace(dc);
    }
  }

  RootPort(const RootPort&) = delete;
  RootPort& operator=(const RootPort&) = delete;

  void load(Hpa line, ReadDone done) {
    if (ds_) {
      if (auto v = ds_->intercept_load(line)) {
        ++ds_intercepts_;
        ev_.schedule_in(gpu_.read_ns, [done = std::move(done), v = *v] { done(v); });
        return;
      }
    }
    const std::uint64_t tag = next_tag_++;
    outstanding_.emplace(tag, Outstanding{std::move(done), {}, 0, WriteKind::kNone});
    enqueue(MemRequest::load(line, tag, ev_.now()));
  }

  void store(Hpa line, std::uint64_t value, WriteDone done) {
    if (!ds_) {
      write_through(line, value, std::move(done), WriteKind::kDemand);
      return;
    }
    const bool can_issue = srq_.mem_has_space() && upstream_.empty();
    switch (ds_->on_store(line, value, ev_.now(), can_issue)) {
      case DsController::StoreAction::kDualWrite: {
        ++ds_dual_writes_;
        const std::uint64_t tag = next_tag_++;
        outstanding_.emplace(tag, Outstanding{{}, {}, 0, WriteKind::kDual});
        if (!admit(MemRequest::store(line, tag, value, ev_.now()))) {
          throw SimulationError("dual write found no memory-queue slot");
        }
        ev_.schedule_in(gpu_.write_ns, std::move(done));
        break;
      }
      case DsController::StoreAction::kBuffered:
      case DsController::StoreAction::kUpdatedInBuffer:
        ++ds_buffered_;
        ev_.schedule_in(gpu_.write_ns, std::move(done));
        break;
      case DsController::StoreAction::kWriteThrough:
        write_through(line, value, std::move(done), WriteKind::kThrough);
        return;
    }
    pump();
  }

  const Endpoint& endpoint() const { return ep_; }
  const SrQueueLogic& queues() const { return srq_; }
  const DsController* ds() const { return ds_ ? &*ds_ : nullptr; }

  void check_drained() const {
    if (!upstream_.empty() || !outstanding_.empty() || !send_fifo_.empty() || srq_.mem_depth() != 0 ||
        srq_.sr_depth() != 0) {
      throw SimulationError("port " + std::to_string(index_) + " still holds requests at the end");
    }
    if (ds_ && !ds_->buffer().empty()) {
      throw SimulationError("deterministic-store buffer not drained at the end");
    }
  }

  PortReport report() const {
    PortReport r;
    r.index = index_;
    r.media = ep_.config().media.kind;
    r.policy = std::string(to_string(srq_.config().policy));
    if (const LineCache* c = ep_.cache()) {
      r.demand_hits = c->hits();
      r.demand_misses = c->misses();
      r.hit_rate = c->hit_rate();
      r.prefetch_fills = c->prefetch_fills();
    }
    r.endpoint = ep_.counters();
    r.sr = srq_.counters();
    if (const GcController* gc = ep_.gc()) r.gc_windows = gc->windows();
    r.ingress_series = ep_.ingress_series();
    const auto& s = r.ingress_series;
    for (std::size_t i = 0; i < s.size(); ++i) {
      r.max_ingress_util = std::max(r.max_ingress_util, s[i].second);
      const Ns from = s[i].first;
      const Ns to = i + 1 < s.size() ? s[i + 1].first : ~Ns{0};
      for (const auto& w : r.gc_windows) {
        if (from < w.end && to > w.start) {
          r.max_ingress_util_in_gc = std::max(r.max_ingress_util_in_gc, s[i].second);
        }
      }
    }
    if (ds_) {
      r.ds_enabled = true;
      r.suspensions = ds_->suspensions();
      r.ds_overflows = ds_->overflows();
      r.ds_intercepts = ds_intercepts_;
      r.ds_dual_writes = ds_dual_writes_;
      r.ds_buffered = ds_buffered_;
      r.ds_flushes = ds_flushes_;
    }
    return r;
  }

 private:
  enum class WriteKind : std::uint8_t { kNone, kDemand, kDual, kFlush, kThrough };
  struct Outstanding {
    ReadDone on_read;
    WriteDone on_write;
    Ns admitted = 0;
    WriteKind kind = WriteKind::kNone;
  };

  Ns serialize(std::uint32_t bytes) const {
    return std::max<Ns>(1, static_cast<Ns>(std::ceil(bytes / link_.bytes_per_ns)));
  }
  static std::uint32_t wire_bytes(const FlitMsg& m) {
    return m.kind == MsgKind::kMemWr || m.kind == MsgKind::kRdResp ? kHeaderBytes + kRequestBytes
                                                                   : kHeaderBytes;
  }

  void write_through(Hpa line, std::uint64_t value, WriteDone done, WriteKind kind) {
    const std::uint64_t tag = next_tag_++;
    outstanding_.emplace(tag, Outstanding{{}, std::move(done), 0, kind});
    enqueue(MemRequest::store(line, tag, value, ev_.now()));
  }

  void enqueue(const MemRequest& req) {
    if (!upstream_.empty() || !admit(req)) upstream_.push_back(req);
    pump();
  }

  /// Places a request into the SR queue or memory queue.
  bool admit(const MemRequest& req) {
    if (req.is_load()) {
      auto res = srq_.on_load(req);
      if (res.spec) send_fifo_.push_back(*res.spec);
      switch (res.outcome) {
        case SrQueueLogic::LoadOutcome::kStalled:
          return false;
        case SrQueueLogic::LoadOutcome::kQueued:
          return true;
        case SrQueueLogic::LoadOutcome::kForwarded:
          to_memq(req);
          return true;
      }
    }
    if (!srq_.admit_direct(req)) return false;
    to_memq(req);
    return true;
  }

  void to_memq(const MemRequest& req) {
    outstanding_.at(req.tag).admitted = ev_.now();
    send_fifo_.push_back(req.is_load() ? FlitMsg::mem_rd(req.hpa, req.tag)
                                       : FlitMsg::mem_wr(req.hpa, req.tag, req.value));
  }

  void pump() {
    if (pumping_) {
      repump_ = true;
      return;
    }
    pumping_ = true;
    do {
      repump_ = false;
      bool progress = true;
      while (progress) {
        progress = false;
        while (!upstream_.empty() && admit(upstream_.front())) {
          upstream_.pop_front();
          progress = true;
        }
        while (auto load = srq_.sr_reader_step()) {
          to_memq(*load);
          progress = true;
        }
      }
      if (ds_ && upstream_.empty()) {
        for (const auto& item : ds_->flush_step(srq_.mem_free())) {
          const std::uint64_t tag = next_tag_++;
          outstanding_.emplace(tag, Outstanding{{}, {}, 0, WriteKind::kFlush});
          if (!srq_.admit_direct(MemRequest::store(item.hpa, tag, item.value, ev_.now()))) {
            throw SimulationError("flush found no memory-queue slot");
          }
          to_memq(MemRequest::store(item.hpa, tag, item.value, ev_.now()));
          ++ds_flushes_;
        }
      }
      transmit();
    } while (repump_);
    pumping_ = false;
  }

  void transmit() {
    while (!send_fifo_.empty()) {
      const FlitMsg& head = send_fifo_.front();
      const bool needs_credit = head.kind != MsgKind::kMemSpecRd;
      if (needs_credit && credits_ == 0) return;
      if (needs_credit) --credits_;
      const Ns start = std::max(ev_.now(), down_free_);
      down_free_ = start + serialize(wire_bytes(head));
      ev_.schedule_at(down_free_ + hop_, [this, msg = head] { ep_.accept(msg); });
      send_fifo_.pop_front();
    }
  }

  void on_credit() {
    ev_.schedule_in(hop_, [this] {
      ++credits_;
      pump();
    });
  }

  void on_endpoint_response(const FlitMsg& resp) {
    const Ns start = std::max(ev_.now(), up_free_);
    up_free_ = start + serialize(wire_bytes(resp));
    ev_.schedule_at(up_free_ + hop_, [this, resp] { on_response(resp); });
  }

  void on_response(const FlitMsg& resp) {
    const MemRequest req = srq_.on_response(resp);
    auto node = outstanding_.extract(resp.tag);
    if (node.empty()) throw SimulationError("response for an untracked request");
    Outstanding& o = node.mapped();
    const Ns now = ev_.now();
    if (ds_) {
      const DevLoad load = resp.devload.value_or(DevLoad::kLight);
      const Ns latency = now - o.admitted;
      switch (o.kind) {
        case WriteKind::kFlush:
          ds_->on_flush_complete(req.hpa, latency, load, now);
          break;
        case WriteKind::kDual:
        case WriteKind::kThrough:
          ds_->detect_slow_write(latency, load, now);
          break;
        default:
          ds_->observe_devload(load, now);
          break;
      }
      if (ds_->mode() == WriteMode::kSuspended && !polling_) {
        polling_ = true;
        ev_.schedule_in(ds_->config().poll_interval_ns, [this] { poll(); });
      }
    }
    if (o.on_read) o.on_read(resp.data);
    if (o.on_write) o.on_write();
    pump();
  }

  /// DevLoad probe; it bypasses the ingress queue in both directions.
  void poll() {
    ev_.schedule_in(hop_, [this] {
      const DevLoad load = ep_.current_devload();
      ev_.schedule_in(hop_, [this, load] {
        if (ds_->on_poll(load, ev_.now()) || ds_->mode() == WriteMode::kDual) {
          polling_ = false;
          pump();
        } else {
          ev_.schedule_in(ds_->config().poll_interval_ns, [this] { poll(); });
        }
      });
    });
  }

  EventQueue& ev_;
  std::uint32_t index_;
  GpuSettings gpu_;
  LinkSettings link_;
  Ns hop_;
  SrQueueLogic srq_;
  Endpoint ep_;
  std::optional<DsController> ds_;
  std::uint32_t credits_;
  Ns down_free_ = 0;
  Ns up_free_ = 0;
  std::deque<MemRequest> upstream_;
  std::deque<FlitMsg> send_fifo_;
  std::unordered_map<std::uint64_t, Outstanding> outstanding_;
  std::uint64_t next_tag_ = 1;
  bool pumping_ = false;
  bool repump_ = false;
  bool polling_ = false;
  std::uint64_t ds_intercepts_ = 0;
  std::uint64_t ds_dual_writes_ = 0;
  std::uint64_t ds_buffered_ = 0;
  std::uint64_t ds_flushes_ = 0;
};

class CxlBackend final : public Backend {
 public:
  CxlBackend(EventQueue& ev, const ScenarioConfig& cfg, const MemoryMap& map, SrPolicy policy, bool ds)
      : map_(map) {
    for (std::uint32_t i = 0; i < cfg.endpoints.size(); ++i) {
      ports_.push_back(std::make_unique<RootPort>(ev, cfg, i, policy, ds));
    }
  }

  void read(Hpa line, ReadDone done) override { port_for(line).load(line, std::move(done)); }
  void write(Hpa line, std::uint64_t value, WriteDone done) override {
    port_for(line).store(line, value, std::move(done));
  }
  void collect(std::map<Hpa, std::uint64_t>& image) const override {
    for (const auto& p : ports_) {
      for (const auto& [a, v] : p->endpoint().backing()) image[a] = v;
      if (const DsController* ds = p->ds()) {
        for (const auto& item : ds->buffer().snapshot()) image[item.hpa] = item.value;
      }
    }
  }

  const std::vector<std::unique_ptr<RootPort>>& ports() const { return ports_; }

 private:
  RootPort& port_for(Hpa line) {
    const auto d = map_.decode(line);
    if (!d || d->target.kind != TargetKind::kCxlPort) {
      throw ConfigError("trace address beyond the mapped device memory");
    }
    return *ports_[d->target.port];
  }

  const MemoryMap& map_;
  std::vector<std::unique_ptr<RootPort>> ports_;
};

// ---------------------------------------------------------------------------

SrPolicy effective_policy(const ScenarioConfig& cfg) {
  switch (cfg.mode) {
    case Mode::kCxl:
      return SrPolicy::kOff;
    case Mode::kCxlSr:
    case Mode::kCxlDs:
      return cfg.sr.policy == SrPolicy::kOff ? SrPolicy::kWindowed : cfg.sr.policy;
    default:
      return SrPolicy::kOff;
  }
}

std::uint64_t trace_footprint(const Trace& trace) {
  std::uint64_t top = 0;
  for (const auto& op : trace) {
    if (op.op != OpKind::kCompute) top = std::max<std::uint64_t>(top, align_down(op.addr, kRequestBytes) + kRequestBytes);
  }
  return top;
}

/// GPU front end, last-level cache and the selected memory backend.
class Simulation {
 public:
  Simulation(const ScenarioConfig& cfg, const Trace& trace, const RunOptions& opts)
      : cfg_(cfg), trace_(trace), opts_(opts), llc_(cfg.gpu.llc) {
    cfg_.validate();
    const std::uint64_t footprint = trace_footprint(trace);
    FabricLayout layout;
    layout.gpu_local_bytes = cfg_.gpu.local_bytes;
    layout.host_window_bytes = cfg_.host_window_bytes;
    if (cfg_.mode == Mode::kGpuDram) {
      // The ideal configuration has enough device memory for the workload.
      const std::uint64_t need = (footprint + kSpecUnitBytes - 1) / kSpecUnitBytes * kSpecUnitBytes;
      layout.gpu_local_bytes = std::max(layout.gpu_local_bytes, need);
    }
    for (const auto& ep : cfg_.endpoints) layout.endpoints.push_back({ep.size, ep.media, ep.base});
    map_ = enumerate_endpoints(layout);

    switch (cfg_.mode) {
      case Mode::kGpuDram:
        data_base_ = 0;
        backend_ = std::make_unique<LocalBackend>(ev_, cfg_.gpu);
        break;
      case Mode::kUvm:
      case Mode::kGds: {
        const Region* host = map_.find({TargetKind::kPcieHost, 0});
        data_base_ = host->base;
        if (footprint > host->size) throw ConfigError("trace footprint exceeds the host window");
        UvmConfig u;
        u.page_bytes = cfg_.uvm.page_bytes;
        u.resident_bytes = cfg_.gpu.local_bytes;
        u.intervention_ns = cfg_.uvm.intervention_ns;
        u.fault_servers = cfg_.uvm.fault_servers;
        u.backing = cfg_.mode == Mode::kUvm ? cfg_.uvm.host_path : cfg_.uvm.storage_path;
        u.local_read_ns = cfg_.gpu.read_ns;
        u.local_write_ns = cfg_.gpu.write_ns;
        auto b = std::make_unique<UvmBackend>(ev_, u);
        uvm_ = b.get();
        backend_ = std::move(b);
        break;
      }
      default: {
        const Region* first = map_.find({TargetKind::kCxlPort, 0});
        data_base_ = first->base;
        std::uint64_t mapped = 0;
        for (const auto& r : map_.regions()) {
          if (r.target.kind == TargetKind::kCxlPort && r.base == data_base_ + mapped) mapped += r.size;
        }
        if (footprint > mapped) throw ConfigError("trace footprint exceeds the contiguous device memory");
        auto b = std::make_unique<CxlBackend>(ev_, cfg_, map_, effective_policy(cfg_),
                                              cfg_.mode == Mode::kCxlDs);
        cxl_ = b.get();
        backend_ = std::move(b);
        break;
      }
    }
    ops_.resize(trace_.size());
    if (opts_.capture_values) load_values_.assign(trace_.size(), 0);
  }

  RunResult run() {
    ev_.schedule_at(0, [this] { try_issue(); });
    ev_.run();
    if (next_ != trace_.size() || outstanding_ != 0 || blocked_) {
      throw SimulationError("front end did not retire every operation");
    }
    if (cxl_) {
      for (const auto& p : cxl_->ports()) p->check_drained();
    }
    return finish();
  }

 private:
  struct OpRec {
    Hpa hpa = 0;
    Ns issued = 0;
    std::uint32_t parts = 0;
    bool is_load = true;
  };

  void wake(Ns when) {
    if (wake_at_ && *wake_at_ <= when) return;
    wake_at_ = when;
    ev_.schedule_at(when, [this, when] {
      if (wake_at_ == when) wake_at_.reset();
      try_issue();
    });
  }

  void try_issue() {
    const Ns now = ev_.now();
    while (!blocked_ && next_ < trace_.size()) {
      const TraceOp& op = trace_[next_];
      const Ns earliest = std::max(op.tick + slip_, issue_free_);
      if (earliest > now) {
        wake(earliest);
        return;
      }
      const bool is_mem = op.op != OpKind::kCompute;
      if (is_mem && outstanding_ >= cfg_.gpu.outstanding) return;
      slip_ = now - op.tick;
      const std::size_t i = next_++;
      if (!is_mem) {
        ++computes_;
        issue_free_ = now + op.size;
        end_time_ = std::max(end_time_, issue_free_);
        continue;
      }
      issue_free_ = now + cfg_.gpu.mem_issue_ns;
      ++outstanding_;
      OpRec& rec = ops_[i];
      rec.hpa = data_base_ + align_down(op.addr, kRequestBytes);
      rec.issued = now;
      rec.is_load = op.op == OpKind::kLoad;
      if (rec.is_load) {
        ++loads_;
      } else {
        ++stores_;
      }
      start_access(i);
    }
  }

  void start_access(std::size_t i) {
    OpRec& rec = ops_[i];
    const auto r = llc_.access(rec.hpa, !rec.is_load, store_value_for(i));
    switch (r.outcome) {
      case Llc::Outcome::kNoWay:
        blocked_ = i;
        return;
      case Llc::Outcome::kHit:
        if (rec.is_load && opts_.capture_values) load_values_[i] = r.value;
        ++rec.parts;
        ev_.schedule_in(cfg_.gpu.llc.hit_ns, [this, i] { part_done(i); });
        return;
      case Llc::Outcome::kPendingFill:
        ++rec.parts;
        fill_waiters_[rec.hpa].push_back(i);
        return;
      case Llc::Outcome::kMiss:
        break;
    }
    ++rec.parts;
    if (r.dirty_victim) ++rec.parts;
    if (rec.is_load) {
      fill_waiters_[rec.hpa].push_back(i);
      const Hpa line = rec.hpa;
      backend_->read(line, [this, line](std::uint64_t v) { on_fill(line, v); });
    } else {
      ev_.schedule_in(cfg_.gpu.llc.hit_ns, [this, i] { part_done(i); });
    }
    if (r.dirty_victim) {
      backend_->write(r.dirty_victim->line, r.dirty_victim->value, [this, i] { part_done(i); });
    }
  }

  void on_fill(Hpa line, std::uint64_t value) {
    llc_.complete_fill(line, value);
    auto node = fill_waiters_.extract(line);
    for (std::size_t i : node.mapped()) {
      const OpRec& rec = ops_[i];
      const std::uint64_t v = llc_.apply_merged(line, !rec.is_load, store_value_for(i));
      if (rec.is_load && opts_.capture_values) load_values_[i] = v;
      ev_.schedule_in(cfg_.gpu.llc.hit_ns, [this, i] { part_done(i); });
    }
    if (blocked_) {
      const std::size_t b = *blocked_;
      blocked_.reset();
      start_access(b);
      if (!blocked_) try_issue();
    }
  }

  void part_done(std::size_t i) {
    OpRec& rec = ops_[i];
    if (--rec.parts != 0) return;
    const Ns now = ev_.now();
    auto& series = rec.is_load ? load_latency_ : store_latency_;
    series.points.emplace_back(now, now - rec.issued);
    end_time_ = std::max(end_time_, now);
    --outstanding_;
    try_issue();
  }

  RunResult finish() {
    RunResult out;
    RunReport& r = out.report;
    r.scenario = cfg_.name;
    r.workload = opts_.workload_label;
    r.mode = cfg_.mode;
    r.mode_label = opts_.mode_label.empty() ? std::string(to_string(cfg_.mode)) : opts_.mode_label;
    r.seed = cfg_.seed;
    r.config = config_to_json(cfg_);
    r.memory_map = map_.regions();
    r.data_base = data_base_;
    r.end_time = end_time_;
    r.events = ev_.executed();
    r.ops = trace_.size();
    r.loads = loads_;
    r.stores = stores_;
    r.computes = computes_;
    r.max_slip = slip_;
    r.load_latency = std::move(load_latency_);
    r.store_latency = std::move(store_latency_);
    r.llc_hits = llc_.hits();
    r.llc_misses = llc_.misses();
    r.llc_writebacks = llc_.writebacks();
    if (cxl_) {
      for (const auto& p : cxl_->ports()) r.ports.push_back(p->report());
    }
    if (uvm_) {
      const UvmModel& m = uvm_->model();
      r.uvm.accesses = uvm_->records().size();
      r.uvm.faults = m.faults();
      r.uvm.joins = m.joins();
      r.uvm.evictions = m.evictions();
      bool any_fault = false;
      for (const auto& rec : uvm_->records()) {
        if (rec.faulted) {
          r.uvm.min_fault_latency = any_fault ? std::min(r.uvm.min_fault_latency, rec.latency) : rec.latency;
          any_fault = true;
        } else if (!rec.joined) {
          r.uvm.max_resident_latency = std::max(r.uvm.max_resident_latency, rec.latency);
        }
      }
      out.uvm_accesses = uvm_->records();
    }
    if (opts_.capture_values) {
      std::map<Hpa, std::uint64_t> image;
      backend_->collect(image);
      for (const auto& v : llc_.dirty_lines()) image[v.line] = v.value;
      for (const auto& [a, v] : image) out.final_image[a - data_base_] = v;
      out.load_values = std::move(load_values_);
    }
    return out;
  }

  ScenarioConfig cfg_;
  const Trace& trace_;
  RunOptions opts_;
  EventQueue ev_;
  MemoryMap map_;
  Hpa data_base_ = 0;
  Llc llc_;
  std::unique_ptr<Backend> backend_;
  CxlBackend* cxl_ = nullptr;
  UvmBackend* uvm_ = nullptr;

  std::vector<OpRec> ops_;
  std::unordered_map<Hpa, std::vector<std::size_t>> fill_waiters_;
  std::optional<std::size_t> blocked_;
  std::optional<Ns> wake_at_;
  std::size_t next_ = 0;
  std::uint32_t outstanding_ = 0;
  Ns slip_ = 0;
  Ns issue_free_ = 0;
  Ns end_time_ = 0;
  std::uint64_t loads_ = 0;
  std::uint64_t stores_ = 0;
  std::uint64_t computes_ = 0;
  LatencySeries load_latency_;
  LatencySeries store_latency_;
  std::vector<std::uint64_t> load_values_;
};

void normalize(RunReport& r, Ns reference) {
  r.reference_time = reference;
  r.normalized_time =
      reference == 0 ? 0.0 : static_cast<double>(r.end_time) / static_cast<double>(reference);
}

Ns reference_time(const ScenarioConfig& cfg, const Trace& trace) {
  ScenarioConfig ref = cfg;
  ref.mode = Mode::kGpuDram;
  RunOptions o;
  o.compute_reference = false;
  return Simulation(ref, trace, o).run().report.end_time;
}

}  // namespace

RunResult simulate(const ScenarioConfig& config, const Trace& trace, const RunOptions& options) {
  RunResult result = Simulation(config, trace, options).run();
  if (config.mode == Mode::kGpuDram) {
    normalize(result.report, result.report.end_time);
  } else if (options.compute_reference) {
    normalize(result.report, reference_time(config, trace));
  }
  return result;
}

std::vector<RunResult> compare(const ScenarioConfig& config, const std::vector<ModeSelection>& modes,
                               const Trace& trace, const RunOptions& options) {
  const Ns reference = reference_time(config, trace);
  std::vector<RunResult> out;
  for (const auto& sel : modes) {
    ScenarioConfig cfg = config;
    cfg.apply(sel);
    RunOptions o = options;
    o.compute_reference = false;
    o.mode_label = sel.label;
    RunResult r = simulate(cfg, trace, o);
    normalize(r.report, reference);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace cxlgpu
