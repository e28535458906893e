#include <algorithm>
#include <deque>
#include <unordered_set>

#include "pracsim/error.h"
#include "pracsim/workloads.h"

namespace pracsim {

TimingParams effective_timing(const SystemConfig& cfg) {
  if (uses_prac_timing(cfg.mitigation) && !cfg.timing.prac_adjusted) return apply_prac_adjustments(cfg.timing);
  return cfg.timing;
}

namespace {

// Retire-width limited core with a bounded instruction window. Reads hold
// their window slot until data returns; writes are posted.
class Core {
 public:
  Core(int id, const Trace* trace, const CoreConfig& cfg, std::uint64_t base, std::uint64_t region)
      : m_id(id), m_trace(trace), m_cfg(cfg), m_base(base), m_region(region) {
    load_record();
  }

  // Fetched work can retire in the same cycle: a core with no misses
  // sustains exactly `width` per cycle.
  void tick(Controller& ctrl, Cycle dram_now, std::uint64_t& next_id) {
    fetch(ctrl, dram_now, next_id);
    retire();
  }

  void complete(std::uint64_t id) { m_done.insert(id); }
  std::int64_t retired() const { return m_retired; }

 private:
  struct Slot {
    std::int64_t n;
    std::uint64_t read_id;  // 0 once the slot can retire
  };

  void load_record() {
    if (m_trace->empty()) {
      m_bubbles = INT64_MAX;
      return;
    }
    const auto& r = (*m_trace)[m_pos];
    m_bubbles = r.bubble_count;
  }

  void retire() {
    int budget = m_cfg.width;
    while (budget > 0 && !m_window.empty()) {
      Slot& s = m_window.front();
      if (s.read_id != 0) {
        auto it = m_done.find(s.read_id);
        if (it == m_done.end()) break;
        m_done.erase(it);
        s.read_id = 0;
      }
      std::int64_t take = std::min<std::int64_t>(s.n, budget);
      s.n -= take;
      budget -= static_cast<int>(take);
      m_retired += take;
      m_occupancy -= take;
      if (s.n == 0) m_window.pop_front();
    }
  }

  void push_ready(std::int64_t k) {
    if (!m_window.empty() && m_window.back().read_id == 0) {
      m_window.back().n += k;
    } else {
      m_window.push_back({k, 0});
    }
    m_occupancy += k;
  }

  void fetch(Controller& ctrl, Cycle dram_now, std::uint64_t& next_id) {
    int budget = m_cfg.width;
    while (budget > 0 && m_occupancy < m_cfg.window) {
      if (m_bubbles > 0) {
        std::int64_t k = std::min<std::int64_t>({m_bubbles, budget, m_cfg.window - m_occupancy});
        push_ready(k);
        if (m_bubbles != INT64_MAX) m_bubbles -= k;
        budget -= static_cast<int>(k);
        continue;
      }
      const auto& r = (*m_trace)[m_pos];
      if (!ctrl.can_accept(r.write)) break;
      Request req;
      req.id = next_id++;
      req.core = m_id;
      req.write = r.write;
      req.phys = m_base + (r.address % m_region);
      req.addr = ctrl.mapper().map(req.phys);
      req.arrival = dram_now;
      ctrl.enqueue(req);
      if (r.write) {
        push_ready(1);
      } else {
        m_window.push_back({1, req.id});
        ++m_occupancy;
      }
      --budget;
      m_pos = (m_pos + 1) % m_trace->size();
      load_record();
    }
  }

  int m_id;
  const Trace* m_trace;
  CoreConfig m_cfg;
  std::uint64_t m_base, m_region;
  std::size_t m_pos = 0;
  std::int64_t m_bubbles = 0;
  std::deque<Slot> m_window;
  std::int64_t m_occupancy = 0;
  std::int64_t m_retired = 0;
  std::unordered_set<std::uint64_t> m_done;
};

}  // namespace

SimReport run_cores(const std::vector<const Trace*>& traces, const SystemConfig& cfg) {
  if (traces.empty()) throw ConfigError("at least one core trace is required");
  if (cfg.core.width < 1 || cfg.core.window < 1) throw ConfigError("core width and window must be positive");
  if (cfg.cpu_ratio_num < cfg.cpu_ratio_den || cfg.cpu_ratio_den < 1)
    throw ConfigError("CPU clock must not be slower than the DRAM clock");
  if (cfg.stop.instructions < 1 || cfg.stop.max_cpu_cycles < 1) throw ConfigError("stop condition must be positive");
  validate(cfg.mitigation, cfg.n_rh);

  const TimingParams timing = effective_timing(cfg);
  DeviceConfig dc;
  dc.topology = cfg.topology;
  dc.timing = timing;
  dc.n_rh = cfg.n_rh;
  dc.safety_monitor = cfg.safety_monitor;
  if (uses_backoff(cfg.mitigation)) {
    auto p = *prac_part(cfg.mitigation);
    dc.prac = true;
    dc.abo_th = p.abo_th;
    dc.bo_n_refs = p.bo_n_refs;
    dc.bo_n_acts = p.bo_n_acts;
  }
  Device dev(dc);
  const int n = static_cast<int>(traces.size());
  Controller ctrl(cfg.controller, dev, cfg.mitigation,
                  make_controller_mitigation(cfg.mitigation, cfg.topology, timing, cfg.seed), n);

  const std::uint64_t slots = static_cast<std::uint64_t>(std::max(n, 4));
  const std::uint64_t region = ctrl.mapper().capacity() / slots;
  std::vector<Core> cores;
  cores.reserve(n);
  for (int i = 0; i < n; ++i) cores.emplace_back(i, traces[i], cfg.core, region * i, region);

  std::vector<std::int64_t> finish(n, -1);
  std::vector<Completion> done;
  std::uint64_t next_id = 1;
  Cycle dram = 0;
  std::int64_t cpu = 0;
  int acc = 0;
  int remaining = 0;
  for (int i = 0; i < n; ++i) remaining += i != cfg.attacker_core;

  while (cpu < cfg.stop.max_cpu_cycles && remaining > 0) {
    acc += cfg.cpu_ratio_den;
    while (acc >= cfg.cpu_ratio_num) {
      acc -= cfg.cpu_ratio_num;
      ctrl.tick(dram);
      done.clear();
      ctrl.collect(dram, done);
      for (auto& c : done) cores[c.core].complete(c.id);
      ++dram;
    }
    // Rotate which core goes first so none has standing priority for
    // freed queue slots.
    for (int k = 0; k < n; ++k) cores[static_cast<std::size_t>((cpu + k) % n)].tick(ctrl, dram, next_id);
    ++cpu;
    for (int i = 0; i < n; ++i) {
      if (finish[i] < 0 && cores[i].retired() >= cfg.stop.instructions) {
        finish[i] = cpu;
        remaining -= i != cfg.attacker_core;
      }
    }
  }

  SimReport rep;
  rep.n_rh = cfg.n_rh;
  rep.mechanism = mitigation_name(cfg.mitigation);
  rep.attack = cfg.attacker_core >= 0;
  rep.seed = cfg.seed;
  const auto& cs = ctrl.stats();
  for (int i = 0; i < n; ++i) {
    CoreResult r;
    r.attacker = i == cfg.attacker_core;
    if (finish[i] >= 0) {
      r.instructions = cfg.stop.instructions;
      r.cycles = finish[i];
    } else {
      r.instructions = cores[i].retired();
      r.cycles = cpu;
    }
    r.ipc_shared = r.cycles ? static_cast<double>(r.instructions) / static_cast<double>(r.cycles) : 0.0;
    r.row_misses = cs.row_misses[i];
    r.reads = cs.reads[i];
    r.writes = cs.writes[i];
    rep.cores.push_back(r);
  }
  const auto& ds = dev.stats();
  rep.commands = {ds.acts, ds.pres, ds.reads, ds.writes, ds.refs, ds.rfms, ds.victim_refreshes};
  rep.cpu_cycles = cpu;
  rep.dram_cycles = dram;
  rep.energy_pj = energy(rep.commands, cfg.energy, timing.clock_period * dram);
  rep.latency = latency_percentiles(cs.read_latency, timing.clock_period);
  rep.max_row_activation = ds.max_disturbance;
  rep.backoffs = ds.backoffs;
  rep.rfm_prfm = cs.rfm_prfm;
  rep.rfm_backoff = cs.rfm_backoff;
  rep.deadline_slack_min = ds.deadline_slack_min;
  if (!ds.deadline_slack.empty()) {
    double sum = 0;
    for (auto s : ds.deadline_slack) sum += static_cast<double>(s);
    rep.deadline_slack_mean = sum / static_cast<double>(ds.deadline_slack.size());
  }
  return rep;
}

}  // namespace pracsim
