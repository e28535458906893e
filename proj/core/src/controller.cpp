#include "pracsim/controller.h"

#include <algorithm>
#include <bit>
#include <cstdint>

#include "pracsim/error.h"

namespace pracsim {

namespace {
int log2i(std::int64_t v) { return std::bit_width(static_cast<std::uint64_t>(v)) - 1; }
}  // namespace

AddressMapper::AddressMapper(const Topology& topo) : m_topo(topo) {
  topo.validate();
  if (topo.columns < kGroupBlocks) throw ConfigError("rows must hold at least four blocks");
  m_bg_bits = log2i(topo.bankgroups);
  m_bank_bits = log2i(topo.banks_per_group);
  m_rank_bits = log2i(topo.ranks);
  m_col_hi_bits = log2i(topo.columns) - log2i(kGroupBlocks);
  m_row_bits = log2i(topo.rows_per_bank);
  int total = 6 + log2i(kGroupBlocks) + m_bg_bits + m_bank_bits + m_rank_bits + m_col_hi_bits + m_row_bits;
  m_capacity = 1ULL << total;
}

Address AddressMapper::map(std::uint64_t phys) const {
  if (phys >= m_capacity) throw PreconditionError("address beyond configured capacity");
  std::uint64_t v = phys >> 6;
  auto take = [&](int bits) {
    std::uint64_t f = v & ((1ULL << bits) - 1);
    v >>= bits;
    return f;
  };
  Address a;
  int col_lo = static_cast<int>(take(log2i(kGroupBlocks)));
  a.bankgroup = static_cast<int>(take(m_bg_bits));
  a.bank = static_cast<int>(take(m_bank_bits));
  a.rank = static_cast<int>(take(m_rank_bits));
  int col_hi = static_cast<int>(take(m_col_hi_bits));
  a.row = static_cast<std::int64_t>(take(m_row_bits));
  a.column = (col_hi << log2i(kGroupBlocks)) | col_lo;
  return a;
}

std::uint64_t AddressMapper::compose(const Address& a) const {
  std::uint64_t v = 0;
  int shift = 6;
  auto put = [&](std::uint64_t f, int bits) {
    v |= (f & ((1ULL << bits) - 1)) << shift;
    shift += bits;
  };
  put(a.column & (kGroupBlocks - 1), log2i(kGroupBlocks));
  put(a.bankgroup, m_bg_bits);
  put(a.bank, m_bank_bits);
  put(a.rank, m_rank_bits);
  put(a.column >> log2i(kGroupBlocks), m_col_hi_bits);
  put(a.row, m_row_bits);
  return v;
}

void ControllerConfig::validate() const {
  if (frfcfs_cap < 1) throw ConfigError("FR-FCFS cap must be at least 1");
  if (read_queue_depth < 1 || write_queue_depth < 1) throw ConfigError("queue depths must be at least 1");
  if (write_low < 0 || write_high > write_queue_depth || write_low >= write_high)
    throw ConfigError("write watermarks must satisfy 0 <= low < high <= depth");
}

Controller::Controller(ControllerConfig cfg, Device& device, MitigationConfig mitigation,
                       std::unique_ptr<ControllerMitigation> controller_side, int cores)
    : m_cfg(cfg),
      m_dev(device),
      m_mapper(device.topology()),
      m_mitigation(std::move(mitigation)),
      m_side(std::move(controller_side)),
      m_prfm(prfm_part(m_mitigation)),
      m_backoff(uses_backoff(m_mitigation)) {
  m_cfg.validate();
  const auto& t = device.config().timing;
  m_rc = t.cycles(t.tRC);
  m_rp = t.cycles(t.tRP);
  m_rtp = t.cycles(t.tRTP);
  m_wr_tail = t.cycles(t.tCL) + t.cycles(t.tBL) + t.cycles(t.tWR);
  m_refi = t.cycles(t.tREFI);
  const auto& topo = device.topology();
  m_next_ref.resize(topo.ranks);
  for (int r = 0; r < topo.ranks; ++r) m_next_ref[r] = m_refi * (r + 1) / topo.ranks;
  m_bypass.assign(topo.total_banks(), 0);
  m_vrr.assign(topo.total_banks(), -1);
  m_prfm_due.assign(topo.total_banks(), 0);
  m_prfm_due_rank.assign(topo.ranks, 0);
  m_prfm_grace.assign(topo.total_banks(), 0);
  m_stats.row_misses.assign(cores, 0);
  m_stats.reads.assign(cores, 0);
  m_stats.writes.assign(cores, 0);
}

bool Controller::can_accept(bool write) const {
  return write ? static_cast<int>(m_writes.size()) < m_cfg.write_queue_depth
               : static_cast<int>(m_reads.size()) < m_cfg.read_queue_depth;
}

bool Controller::enqueue(Request r) {
  if (!can_accept(r.write)) return false;
  const int flat = flat_bank(m_dev.topology(), r.addr);
  (r.write ? m_writes : m_reads).push_back({r, flat});
  return true;
}

void Controller::collect(Cycle now, std::vector<Completion>& out) {
  auto it = std::partition(m_inflight.begin(), m_inflight.end(),
                           [&](const Completion& c) { return c.ready > now; });
  for (auto j = it; j != m_inflight.end(); ++j) out.push_back(*j);
  m_inflight.erase(it, m_inflight.end());
}

bool Controller::issue(Command cmd, const Address& a, Cycle now, bool reset) {
  const auto& events = m_dev.issue(cmd, a, now, reset);
  if (m_observer && !events.empty()) m_observer(events);
  return true;
}

int Controller::open_banks(int rank) const {
  const int per = m_dev.topology().banks_per_rank();
  int n = 0;
  for (int f = rank * per; f < (rank + 1) * per; ++f) n += m_dev.open_row(f).has_value();
  return n;
}

bool Controller::has_hit(int flat, std::int64_t row) const {
  for (auto* q : {&m_reads, &m_writes})
    for (auto& e : *q)
      if (e.flat == flat && e.req.addr.row == row) return true;
  return false;
}

// Activation needs room for ACT, one column access and the precharge
// before the back-off deadline, plus one cycle per precharge still owed.
bool Controller::act_blocked(int rank, int flat, Cycle now) const {
  if (m_vrr[flat] >= 0) return true;
  if (m_cfg.refresh && now >= m_next_ref[rank]) return true;
  if (m_prfm_due_rank[rank] > 0) return true;
  const auto& bo = m_dev.backoff(rank);
  if (bo.phase == BackOffPhase::Recovery) return true;
  if (bo.phase == BackOffPhase::Window) {
    const auto& t = m_dev.config().timing;
    Cycle span = std::max(m_rc, t.cycles(t.tRCD) + m_rtp + m_rp);
    if (now + span + open_banks(rank) > bo.window_deadline) return true;
  }
  return false;
}

// A pending PRFM trigger does not block column accesses: the row that
// tripped it is served before the bank is closed for the RFM.
bool Controller::column_blocked(int rank, Command cmd, Cycle now) const {
  if (m_cfg.refresh && now >= m_next_ref[rank]) return true;
  const auto& bo = m_dev.backoff(rank);
  if (bo.phase == BackOffPhase::Recovery) return true;
  if (bo.phase == BackOffPhase::Window) {
    bool write = cmd == Command::WR || cmd == Command::WRA;
    Cycle tail = (write ? m_wr_tail : m_rtp) + m_rp;
    if (now + tail + open_banks(rank) > bo.window_deadline) return true;
  }
  return false;
}

// Precharges one open bank of the rank. With `only_idle`, banks that still
// have servable row hits are left open.
bool Controller::close_banks(int rank, Cycle now, bool only_idle) {
  const int per = m_dev.topology().banks_per_rank();
  for (int f = rank * per; f < (rank + 1) * per; ++f) {
    auto row = m_dev.open_row(f);
    if (!row) continue;
    Address a = bank_address(m_dev.topology(), f);
    a.row = *row;
    if (only_idle && has_hit(f, *row) && !column_blocked(rank, Command::RD, now)) continue;
    if (m_dev.can_issue(Command::PRE, a, now)) return issue(Command::PRE, a, now);
  }
  return false;
}

bool Controller::try_backoff(Cycle now) {
  if (!m_backoff) return false;
  const auto& topo = m_dev.topology();
  const int per = topo.banks_per_rank();
  for (int r = 0; r < topo.ranks; ++r) {
    const auto& bo = m_dev.backoff(r);
    if (bo.phase != BackOffPhase::Window && bo.phase != BackOffPhase::Recovery) continue;
    const bool recovering = bo.phase == BackOffPhase::Recovery;
    if (!recovering) {
      const auto& t = m_dev.config().timing;
      Cycle span = std::max(m_rc, t.cycles(t.tRCD) + m_rtp + m_rp);
      bool acts_over = now + span + open_banks(r) > bo.window_deadline;
      if (!acts_over) continue;
    }
    Address a = bank_address(topo, r * per);
    if (m_dev.can_issue(Command::RFMab, a, now)) {
      // A PRFM trigger pending on this rank is satisfied by the same RFM.
      int trigger = -1;
      for (int f = r * per; f < (r + 1) * per && trigger < 0 && m_prfm_due_rank[r] > 0; ++f)
        if (m_prfm_due[f]) trigger = f;
      if (trigger >= 0) {
        a = bank_address(topo, trigger);
        m_prfm_due[trigger] = 0;
        --m_prfm_due_rank[r];
        ++m_stats.rfm_prfm;
      } else {
        ++m_stats.rfm_backoff;
      }
      return issue(Command::RFMab, a, now, trigger >= 0);
    }
    if (close_banks(r, now, !recovering)) return true;
  }
  return false;
}

bool Controller::try_maintenance(Cycle now) {
  const auto& topo = m_dev.topology();
  const int per = topo.banks_per_rank();
  for (int r = 0; r < topo.ranks; ++r) {
    const auto phase = m_dev.backoff(r).phase;
    if (phase == BackOffPhase::Window || phase == BackOffPhase::Recovery) continue;
    Address a = bank_address(topo, r * per);
    if (m_cfg.refresh && now >= m_next_ref[r]) {
      if (m_dev.can_issue(Command::REF, a, now)) {
        m_next_ref[r] += m_refi;
        return issue(Command::REF, a, now);
      }
      if (close_banks(r, now, false)) return true;
      continue;
    }
    for (int f = r * per; f < (r + 1) * per && m_prfm_due_rank[r] > 0; ++f) {
      if (!m_prfm_due[f]) continue;
      Address b = bank_address(topo, f);
      if (m_dev.can_issue(Command::RFMab, b, now)) {
        m_prfm_due[f] = 0;
        --m_prfm_due_rank[r];
        ++m_stats.rfm_prfm;
        return issue(Command::RFMab, b, now, true);
      }
      // The triggering bank may finish up to `cap` queued hits first.
      auto open = m_dev.open_row(f);
      if (open && m_prfm_grace[f] > 0 && has_hit(f, *open)) break;
      if (close_banks(r, now, false)) return true;
      break;
    }
  }
  for (int f = 0; f < topo.total_banks() && m_vrr_pending > 0; ++f) {
    if (m_vrr[f] < 0) continue;
    Address a = bank_address(topo, f);
    if (auto open = m_dev.open_row(f)) {
      a.row = *open;
      if (m_dev.can_issue(Command::PRE, a, now)) return issue(Command::PRE, a, now);
      continue;
    }
    a.row = m_vrr[f];
    if (m_dev.can_issue(Command::VRR, a, now)) {
      m_vrr[f] = -1;
      --m_vrr_pending;
      ++m_stats.preventive_refreshes;
      return issue(Command::VRR, a, now);
    }
  }
  return false;
}

void Controller::on_act(const Queued& q, Cycle now) {
  if (q.req.core >= 0) ++m_stats.row_misses[q.req.core];
  m_bypass[q.flat] = 0;
  if (m_prfm && m_dev.bank_act_count(q.flat) >= m_prfm->rfm_th && !m_prfm_due[q.flat]) {
    m_prfm_due[q.flat] = 1;
    ++m_prfm_due_rank[q.req.addr.rank];
    m_prfm_grace[q.flat] = m_cfg.frfcfs_cap;
  }
  if (!m_side) return;
  MitigationAction act = m_side->on_activation(q.flat, q.req.addr.row, now);
  if (act.refresh) {
    if (m_vrr[q.flat] < 0) ++m_vrr_pending;
    m_vrr[q.flat] = q.req.addr.row;
  }
  Address where = q.req.addr;
  where.row = act.counter_row;
  where.column = 0;
  for (int i = 0; i < act.counter_reads + act.counter_writes; ++i) {
    Request r;
    r.id = m_internal_id++;
    r.write = i >= act.counter_reads;
    r.addr = where;
    r.phys = m_mapper.compose(where);
    r.arrival = now;
    m_internal.push_back(r);
  }
  m_stats.counter_reads += act.counter_reads;
  m_stats.counter_writes += act.counter_writes;
}

bool Controller::try_requests(Cycle now) {
  while (!m_internal.empty() && can_accept(m_internal.front().write)) {
    enqueue(m_internal.front());
    m_internal.pop_front();
  }
  if (static_cast<int>(m_writes.size()) >= m_cfg.write_high) m_draining_writes = true;
  if (static_cast<int>(m_writes.size()) <= m_cfg.write_low) m_draining_writes = false;
  const bool writes = m_draining_writes || (m_reads.empty() && !m_writes.empty());
  auto& q = writes ? m_writes : m_reads;
  if (q.empty()) return false;

  const auto& topo = m_dev.topology();
  const bool closed = m_cfg.page_policy == PagePolicy::Closed;
  const Command col = writes ? (closed ? Command::WRA : Command::WR) : (closed ? Command::RDA : Command::RD);

  // Per bank: index of the oldest queued request that misses the open row,
  // and how many requests in the active queue hit it.
  const int banks = topo.total_banks();
  m_first_miss.assign(banks, SIZE_MAX);
  m_hits.assign(banks, 0);
  for (auto& e : q) {
    auto open = m_dev.open_row(e.flat);
    if (open && *open == e.req.addr.row) ++m_hits[e.flat];
  }
  for (std::size_t i = 0; i < q.size(); ++i) {
    auto open = m_dev.open_row(q[i].flat);
    if ((!open || *open != q[i].req.addr.row) && m_first_miss[q[i].flat] == SIZE_MAX) m_first_miss[q[i].flat] = i;
  }
  auto older_miss = [&](std::size_t i) { return m_first_miss[q[i].flat] < i; };

  std::ptrdiff_t hit = -1, other = -1;
  Command other_cmd = Command::ACT;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Queued& e = q[i];
    const int rank = e.req.addr.rank;
    auto open = m_dev.open_row(e.flat);
    if (open && *open == e.req.addr.row) {
      if (hit >= 0 || column_blocked(rank, col, now)) continue;
      if (m_bypass[e.flat] >= m_cfg.frfcfs_cap && older_miss(i)) continue;
      if (m_dev.can_issue(col, e.req.addr, now)) hit = static_cast<std::ptrdiff_t>(i);
    } else if (open) {
      if (other >= 0) continue;
      // Keep a row open while it still has uncapped hits waiting.
      if (m_bypass[e.flat] < m_cfg.frfcfs_cap && m_hits[e.flat] > 0) continue;
      Address a = e.req.addr;
      a.row = *open;
      if (m_dev.can_issue(Command::PRE, a, now)) {
        other = static_cast<std::ptrdiff_t>(i);
        other_cmd = Command::PRE;
      }
    } else {
      if (other >= 0 || act_blocked(rank, e.flat, now)) continue;
      if (m_dev.can_issue(Command::ACT, e.req.addr, now)) {
        other = static_cast<std::ptrdiff_t>(i);
        other_cmd = Command::ACT;
      }
    }
    if (hit >= 0) break;
  }

  if (hit >= 0) {
    Queued e = q[hit];
    if (older_miss(static_cast<std::size_t>(hit))) ++m_bypass[e.flat];
    if (m_prfm_due[e.flat] && m_prfm_grace[e.flat] > 0) --m_prfm_grace[e.flat];
    q.erase(q.begin() + hit);
    issue(col, e.req.addr, now);
    if (e.req.write) {
      if (e.req.core >= 0) ++m_stats.writes[e.req.core];
    } else {
      Cycle ready = m_dev.data_ready(col, now);
      if (e.req.core >= 0) {
        ++m_stats.reads[e.req.core];
        m_stats.read_latency.push_back(static_cast<std::int32_t>(ready - e.req.arrival));
        m_inflight.push_back({e.req.id, e.req.core, ready, e.req.arrival});
      }
    }
    return true;
  }
  if (other >= 0) {
    const Queued& e = q[other];
    if (other_cmd == Command::PRE) {
      Address a = e.req.addr;
      a.row = *m_dev.open_row(e.flat);
      return issue(Command::PRE, a, now);
    }
    Queued copy = e;
    issue(Command::ACT, e.req.addr, now);
    on_act(copy, now);
    return true;
  }
  return false;
}

void Controller::tick(Cycle now) {
  m_dev.advance(now);
  if (m_observer && !m_dev.events().empty()) m_observer(m_dev.events());
  m_dev.clear_events();
  if (try_backoff(now)) return;
  if (try_maintenance(now)) return;
  try_requests(now);
}

}  // namespace pracsim
