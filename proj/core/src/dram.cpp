#include "pracsim/dram.h"

#include <algorithm>
#include <bit>

#include "pracsim/error.h"

namespace pracsim {

namespace {
constexpr Cycle kNever = 1LL << 62;

bool is_pow2(std::int64_t v) { return v > 0 && (v & (v - 1)) == 0; }
}  // namespace

void Topology::validate() const {
  if (!is_pow2(channels) || !is_pow2(ranks) || !is_pow2(bankgroups) || !is_pow2(banks_per_group) ||
      !is_pow2(rows_per_bank) || !is_pow2(columns))
    throw ConfigError("topology dimensions must be powers of two");
  if (channels != 1) throw ConfigError("only single-channel topologies are modeled");
}

Topology desk_topology() {
  Topology t;
  t.rows_per_bank = 64;
  return t;
}

Address bank_address(const Topology& t, int flat) {
  Address a;
  a.bank = flat % t.banks_per_group;
  a.bankgroup = (flat / t.banks_per_group) % t.bankgroups;
  a.rank = flat / t.banks_per_rank();
  return a;
}

const char* command_name(Command c) {
  switch (c) {
    case Command::ACT: return "ACT";
    case Command::PRE: return "PRE";
    case Command::RD: return "RD";
    case Command::WR: return "WR";
    case Command::RDA: return "RDA";
    case Command::WRA: return "WRA";
    case Command::REF: return "REF";
    case Command::RFMab: return "RFMab";
    case Command::RFMsb: return "RFMsb";
    case Command::VRR: return "VRR";
  }
  return "?";
}

int counter_bits(std::int64_t n_rh) {
  if (n_rh < 1) throw PreconditionError("n_rh must be at least 1");
  int log2_ceil = std::bit_width(static_cast<std::uint64_t>(n_rh - 1));
  return log2_ceil + 1;
}

Device::Device(DeviceConfig cfg) : m_cfg(std::move(cfg)) {
  m_cfg.topology.validate();
  m_cfg.timing.validate();
  if (m_cfg.prac && m_cfg.abo_th < 1) throw ConfigError("PRAC needs abo_th >= 1");
  const auto& t = m_cfg.timing;
  m_c = {t.cycles(t.tRC),  t.cycles(t.tRAS), t.cycles(t.tRP),  t.cycles(t.tRCD),
         t.cycles(t.tRTP), t.cycles(t.tWR),  t.cycles(t.tCL),  t.cycles(t.tRFC),
         t.cycles(t.tRFM), t.cycles(t.tABO_ACT), t.cycles(t.tBackoffSignal),
         t.cycles(t.tCCD), t.cycles(t.tBL),  t.cycles(t.tRRD), t.cycles(t.tFAW),
         t.cycles(t.tWTR)};
  m_counter_max = std::min<int>((1 << counter_bits(m_cfg.n_rh)) - 1, 0xFFFF);

  const auto& topo = m_cfg.topology;
  m_rows_per_ref = ceil_div(topo.rows_per_bank, t.refs_per_window());
  m_banks.resize(topo.total_banks());
  for (auto& b : m_banks) b.counters.assign(topo.rows_per_bank, 0);
  m_ranks.resize(topo.ranks);
  for (auto& r : m_ranks) r.faw.fill(-(1LL << 40));
  m_backoff.resize(topo.ranks);
  m_ref_ptr.assign(topo.ranks, 0);
  if (m_cfg.safety_monitor) {
    m_disturbance.resize(topo.total_banks());
    for (auto& d : m_disturbance) d.assign(topo.rows_per_bank * 2 * m_cfg.blast_radius, 0);
  }
}

std::optional<std::int64_t> Device::open_row(int flat) const {
  auto r = m_banks[flat].open_row;
  if (r < 0) return std::nullopt;
  return r;
}

std::int64_t Device::counter(int flat, std::int64_t row) const { return m_banks[flat].counters[row]; }

std::int64_t Device::counter_sum() const {
  std::int64_t s = 0;
  for (auto& b : m_banks)
    for (auto& [neg, row] : b.hot) s += -neg;
  return s;
}

Cycle Device::data_ready(Command cmd, Cycle issue) const {
  if (cmd == Command::RD || cmd == Command::RDA) return issue + m_c.CL + m_c.BL;
  return issue;
}

std::vector<std::int64_t> Device::victims(std::int64_t row) const {
  std::vector<std::int64_t> out;
  for (int d = 1; d <= m_cfg.blast_radius; ++d) {
    if (row - d >= 0) out.push_back(row - d);
    if (row + d < m_cfg.topology.rows_per_bank) out.push_back(row + d);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Device::Check Device::check(Command cmd, const Address& a, [[maybe_unused]] Cycle now) const {
  const auto& topo = m_cfg.topology;
  const int flat = flat_bank(topo, a);
  const Bank& b = m_banks[flat];
  const RankTiming& rk = m_ranks[a.rank];
  Check c;
  auto need = [&](const char* name, Cycle t) {
    if (t > c.earliest) {
      c.earliest = t;
      c.constraint = name;
    }
  };
  auto structural = [&](const char* name) {
    c.structural = true;
    c.constraint = name;
    c.earliest = kNever;
    return c;
  };
  auto rank_closed = [&](Cycle& latest_pre, Cycle& busy) {
    const int per_rank = topo.banks_per_rank();
    for (int i = a.rank * per_rank; i < (a.rank + 1) * per_rank; ++i) {
      if (m_banks[i].open_row >= 0) return false;
      latest_pre = std::max(latest_pre, m_banks[i].last_pre);
      busy = std::max(busy, m_banks[i].busy_until);
    }
    return true;
  };

  switch (cmd) {
    case Command::ACT:
      if (b.open_row >= 0) return structural("bank-open");
      if (a.row < 0 || a.row >= topo.rows_per_bank) return structural("row-range");
      need("tRC", b.last_act + m_c.RC);
      need("tRP", b.last_pre + m_c.RP);
      need(b.busy_reason, b.busy_until);
      need("tRRD", rk.last_act + m_c.RRD);
      need("tFAW", rk.faw[0] + m_c.FAW);
      break;
    case Command::PRE:
      if (b.open_row < 0) return structural("bank-closed");
      need("tRAS", b.last_act + m_c.RAS);
      need("tRTP", b.last_rd + m_c.RTP);
      need("tWR", b.last_wr + m_c.CL + m_c.BL + m_c.WR);
      break;
    case Command::RD:
    case Command::RDA:
    case Command::WR:
    case Command::WRA:
      if (b.open_row < 0) return structural("bank-closed");
      if (b.open_row != a.row) return structural("row-mismatch");
      need("tRCD", b.last_act + m_c.RCD);
      need("tCCD", rk.next_col);
      if (cmd == Command::RD || cmd == Command::RDA) need("tWTR", rk.last_wr_end + m_c.WTR);
      break;
    case Command::REF:
    case Command::RFMab:
    case Command::RFMsb: {
      Cycle latest_pre = -(1LL << 40), busy = 0;
      if (!rank_closed(latest_pre, busy)) return structural("rank-open");
      need("tRP", latest_pre + m_c.RP);
      need("busy", busy);
      break;
    }
    case Command::VRR:
      if (b.open_row >= 0) return structural("bank-open");
      need("tRP", b.last_pre + m_c.RP);
      need("tRC", b.last_act + m_c.RC);
      need(b.busy_reason, b.busy_until);
      break;
  }
  if (c.constraint == nullptr) c.constraint = "none";
  return c;
}

void Device::advance(Cycle now) {
  for (int r = 0; r < static_cast<int>(m_backoff.size()); ++r) {
    auto& bo = m_backoff[r];
    if (bo.pending_assert && *bo.pending_assert <= now) {
      bo.phase = BackOffPhase::Window;
      bo.window_deadline = *bo.pending_assert + m_c.ABO;
      bo.window_acts = 0;
      ++m_stats.backoffs;
      emit({EventKind::BackOffAsserted, *bo.pending_assert, r});
      bo.pending_assert.reset();
    }
    if (bo.phase == BackOffPhase::Window && now > bo.window_deadline)
      throw SchedulerBug("back-off window expired at cycle " + std::to_string(bo.window_deadline) +
                         " without an RFM (now " + std::to_string(now) + ")");
  }
}

void Device::set_counter(int flat, std::int64_t row, int value) {
  Bank& b = m_banks[flat];
  int old = b.counters[row];
  if (old == value) return;
  if (old > 0) b.hot.erase({-old, row});
  if (value > 0) b.hot.insert({-value, row});
  b.counters[row] = static_cast<std::uint16_t>(value);
  if (m_cfg.prac) {
    const int rank = bank_address(m_cfg.topology, flat).rank;
    bool was = old >= m_cfg.abo_th, is = value >= m_cfg.abo_th;
    if (was != is) m_ranks[rank].rows_at_threshold += is ? 1 : -1;
  }
}

void Device::maybe_assert(int rank, Cycle when) {
  if (!m_cfg.prac) return;
  auto& bo = m_backoff[rank];
  if (bo.phase != BackOffPhase::Idle || bo.pending_assert) return;
  if (m_ranks[rank].rows_at_threshold == 0) return;
  bo.pending_assert = when + m_c.BS;
}

void Device::close_row(int flat, Cycle when) {
  Bank& b = m_banks[flat];
  const std::int64_t row = b.open_row;
  b.open_row = -1;
  b.last_pre = when;
  ++m_stats.pres;
  if (b.counters[row] < m_counter_max) {
    set_counter(flat, row, b.counters[row] + 1);
    ++m_stats.counter_increments;
  }
  maybe_assert(bank_address(m_cfg.topology, flat).rank, when);
}

void Device::clear_disturbance(int flat, std::int64_t victim) {
  if (!m_cfg.safety_monitor) return;
  const int slots = 2 * m_cfg.blast_radius;
  auto& d = m_disturbance[flat];
  std::fill(d.begin() + victim * slots, d.begin() + (victim + 1) * slots, 0u);
}

void Device::refresh_victims(int flat, std::int64_t aggressor) {
  const int r = m_cfg.blast_radius;
  for (std::int64_t v = aggressor - r; v <= aggressor + r; ++v)
    if (v != aggressor && v >= 0 && v < m_cfg.topology.rows_per_bank) clear_disturbance(flat, v);
}

void Device::on_activate(int flat, std::int64_t row, Cycle now) {
  Bank& b = m_banks[flat];
  b.open_row = row;
  b.last_act = now;
  ++b.prfm_counter;
  ++m_stats.acts;
  const Address where = bank_address(m_cfg.topology, flat);
  RankTiming& rk = m_ranks[where.rank];
  rk.last_act = now;
  std::rotate(rk.faw.begin(), rk.faw.begin() + 1, rk.faw.end());
  rk.faw.back() = now;

  auto& bo = m_backoff[where.rank];
  if (bo.phase == BackOffPhase::Window) ++bo.window_acts;
  if (bo.phase == BackOffPhase::Delay && --bo.acts_left == 0) bo.phase = BackOffPhase::Idle;

  if (m_cfg.safety_monitor) {
    const int r = m_cfg.blast_radius;
    auto& d = m_disturbance[flat];
    for (int off = -r; off <= r; ++off) {
      if (off == 0) continue;
      std::int64_t v = row + off;
      if (v < 0 || v >= m_cfg.topology.rows_per_bank) continue;
      // Slot indexed by the aggressor's offset relative to the victim.
      int rel = -off;
      int slot = rel < 0 ? rel + r : rel + r - 1;
      std::uint32_t c = ++d[v * 2 * r + slot];
      if (c > static_cast<std::uint32_t>(m_stats.max_disturbance)) m_stats.max_disturbance = c;
      if (c == static_cast<std::uint32_t>(m_cfg.n_rh))
        emit({EventKind::SafetyViolation, now, where.rank, flat, row, v, c});
    }
  }
}

void Device::serve_rfm(int flat, Cycle now) {
  Bank& b = m_banks[flat];
  // Nothing has been activated since the last refresh of every tracked row.
  if (b.hot.empty()) return;
  const std::int64_t row = b.hot.begin()->second;
  const std::int64_t count = -b.hot.begin()->first;
  refresh_victims(flat, row);
  m_stats.counter_cleared += count;
  set_counter(flat, row, 0);
  emit({EventKind::RfmServed, now, bank_address(m_cfg.topology, flat).rank, flat, row, 0, count});
}

void Device::serve_ref(int rank, Cycle now) {
  const auto& topo = m_cfg.topology;
  const std::int64_t first = m_ref_ptr[rank];
  const std::int64_t count = std::min(m_rows_per_ref, topo.rows_per_bank - first);
  const int per_rank = topo.banks_per_rank();
  for (int flat = rank * per_rank; flat < (rank + 1) * per_rank; ++flat) {
    for (std::int64_t row = first; row < first + count; ++row) {
      clear_disturbance(flat, row);
      if (m_cfg.ref_resets_counters && m_banks[flat].counters[row] > 0) {
        m_stats.counter_cleared += m_banks[flat].counters[row];
        set_counter(flat, row, 0);
      }
    }
  }
  m_ref_ptr[rank] = (first + count) % topo.rows_per_bank;
  emit({EventKind::RefServed, now, rank, -1, first, 0, count});
}

const std::vector<Event>& Device::issue(Command cmd, const Address& a, Cycle now, bool reset_act_count) {
  m_events.clear();
  advance(now);
  Check c = check(cmd, a, now);
  if (c.structural || c.earliest > now)
    throw ProtocolViolation(c.constraint, c.structural ? -1 : c.earliest - now,
                            std::string(command_name(cmd)) + " rank " + std::to_string(a.rank) + " bg " +
                                std::to_string(a.bankgroup) + " bank " + std::to_string(a.bank) + " row " +
                                std::to_string(a.row) + " at cycle " + std::to_string(now));

  const auto& topo = m_cfg.topology;
  const int flat = flat_bank(topo, a);
  Bank& b = m_banks[flat];
  RankTiming& rk = m_ranks[a.rank];
  const int per_rank = topo.banks_per_rank();
  auto& bo = m_backoff[a.rank];

  switch (cmd) {
    case Command::ACT:
      on_activate(flat, a.row, now);
      break;
    case Command::PRE:
      close_row(flat, now);
      break;
    case Command::RD:
    case Command::RDA:
      b.last_rd = now;
      rk.next_col = now + m_c.CCD;
      ++m_stats.reads;
      if (cmd == Command::RDA) close_row(flat, std::max(now + m_c.RTP, b.last_act + m_c.RAS));
      break;
    case Command::WR:
    case Command::WRA:
      b.last_wr = now;
      rk.next_col = now + m_c.CCD;
      rk.last_wr_end = now + m_c.CL + m_c.BL;
      ++m_stats.writes;
      if (cmd == Command::WRA)
        close_row(flat, std::max(now + m_c.CL + m_c.BL + m_c.WR, b.last_act + m_c.RAS));
      break;
    case Command::REF:
      for (int i = a.rank * per_rank; i < (a.rank + 1) * per_rank; ++i) {
        m_banks[i].busy_until = now + m_c.RFC;
        m_banks[i].busy_reason = "tRFC";
      }
      ++m_stats.refs;
      serve_ref(a.rank, now);
      break;
    case Command::RFMab:
    case Command::RFMsb: {
      ++m_stats.rfms;
      if (bo.phase == BackOffPhase::Window) {
        Cycle slack = bo.window_deadline - now;
        m_stats.deadline_slack.push_back(slack);
        if (m_stats.deadline_slack_min < 0 || slack < m_stats.deadline_slack_min)
          m_stats.deadline_slack_min = slack;
        bo.phase = BackOffPhase::Recovery;
        bo.rfms_left = m_cfg.bo_n_refs;
      }
      if (bo.phase == BackOffPhase::Recovery && --bo.rfms_left == 0) {
        bo.phase = BackOffPhase::Delay;
        bo.acts_left = m_cfg.bo_n_acts;
      }
      if (reset_act_count) b.prfm_counter = 0;
      for (int i = a.rank * per_rank; i < (a.rank + 1) * per_rank; ++i) {
        if (cmd == Command::RFMsb && i % topo.banks_per_group != a.bank) continue;
        m_banks[i].busy_until = now + m_c.RFM;
        m_banks[i].busy_reason = "tRFM";
        serve_rfm(i, now);
      }
      break;
    }
    case Command::VRR: {
      auto vs = victims(a.row);
      b.busy_until = now + m_c.RC * static_cast<Cycle>(vs.size());
      b.busy_reason = "tVRR";
      refresh_victims(flat, a.row);
      ++m_stats.victim_refreshes;
      emit({EventKind::VictimRefresh, now, a.rank, flat, a.row, 0, static_cast<std::int64_t>(vs.size())});
      break;
    }
  }
  if (m_cfg.event_log) {
    bool rank_level = cmd == Command::REF || cmd == Command::RFMab;
    m_log.push_back({now, cmd, a.rank, rank_level ? -1 : a.bankgroup, rank_level ? -1 : a.bank,
                     rank_level ? -1 : a.row});
  }
  return m_events;
}

void Device::write_log_csv(std::ostream& out) const {
  out << "cycle,command,rank,bankgroup,bank,row\n";
  for (auto& r : m_log)
    out << r.cycle << ',' << command_name(r.command) << ',' << r.rank << ',' << r.bankgroup << ','
        << r.bank << ',' << r.row << '\n';
}

}  // namespace pracsim
