#include "pracsim/attack.h"

#include <algorithm>
#include <unordered_set>

#include "pracsim/error.h"

namespace pracsim {

void AttackSpec::validate() const {
  if (rows_per_bank < 1) throw ConfigError("attack needs at least one row per bank");
  if (banks < 1) throw ConfigError("attack needs at least one bank");
  if (initial_priming < 0) throw ConfigError("initial priming cannot be negative");
  if (kind == AttackKind::Wave) {
    if (!prfm_part(target) && !prac_part(target))
      throw ConfigError("wave attack needs a PRFM or PRAC target, got " + mitigation_name(target));
    if (auto p = prac_part(target); p && initial_priming > p->abo_th - 1)
      throw ConfigError("priming beyond abo_th-1 would trigger a back-off before the wave starts");
  }
}

AttackSpec perf_attack_spec(MitigationConfig target) {
  AttackSpec s;
  s.kind = AttackKind::PerfDegradation;
  s.rows_per_bank = 8;
  s.banks = 4;
  s.target = std::move(target);
  return s;
}

Consumption theoretical_consumption(const TimingParams& t, const MechanismParams& mech) {
  Consumption c;
  c.t_available = t.tREFW - t.tRFC * t.refs_per_window();
  Picos per_period{};
  if (auto* p = std::get_if<PrfmParams>(&mech)) {
    p->validate();
    c.t_attack_period = t.tRC * p->rfm_th + t.tRFM;
    per_period = t.tRFM;
  } else {
    const auto& q = std::get<PracParams>(mech);
    q.validate();
    c.t_attack_period = t.tRC * q.abo_th + t.tRFM * q.bo_n_refs;
    per_period = t.tRFM * q.bo_n_refs;
  }
  c.t_prevent = per_period * (c.t_available / c.t_attack_period);
  c.fraction = static_cast<double>(c.t_prevent.count()) / static_cast<double>(c.t_available.count());
  return c;
}

double steady_state_fraction(const TimingParams& t, const PracParams& p) {
  p.validate();
  const double busy = static_cast<double>((t.tRFM * p.bo_n_refs).count());
  return busy / (busy + static_cast<double>((t.tRC * p.abo_th).count()));
}

TimingParams wave_oracle_timing(std::int64_t window_acts) {
  if (window_acts < 1) throw PreconditionError("the back-off window must admit at least one activation");
  TimingParams t = preset("ddr5-3200an-base");
  const Picos ck = t.clock_period;
  const std::int64_t ras = 52, rp = 24, rc = ras + rp, bs = 8;
  t.tRAS = ck * ras;
  t.tRP = ck * rp;
  t.tRC = ck * rc;
  t.tRCD = ck * 22;
  t.tRTP = ck * 12;
  t.tBackoffSignal = ck * bs;
  t.tBO_DELAY = t.tRC * 4;
  // The last window activation at k*tRC still leaves a full tRC before the
  // deadline only for k <= window_acts.
  t.tABO_ACT = ck * (window_acts * rc + rp - bs + rc / 2);
  t.validate();
  return t;
}

namespace {

class WaveAttacker {
 public:
  WaveAttacker(const AttackSpec& spec, const WaveSetup& s) : m_spec(spec), m_setup(s) {
    m_round_mode = uses_backoff(spec.target);
    const std::int64_t last = s.first_row + (s.b0 - 1) * s.row_stride;
    if (s.b0 < 1 || s.row_stride < 1 || s.first_row < 0 || last >= s.topology.rows_per_bank)
      throw ConfigError("decoy rows do not fit in the bank");
    for (std::int64_t i = 0; i < s.b0; ++i) {
      std::int64_t row = s.first_row + (s.b0 - 1 - i) * s.row_stride;
      m_alive.push_back(row);
      m_decoys.insert(row);
      for (std::int64_t k = 0; k < spec.initial_priming; ++k) m_priming.push_back(row);
    }
  }

  void on_events(const std::vector<Event>& events) {
    for (auto& e : events) {
      if ((e.kind == EventKind::RfmServed || e.kind == EventKind::VictimRefresh) && e.bank == m_setup.bank &&
          m_decoys.count(e.row))
        m_refreshed.insert(e.row);
      if (e.kind == EventKind::SafetyViolation && !m_violation) m_violation = e;
    }
  }

  // Next row to activate, or nullopt when the attack is over. Does not
  // consume the row.
  std::optional<std::int64_t> peek() {
    if (m_prime_pos < m_priming.size()) return m_priming[m_prime_pos];
    for (;;) {
      if (m_pos >= m_round.size()) {
        if (!start_round()) return std::nullopt;
        continue;
      }
      std::int64_t row = m_round[m_pos];
      if (!m_round_mode && m_refreshed.count(row)) {
        ++m_pos;
        continue;
      }
      return row;
    }
  }

  void consume() {
    if (m_prime_pos < m_priming.size()) {
      ++m_prime_pos;
      return;
    }
    ++m_pos;
  }

  const std::vector<std::int64_t>& sizes() const { return m_sizes; }
  const std::optional<Event>& violation() const { return m_violation; }

 private:
  bool start_round() {
    if (!m_sizes.empty() && m_sizes.back() == 0) return false;
    if (static_cast<std::int64_t>(m_sizes.size()) >= m_setup.max_rounds) return false;
    std::erase_if(m_alive, [&](std::int64_t r) { return m_refreshed.count(r) > 0; });
    m_refreshed.clear();
    m_round = m_alive;
    m_pos = 0;
    m_sizes.push_back(static_cast<std::int64_t>(m_round.size()));
    return !m_round.empty();
  }

  const AttackSpec& m_spec;
  const WaveSetup& m_setup;
  bool m_round_mode = false;
  std::vector<std::int64_t> m_alive;
  std::unordered_set<std::int64_t> m_decoys;
  std::unordered_set<std::int64_t> m_refreshed;
  std::vector<std::int64_t> m_priming;
  std::size_t m_prime_pos = 0;
  std::vector<std::int64_t> m_round;
  std::size_t m_pos = 0;
  std::vector<std::int64_t> m_sizes;
  std::optional<Event> m_violation;
};

}  // namespace

WaveResult run_wave_attack(const AttackSpec& spec, const WaveSetup& setup) {
  spec.validate();
  if (spec.kind != AttackKind::Wave) throw ConfigError("run_wave_attack needs a wave attack spec");
  validate(spec.target, setup.n_rh);
  setup.topology.validate();
  if (setup.bank < 0 || setup.bank >= setup.topology.total_banks()) throw ConfigError("attack bank out of range");

  DeviceConfig dc;
  dc.topology = setup.topology;
  dc.timing = setup.timing;
  dc.n_rh = setup.n_rh;
  dc.ref_resets_counters = setup.ref_resets_counters;
  dc.safety_monitor = true;
  if (uses_backoff(spec.target)) {
    auto p = *prac_part(spec.target);
    dc.prac = true;
    dc.abo_th = p.abo_th;
    dc.bo_n_refs = p.bo_n_refs;
    dc.bo_n_acts = p.bo_n_acts;
  }
  Device dev(dc);
  ControllerConfig cc;
  cc.page_policy = PagePolicy::Closed;
  cc.refresh = setup.refresh;
  Controller ctrl(cc, dev, spec.target, make_controller_mitigation(spec.target, setup.topology, setup.timing, 0), 1);

  WaveAttacker attacker(spec, setup);
  ctrl.set_observer([&](const std::vector<Event>& ev) { attacker.on_events(ev); });

  WaveResult out;
  Address where = bank_address(setup.topology, setup.bank);
  std::vector<Completion> sink;
  std::uint64_t id = 1;
  Cycle now = 0;
  bool finished = false;
  for (; now < setup.max_cycles; ++now) {
    dev.advance(now);
    // The row is chosen only once an activation could issue right now, so
    // every refresh reported so far is taken into account.
    if (!finished && ctrl.queued() == 0 && !ctrl.activation_blocked(where, now) &&
        dev.can_issue(Command::ACT, where, now)) {
      auto row = attacker.peek();
      if (!row) {
        finished = true;
      } else {
        where.row = *row;
        {
          attacker.consume();
          Request r;
          r.id = id++;
          r.core = 0;
          r.addr = where;
          r.phys = ctrl.mapper().compose(where);
          r.arrival = now;
          ctrl.enqueue(r);
          out.trace.push_back({0, false, r.phys});
        }
      }
    }
    ctrl.tick(now);
    sink.clear();
    ctrl.collect(now, sink);
    if (setup.stop_on_violation && attacker.violation()) break;
    if (finished && ctrl.pending() == 0 && dev.backoff(where.rank).phase != BackOffPhase::Window &&
        dev.backoff(where.rank).phase != BackOffPhase::Recovery)
      break;
  }
  out.sizes = attacker.sizes();
  out.violation = attacker.violation();
  const auto& st = dev.stats();
  out.max_activations = st.max_disturbance;
  out.acts = st.acts;
  out.rfms = st.rfms;
  out.backoffs = st.backoffs;
  out.cycles = now;
  return out;
}

Trace gen_wave_trace(const AttackSpec& spec, const WaveSetup& setup) { return run_wave_attack(spec, setup).trace; }

Trace gen_perf_attack_trace(const AttackSpec& spec, const TimingParams& t, Cycle duration, const Topology& topo) {
  spec.validate();
  if (spec.kind != AttackKind::PerfDegradation) throw ConfigError("performance attack needs a perf_degradation spec");
  if (spec.banks > topo.banks_per_rank()) throw ConfigError("more attack banks than banks in a rank");
  if (spec.rows_per_bank > topo.rows_per_bank) throw ConfigError("more attack rows than rows in a bank");
  const Cycle rc = t.cycles(t.tRC);
  const Cycle rotation = rc * spec.rows_per_bank;
  if (duration < rotation)
    throw ConfigError("attack duration of " + std::to_string(duration) + " cycles is shorter than one rotation (" +
                      std::to_string(rotation) + " cycles)");
  AddressMapper mapper(topo);
  // Rows spread over the bank so their victims do not overlap.
  const std::int64_t spacing = std::max<std::int64_t>(1, topo.rows_per_bank / (4 * spec.rows_per_bank));
  std::vector<std::uint64_t> targets;
  for (std::int64_t r = 0; r < spec.rows_per_bank; ++r) {
    for (int b = 0; b < spec.banks; ++b) {
      Address a;
      a.bankgroup = b % topo.bankgroups;
      a.bank = (b / topo.bankgroups) % topo.banks_per_group;
      a.row = 8 + r * spacing;
      targets.push_back(mapper.compose(a));
    }
  }
  const Cycle records = ceil_div(duration * spec.banks, rc);
  Trace out;
  out.reserve(static_cast<std::size_t>(records));
  for (Cycle i = 0; i < records; ++i) out.push_back({0, false, targets[static_cast<std::size_t>(i) % targets.size()]});
  return out;
}

}  // namespace pracsim
