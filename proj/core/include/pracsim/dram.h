#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "pracsim/security.h"
#include "pracsim/timing.h"

namespace pracsim {

struct Topology {
  int channels = 1;
  int ranks = 2;
  int bankgroups = 8;
  int banks_per_group = 4;
  std::int64_t rows_per_bank = 65'536;
  // 64-byte cache blocks per row (8 KiB rows).
  int columns = 128;

  void validate() const;
  int banks_per_rank() const { return bankgroups * banks_per_group; }
  int total_banks() const { return channels * ranks * banks_per_rank(); }
  std::int64_t total_rows() const { return rows_per_bank * total_banks(); }
  bool operator==(const Topology&) const = default;
};

// Desk-scale topology: 64 rows per bank so exhaustive attacks are cheap.
Topology desk_topology();

struct Address {
  int channel = 0;
  int rank = 0;
  int bankgroup = 0;
  int bank = 0;
  std::int64_t row = 0;
  int column = 0;
  bool operator==(const Address&) const = default;
};

inline int flat_bank(const Topology& t, const Address& a) {
  return (a.rank * t.bankgroups + a.bankgroup) * t.banks_per_group + a.bank;
}
Address bank_address(const Topology& t, int flat);

enum class Command { ACT, PRE, RD, WR, RDA, WRA, REF, RFMab, RFMsb, VRR };
const char* command_name(Command c);

enum class BackOffPhase { Idle, Window, Recovery, Delay };

struct BackOffState {
  BackOffPhase phase = BackOffPhase::Idle;
  // Cycle at which an already-triggered assert becomes visible.
  std::optional<Cycle> pending_assert;
  Cycle window_deadline = 0;
  std::int64_t rfms_left = 0;
  std::int64_t acts_left = 0;
  std::int64_t window_acts = 0;
};

enum class EventKind {
  BackOffAsserted,  // rank, cycle when visible to the controller
  RfmServed,        // bank, aggressor row whose victims were refreshed
  RefServed,        // rank, first row, row count
  VictimRefresh,    // bank, aggressor row (controller-side preventive refresh)
  SafetyViolation,  // bank, aggressor row, victim row, count
};

struct Event {
  EventKind kind{};
  Cycle cycle = 0;
  int rank = 0;
  int bank = -1;
  std::int64_t row = 0;
  std::int64_t victim = 0;
  std::int64_t count = 0;
};

struct DeviceConfig {
  Topology topology{};
  TimingParams timing{};
  // Per-row counting with back-off.
  bool prac = false;
  std::int64_t abo_th = 0;
  std::int64_t bo_n_refs = 4;
  std::int64_t bo_n_acts = 1;
  // Sizes the per-row counters: ceil(log2 n_rh) + 1 bits, saturating.
  std::int64_t n_rh = 1024;
  int blast_radius = 2;
  bool ref_resets_counters = true;
  // Victim-centric disturbance tracking for safety checks.
  bool safety_monitor = false;
  bool event_log = false;
};

struct LogRecord {
  Cycle cycle;
  Command command;
  int rank;
  int bankgroup;
  int bank;
  std::int64_t row;
};

struct DeviceStats {
  std::int64_t acts = 0;
  std::int64_t pres = 0;
  std::int64_t reads = 0;
  std::int64_t writes = 0;
  std::int64_t refs = 0;
  std::int64_t rfms = 0;
  std::int64_t victim_refreshes = 0;
  std::int64_t backoffs = 0;
  std::int64_t counter_increments = 0;
  std::int64_t counter_cleared = 0;
  std::int64_t deadline_slack_min = -1;
  std::int64_t max_disturbance = 0;
  std::vector<Cycle> deadline_slack;
};

int counter_bits(std::int64_t n_rh);

class Device {
 public:
  explicit Device(DeviceConfig cfg);

  const DeviceConfig& config() const { return m_cfg; }
  const Topology& topology() const { return m_cfg.topology; }

  struct Check {
    const char* constraint = nullptr;
    Cycle earliest = 0;
    bool structural = false;  // wrong bank state, not a matter of waiting
  };
  // Earliest cycle the command may issue. `structural` is set when the
  // command is illegal in the current bank state regardless of time.
  Check check(Command cmd, const Address& a, Cycle now) const;
  bool can_issue(Command cmd, const Address& a, Cycle now) const {
    auto c = check(cmd, a, now);
    return !c.structural && c.earliest <= now;
  }

  // Applies a command; throws ProtocolViolation if it is not legal at `now`.
  // For RFMab/RFMsb, `reset_act_count` clears the addressed bank's
  // PRFM activation count. The returned events stay valid until the next
  // call.
  const std::vector<Event>& issue(Command cmd, const Address& a, Cycle now,
                                  bool reset_act_count = false);

  // Advances lazily-timed state (pending back-off asserts) to `now`.
  // Events it raises are kept until clear_events() or the next issue().
  void advance(Cycle now);
  const std::vector<Event>& events() const { return m_events; }
  void clear_events() { m_events.clear(); }

  std::optional<std::int64_t> open_row(int flat) const;
  std::int64_t counter(int flat, std::int64_t row) const;
  // Rows activated since the bank's last RFM (PRFM accounting).
  std::int64_t bank_act_count(int flat) const { return m_banks[flat].prfm_counter; }
  const BackOffState& backoff(int rank) const { return m_backoff[rank]; }
  Cycle bank_busy_until(int flat) const { return m_banks[flat].busy_until; }
  Cycle data_ready(Command cmd, Cycle issue) const;

  std::int64_t refresh_pointer(int rank) const { return m_ref_ptr[rank]; }
  std::int64_t rows_per_ref() const { return m_rows_per_ref; }

  const DeviceStats& stats() const { return m_stats; }
  std::int64_t counter_sum() const;
  const std::vector<LogRecord>& log() const { return m_log; }
  void write_log_csv(std::ostream& out) const;

  std::vector<std::int64_t> victims(std::int64_t row) const;

 private:
  struct Bank {
    std::int64_t open_row = -1;
    Cycle last_act = -(1LL << 40);
    Cycle last_pre = -(1LL << 40);
    Cycle last_rd = -(1LL << 40);
    Cycle last_wr = -(1LL << 40);
    Cycle busy_until = 0;
    const char* busy_reason = "tRFC";
    std::int64_t prfm_counter = 0;
    std::vector<std::uint16_t> counters;
    // Rows with non-zero counters ordered by (count desc, row asc).
    std::set<std::pair<int, std::int64_t>> hot;
  };
  struct RankTiming {
    std::array<Cycle, 4> faw{};  // last four ACTs, oldest first
    Cycle last_act = -(1LL << 40);
    Cycle next_col = 0;
    Cycle last_wr_end = -(1LL << 40);
    std::int64_t rows_at_threshold = 0;
  };
  struct Cyc {
    Cycle RC, RAS, RP, RCD, RTP, WR, CL, RFC, RFM, ABO, BS, CCD, BL, RRD, FAW, WTR;
  };

  void close_row(int flat, Cycle when);
  void set_counter(int flat, std::int64_t row, int value);
  void refresh_victims(int flat, std::int64_t aggressor);
  void clear_disturbance(int flat, std::int64_t victim);
  void serve_rfm(int flat, Cycle now);
  void serve_ref(int rank, Cycle now);
  void on_activate(int flat, std::int64_t row, Cycle now);
  void maybe_assert(int rank, Cycle when);
  void emit(const Event& e) { m_events.push_back(e); }

  DeviceConfig m_cfg;
  Cyc m_c{};
  int m_counter_max = 0;
  std::int64_t m_rows_per_ref = 1;
  std::vector<Bank> m_banks;
  std::vector<RankTiming> m_ranks;
  std::vector<BackOffState> m_backoff;
  std::vector<std::int64_t> m_ref_ptr;
  // disturbance[bank][victim * 2r + slot] = aggressor ACTs since the
  // victim's last refresh, one slot per neighbor offset.
  std::vector<std::vector<std::uint32_t>> m_disturbance;
  std::vector<Event> m_events;
  std::vector<LogRecord> m_log;
  DeviceStats m_stats;
};

}  // namespace pracsim
