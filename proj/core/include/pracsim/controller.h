#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <vector>

#include "pracsim/dram.h"
#include "pracsim/mitigations.h"

namespace pracsim {

// Minimalist open-page interleaving. From the least significant bit of a
// byte address: 6 bits block offset, 2 bits low column (a group of four
// consecutive blocks shares a row), bank group, bank, rank, the remaining
// column bits, then row.
class AddressMapper {
 public:
  static constexpr int kGroupBlocks = 4;

  explicit AddressMapper(const Topology& topo);
  Address map(std::uint64_t phys) const;
  std::uint64_t compose(const Address& a) const;
  std::uint64_t capacity() const { return m_capacity; }

 private:
  Topology m_topo;
  int m_bg_bits, m_bank_bits, m_rank_bits, m_col_hi_bits, m_row_bits;
  std::uint64_t m_capacity;
};

enum class PagePolicy { Open, Closed };

struct ControllerConfig {
  int read_queue_depth = 64;
  int write_queue_depth = 64;
  int frfcfs_cap = 4;
  // Write drain starts at 7/8 full and stops at 1/4 full.
  int write_high = 56;
  int write_low = 16;
  PagePolicy page_policy = PagePolicy::Open;
  bool refresh = true;

  void validate() const;
};

struct Request {
  std::uint64_t id = 0;
  int core = -1;  // -1 for controller-internal counter traffic
  bool write = false;
  std::uint64_t phys = 0;
  Address addr{};
  Cycle arrival = 0;
};

struct Completion {
  std::uint64_t id;
  int core;
  Cycle ready;
  Cycle arrival;
};

struct ControllerStats {
  std::vector<std::int64_t> row_misses;  // per core, ACTs caused
  std::vector<std::int64_t> reads;
  std::vector<std::int64_t> writes;
  std::int64_t rfm_prfm = 0;
  std::int64_t rfm_backoff = 0;
  std::int64_t preventive_refreshes = 0;
  std::int64_t counter_reads = 0;
  std::int64_t counter_writes = 0;
  std::vector<std::int32_t> read_latency;  // DRAM cycles
};

class Controller {
 public:
  Controller(ControllerConfig cfg, Device& device, MitigationConfig mitigation,
             std::unique_ptr<ControllerMitigation> controller_side, int cores);

  const AddressMapper& mapper() const { return m_mapper; }
  bool can_accept(bool write) const;
  // Returns false if the target queue is full.
  bool enqueue(Request r);
  std::size_t pending() const { return m_reads.size() + m_writes.size() + m_inflight.size(); }
  std::size_t queued() const { return m_reads.size() + m_writes.size(); }

  // True if the controller would hold back an activation of `a` at `now`
  // for refresh, RFM or back-off work.
  bool activation_blocked(const Address& a, Cycle now) const {
    return act_blocked(a.rank, flat_bank(m_dev.topology(), a), now);
  }

  // Issues at most one command at `now`.
  void tick(Cycle now);

  // Reads whose data arrived by `now`.
  void collect(Cycle now, std::vector<Completion>& out);

  // Called with device events after every issued command.
  void set_observer(std::function<void(const std::vector<Event>&)> f) { m_observer = std::move(f); }

  const ControllerStats& stats() const { return m_stats; }
  const MitigationConfig& mitigation() const { return m_mitigation; }

 private:
  struct Queued {
    Request req;
    int flat;
  };
  bool issue(Command cmd, const Address& a, Cycle now, bool reset = false);
  bool try_backoff(Cycle now);
  bool try_maintenance(Cycle now);
  bool try_requests(Cycle now);
  bool close_banks(int rank, Cycle now, bool only_idle);
  void on_act(const Queued& q, Cycle now);
  bool act_blocked(int rank, int flat, Cycle now) const;
  bool column_blocked(int rank, Command cmd, Cycle now) const;
  int open_banks(int rank) const;
  bool has_hit(int flat, std::int64_t row) const;

  ControllerConfig m_cfg;
  Device& m_dev;
  AddressMapper m_mapper;
  MitigationConfig m_mitigation;
  std::unique_ptr<ControllerMitigation> m_side;
  std::optional<PrfmParams> m_prfm;
  bool m_backoff;
  Cycle m_rc, m_rp, m_rtp, m_wr_tail, m_refi;

  std::deque<Queued> m_reads;
  std::deque<Queued> m_writes;
  bool m_draining_writes = false;
  std::vector<Completion> m_inflight;
  std::vector<Cycle> m_next_ref;
  std::vector<int> m_bypass;           // per bank
  std::vector<std::int64_t> m_vrr;     // per bank pending aggressor, -1 if none
  std::vector<char> m_prfm_due;        // per bank
  std::vector<int> m_prfm_due_rank;    // pending triggers per rank
  int m_vrr_pending = 0;
  std::vector<int> m_prfm_grace;       // hits still allowed before the RFM
  std::deque<Request> m_internal;
  std::uint64_t m_internal_id = 1ULL << 62;
  std::function<void(const std::vector<Event>&)> m_observer;
  ControllerStats m_stats;
  std::vector<std::size_t> m_first_miss;  // scratch, per bank
  std::vector<int> m_hits;                // scratch, per bank
};

}  // namespace pracsim
