#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "pracsim/units.h"

namespace pracsim {

struct CoreResult {
  double ipc_shared = 0.0;
  double ipc_alone = 0.0;
  std::int64_t instructions = 0;
  std::int64_t cycles = 0;
  std::int64_t row_misses = 0;
  std::int64_t reads = 0;
  std::int64_t writes = 0;
  bool attacker = false;

  double rbmpki() const { return instructions ? 1000.0 * row_misses / instructions : 0.0; }
};

struct CommandCounts {
  std::int64_t act = 0;
  std::int64_t pre = 0;
  std::int64_t rd = 0;
  std::int64_t wr = 0;
  std::int64_t ref = 0;
  std::int64_t rfm = 0;
  std::int64_t preventive = 0;
  bool operator==(const CommandCounts&) const = default;
};

struct EnergyModel {
  // Picojoules per command, rank-level (eight x8 devices).
  double act_pj = 0;  // ACT + matching PRE
  double rd_pj = 0;
  double wr_pj = 0;
  double ref_pj = 0;
  double rfm_pj = 0;         // RFMab across all banks of a rank
  double preventive_pj = 0;  // targeted refresh of four victim rows
  double background_mw = 0;  // all ranks together

  static EnergyModel ddr5_default();
};

struct EnergyBreakdown {
  double act = 0, rd = 0, wr = 0, ref = 0, rfm = 0, preventive = 0, background = 0;
  double total() const { return act + rd + wr + ref + rfm + preventive + background; }
};

EnergyBreakdown energy(const CommandCounts& counts, const EnergyModel& model, Picos runtime);

struct LatencyTable {
  static constexpr std::array<double, 6> kPercentiles{50, 90, 99, 99.9, 99.99, 100};
  std::array<double, 6> ns{};  // indexed like kPercentiles
};

// Exact nearest-rank percentiles.
LatencyTable latency_percentiles(std::vector<std::int32_t> cycles, Picos clock_period);

struct SimReport {
  // Identification: mix, mechanism, n_rh, attacker presence.
  std::string mix;
  std::string mechanism;
  std::int64_t n_rh = 0;
  bool attack = false;
  std::uint64_t seed = 0;

  std::vector<CoreResult> cores;
  double weighted_speedup = 0.0;
  CommandCounts commands;
  EnergyBreakdown energy_pj;
  LatencyTable latency;
  std::int64_t max_row_activation = 0;
  std::int64_t backoffs = 0;
  std::int64_t rfm_prfm = 0;
  std::int64_t rfm_backoff = 0;
  std::int64_t deadline_slack_min = -1;
  double deadline_slack_mean = 0.0;
  std::int64_t cpu_cycles = 0;
  std::int64_t dram_cycles = 0;

  std::string key() const;
};

// Sum over cores of shared/alone IPC.
double weighted_speedup(const std::vector<double>& shared, const std::vector<double>& alone);

// Fills ipc_alone and recomputes weighted speedup over non-attacker cores.
void attach_alone(SimReport& r, const std::vector<double>& alone);

struct SlowdownStats {
  double avg_ws_loss = 0.0;  // percent
  double max_ws_loss = 0.0;
  double max_single_app_slowdown = 0.0;
};

// Reports are paired by mix; throws PreconditionError on mismatch.
SlowdownStats slowdown_stats(const std::vector<SimReport>& baseline, const std::vector<SimReport>& treated);

void write_reports_csv(std::ostream& out, const std::vector<SimReport>& reports);
std::vector<SimReport> read_reports_csv(std::istream& in);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace pracsim
