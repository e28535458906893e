#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "pracsim/controller.h"
#include "pracsim/workloads.h"

namespace pracsim {

enum class AttackKind { Wave, PerfDegradation };

struct AttackSpec {
  AttackKind kind = AttackKind::Wave;
  std::int64_t rows_per_bank = 8;
  int banks = 4;
  // Activations given to each decoy row before the rounds start.
  std::int64_t initial_priming = 0;
  MitigationConfig target = NoMitigation{};

  void validate() const;
};

// Defaults for the throughput attack: eight rows in each of four banks.
AttackSpec perf_attack_spec(MitigationConfig target = NoMitigation{});

struct Consumption {
  Picos t_available{};
  Picos t_attack_period{};
  Picos t_prevent{};
  double fraction = 0.0;
};

using MechanismParams = std::variant<PrfmParams, PracParams>;

// Share of refresh-free time spent on preventive refreshes when an attacker
// keeps triggering them back to back.
Consumption theoretical_consumption(const TimingParams& t, const MechanismParams& mech);

// Steady-state share bo_n_refs*tRFM / (bo_n_refs*tRFM + abo_th*tRC).
double steady_state_fraction(const TimingParams& t, const PracParams& p);

struct WaveSetup {
  Topology topology = desk_topology();
  // Timing the device runs with, used unmodified.
  TimingParams timing{};
  std::int64_t n_rh = 1024;
  std::int64_t b0 = 1;
  int bank = 0;       // flat bank index
  std::int64_t first_row = 0;
  std::int64_t row_stride = 1;
  bool refresh = false;
  bool ref_resets_counters = true;
  bool stop_on_violation = false;
  std::int64_t max_rounds = 1 << 20;
  Cycle max_cycles = 1LL << 40;
};

struct WaveResult {
  Trace trace;
  // Surviving decoys at the start of each round, ending with 0 when the
  // attack ran out of rows.
  std::vector<std::int64_t> sizes;
  // Highest per-aggressor activation count seen by any victim between its
  // refreshes, as tracked by the device.
  std::int64_t max_activations = 0;
  std::optional<Event> violation;
  std::int64_t acts = 0;
  std::int64_t rfms = 0;
  std::int64_t backoffs = 0;
  Cycle cycles = 0;
};

// Runs the wave attack against the controller and device, pruning a decoy
// once its victims have been refreshed. Under back-off the attacker prunes
// at round boundaries (rows refreshed mid-round are still activated once
// more in that round); under PRFM it prunes immediately.
WaveResult run_wave_attack(const AttackSpec& spec, const WaveSetup& setup);

// The attacker's access sequence from run_wave_attack.
Trace gen_wave_trace(const AttackSpec& spec, const WaveSetup& setup);

// Back-off timing for which exactly `window_acts` attacker activations
// fit between an assert and the first recovery RFM, with every parameter
// a whole number of clocks.
TimingParams wave_oracle_timing(std::int64_t window_acts);

// Row-conflict accesses over spec.banks x spec.rows_per_bank targets,
// interleaved across bank groups first, covering `duration` DRAM cycles at
// one activation per tRC per bank.
Trace gen_perf_attack_trace(const AttackSpec& spec, const TimingParams& t, Cycle duration,
                            const Topology& topo = Topology{});

}  // namespace pracsim
