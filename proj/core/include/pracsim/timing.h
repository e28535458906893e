#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pracsim/units.h"

namespace pracsim {

// DRAM timing constraints in exact picoseconds. Scheduling uses cycles(),
// which rounds a duration up to whole command-clock cycles.
struct TimingParams {
  Picos tRC{};
  Picos tRAS{};
  Picos tRP{};
  Picos tRCD{};
  Picos tRTP{};
  Picos tWR{};
  Picos tCL{};
  Picos tREFW{};
  Picos tREFI{};
  Picos tRFC{};
  Picos tRFM{};
  Picos tABO_ACT{};
  Picos tBO_DELAY{};
  Picos tBackoffSignal{};
  // Bus-level constraints used only by the simulator.
  Picos tCCD{};
  Picos tBL{};
  Picos tRRD{};
  Picos tFAW{};
  Picos tWTR{};
  Picos clock_period{};
  bool prac_adjusted = false;

  // Throws InvalidTiming when an invariant does not hold.
  void validate() const;

  Cycle cycles(Picos d) const { return ceil_div(d.count(), clock_period.count()); }

  // REF commands issued per refresh window.
  std::int64_t refs_per_window() const { return tREFW / tREFI; }

  bool operator==(const TimingParams&) const = default;
};

// Field access by name, used by config overrides and diffing.
std::vector<std::string> timing_field_names();
Picos& timing_field(TimingParams& t, std::string_view name);
Picos timing_field(const TimingParams& t, std::string_view name);

std::vector<std::string> preset_names();
TimingParams preset(std::string_view name);

// Applies the PRAC timing changes to a base parameter set. Throws
// InvalidTiming if the input was already adjusted or a field would become
// non-positive.
TimingParams apply_prac_adjustments(const TimingParams& base);

// Scales refresh cadence for small-row desk topologies: keeps tREFI and
// tRFC, shrinks tREFW to `refs_per_window` REF intervals.
TimingParams with_refresh_window(const TimingParams& t, std::int64_t refs_per_window);

}  // namespace pracsim
