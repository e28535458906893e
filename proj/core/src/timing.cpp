#include "pracsim/timing.h"

#include <array>
#include <utility>

#include "pracsim/error.h"

namespace pracsim {

using namespace std::chrono_literals;

namespace {

using Field = Picos TimingParams::*;

constexpr std::array<std::pair<std::string_view, Field>, 20> kFields{{
    {"tRC", &TimingParams::tRC},
    {"tRAS", &TimingParams::tRAS},
    {"tRP", &TimingParams::tRP},
    {"tRCD", &TimingParams::tRCD},
    {"tRTP", &TimingParams::tRTP},
    {"tWR", &TimingParams::tWR},
    {"tCL", &TimingParams::tCL},
    {"tREFW", &TimingParams::tREFW},
    {"tREFI", &TimingParams::tREFI},
    {"tRFC", &TimingParams::tRFC},
    {"tRFM", &TimingParams::tRFM},
    {"tABO_ACT", &TimingParams::tABO_ACT},
    {"tBO_DELAY", &TimingParams::tBO_DELAY},
    {"tBackoffSignal", &TimingParams::tBackoffSignal},
    {"tCCD", &TimingParams::tCCD},
    {"tBL", &TimingParams::tBL},
    {"tRRD", &TimingParams::tRRD},
    {"tFAW", &TimingParams::tFAW},
    {"tWTR", &TimingParams::tWTR},
    {"clock_period", &TimingParams::clock_period},
}};

Field lookup(std::string_view name) {
  for (auto& [n, f] : kFields)
    if (n == name) return f;
  throw ConfigError("unknown timing field '" + std::string(name) + "'");
}

constexpr Picos ps(std::int64_t v) { return Picos{v}; }

// DDR5-3200AN, tCK = 0.625 ns.
TimingParams ddr5_3200an_base() {
  TimingParams t;
  t.clock_period = ps(625);
  t.tRAS = 32ns;
  t.tRP = 15ns;
  t.tRC = t.tRAS + t.tRP;
  t.tRCD = ps(13'750);
  t.tCL = ps(13'750);
  t.tRTP = ps(7'500);
  t.tWR = 30ns;
  t.tREFW = 32ms;
  t.tREFI = ps(3'900'000);
  t.tRFC = 295ns;
  t.tRFM = 350ns;
  t.tABO_ACT = 180ns;
  t.tBackoffSignal = 5ns;
  t.tBO_DELAY = 4 * t.tRC;
  t.tCCD = 5ns;    // 8 tCK
  t.tBL = 5ns;     // BL16 on a DDR bus
  t.tRRD = 5ns;
  t.tFAW = 20ns;
  t.tWTR = 10ns;
  return t;
}

// Parameters that make the closed-form attack arithmetic reproduce the
// published 29.58 ms / 577 ns / 3859 ns values.
TimingParams analysis_appendix() {
  TimingParams t = ddr5_3200an_base();
  t.tRFM = 295ns;
  return t;
}

}  // namespace

void TimingParams::validate() const {
  auto fail = [](const std::string& m) { throw InvalidTiming(m); };
  for (auto& [name, f] : kFields)
    if ((this->*f).count() <= 0) fail(std::string(name) + " must be positive");
  if (tRC != tRAS + tRP) fail("tRC must equal tRAS + tRP");
  if (tREFI >= tREFW) fail("tREFI must be shorter than tREFW");
  if (tRFC >= tREFI) fail("tRFC must be shorter than tREFI");
}

std::vector<std::string> timing_field_names() {
  std::vector<std::string> out;
  for (auto& [n, f] : kFields) out.emplace_back(n);
  return out;
}

Picos& timing_field(TimingParams& t, std::string_view name) { return t.*lookup(name); }
Picos timing_field(const TimingParams& t, std::string_view name) { return t.*lookup(name); }

std::vector<std::string> preset_names() {
  return {"ddr5-3200an-base", "ddr5-3200an-prac", "analysis-appendix"};
}

TimingParams preset(std::string_view name) {
  TimingParams t;
  if (name == "ddr5-3200an-base") t = ddr5_3200an_base();
  else if (name == "ddr5-3200an-prac") t = apply_prac_adjustments(ddr5_3200an_base());
  else if (name == "analysis-appendix") t = analysis_appendix();
  else {
    std::string valid;
    for (auto& n : preset_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown timing preset '" + std::string(name) + "' (valid: " + valid + ")");
  }
  t.validate();
  return t;
}

TimingParams apply_prac_adjustments(const TimingParams& base) {
  if (base.prac_adjusted) throw InvalidTiming("PRAC timing adjustments already applied");
  TimingParams t = base;
  t.tRP += 21ns;
  t.tRAS -= 16ns;
  t.tRTP -= ps(2'500);
  t.tWR -= 20ns;
  if (t.tRAS.count() <= 0 || t.tRTP.count() <= 0 || t.tWR.count() <= 0)
    throw InvalidTiming("PRAC adjustment drives a timing parameter to zero or below");
  t.tRC = t.tRAS + t.tRP;
  t.prac_adjusted = true;
  t.validate();
  return t;
}

TimingParams with_refresh_window(const TimingParams& t, std::int64_t refs_per_window) {
  if (refs_per_window < 2) throw ConfigError("refresh window needs at least two REF intervals");
  TimingParams out = t;
  out.tREFW = t.tREFI * refs_per_window;
  out.validate();
  return out;
}

}  // namespace pracsim
