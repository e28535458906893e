#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pracsim/timing.h"

namespace pracsim {

struct PrfmParams {
  std::int64_t rfm_th = 1;
  std::int64_t victims_per_rfm = 4;

  void validate() const;
  bool operator==(const PrfmParams&) const = default;
};

struct PracParams {
  std::int64_t abo_th = 1;
  std::int64_t bo_n_refs = 4;
  std::int64_t bo_n_acts = 4;
  // Percent of N_RH at which the device asserts back-off: 70, 80, 90 or 100.
  std::int64_t quantization_pct = 100;

  void validate() const;
  bool operator==(const PracParams&) const = default;
};

// A rational number of activations between consecutive back-off recoveries.
struct ActRatio {
  std::int64_t num = 1;
  std::int64_t den = 1;
};

// Surviving aggressor-set sizes per round of a wave attack.
struct RowSetTrajectory {
  std::vector<std::int64_t> sizes;
  // cumulative[i] = sizes[0] + ... + sizes[i]
  std::vector<std::int64_t> cumulative;

  // Number of rounds before the set empties: a cold row in round i has
  // received i + 1 activations, so this is also the last survivor's count.
  std::int64_t rounds() const;
  bool terminated() const { return !sizes.empty() && sizes.back() == 0; }
};

RowSetTrajectory prfm_trajectory(std::int64_t r1, const PrfmParams& p, std::int64_t max_steps);

// The same recurrence iterated one round at a time with an explicit bank
// activation counter carried between rounds.
RowSetTrajectory prfm_trajectory_stepwise(std::int64_t r1, const PrfmParams& p,
                                          std::int64_t max_steps);

enum class PracModel {
  // Removal of bo_n_refs rows per recovery; bo_n_acts + tABO_ACT/tRC
  // activations between recoveries.
  Final,
  // Earlier form: bo_n_refs rows removed every bo_n_refs + bo_n_acts
  // activations.
  EarlyDraft,
};

enum class DivisorMode {
  // tABO_ACT/tRC kept as an exact fraction.
  Exact,
  // tABO_ACT/tRC truncated to whole activations.
  Floored,
};

struct PracOptions {
  PracModel model = PracModel::Final;
  DivisorMode divisor = DivisorMode::Exact;
  std::int64_t max_steps = 1 << 20;
};

ActRatio prac_divisor(const PracParams& p, const TimingParams& t, const PracOptions& opt = {});

RowSetTrajectory prac_trajectory(std::int64_t r1, const PracParams& p, const TimingParams& t,
                                 const PracOptions& opt = {});

// Core recurrence: sizes[i] = r1 - removed_per_step * floor(S_i / divisor).
RowSetTrajectory removal_trajectory(std::int64_t r1, std::int64_t removed_per_step,
                                    ActRatio divisor, std::int64_t max_steps);

struct ActBudget {
  Picos d_allref{};
  Picos t_available{};
  Picos t_rfm_period{};
  std::int64_t max_rfm = 0;
  std::int64_t max_act = 0;
};

ActBudget max_act_budget(const TimingParams& t, const PrfmParams& p);

// Upper bound on bank activations in one refresh window when every
// `divisor` activations cost a recovery of bo_n_refs RFMs.
std::int64_t max_act_prac(const TimingParams& t, const PracParams& p, const PracOptions& opt = {});

struct Verdict {
  bool secure = true;
  // Smallest initial decoy-set size that reaches n_rh.
  std::optional<std::int64_t> witness_b0;
  // Largest per-row activation count reachable for any B_0 in range.
  std::int64_t max_activations = 0;
};

constexpr std::int64_t kDefaultRowsPerBank = 65'536;

// Highest activation count a wave attack starting from b0 rows can put on
// a single row inside one refresh window.
std::int64_t prfm_reach(std::int64_t b0, const PrfmParams& p, std::int64_t max_act,
                        std::int64_t stop_at);
std::int64_t prac_reach(std::int64_t b0, const PracParams& p, const TimingParams& t,
                        const PracOptions& opt, std::int64_t stop_at);

Verdict is_secure_prfm(std::int64_t n_rh, const PrfmParams& p, const TimingParams& t,
                       std::int64_t b0_max = kDefaultRowsPerBank);
Verdict is_secure_prac(std::int64_t n_rh, const PracParams& p, const TimingParams& t,
                       std::int64_t b0_max = kDefaultRowsPerBank, const PracOptions& opt = {});

// Largest threshold that is still secure for n_rh (0 if none is).
std::int64_t max_secure_rfm_th(std::int64_t n_rh, const TimingParams& t,
                               std::int64_t b0_max = kDefaultRowsPerBank);
std::int64_t max_secure_abo_th(std::int64_t n_rh, PracParams p, const TimingParams& t,
                               std::int64_t b0_max = kDefaultRowsPerBank, const PracOptions& opt = {});

// Back-off threshold the device uses for a given N_RH and quantization.
std::int64_t quantized_abo_th(std::int64_t n_rh, std::int64_t quantization_pct);

enum class Mechanism { Prfm, Prac };

struct SweepGrid {
  Mechanism mechanism = Mechanism::Prfm;
  std::vector<std::int64_t> thresholds;  // rfm_th or abo_th
  // PRFM: initial decoy-set sizes to report. Empty means one row per
  // threshold, maximized over every B_0 up to b0_max.
  std::vector<std::int64_t> b0s;
  // PRAC: recovery sizes to report.
  std::vector<std::int64_t> bo_n_refs;
  std::int64_t bo_n_acts = 1;
  std::optional<std::int64_t> n_rh;
  std::int64_t b0_max = kDefaultRowsPerBank;
  PracOptions prac{};
};

struct SweepRow {
  Mechanism mechanism = Mechanism::Prfm;
  std::int64_t threshold = 0;
  // b0 for PRFM rows, bo_n_refs for PRAC rows. 0 marks "maximized over B_0".
  std::int64_t second = 0;
  std::int64_t max_activations = 0;
  std::optional<bool> secure_at_nrh;

  bool operator==(const SweepRow&) const = default;
};

// Rows are sorted by (threshold, second) regardless of grid order or
// worker count.
std::vector<SweepRow> sweep(const SweepGrid& grid, const TimingParams& t, unsigned workers = 1);

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace pracsim
