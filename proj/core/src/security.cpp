#include "pracsim/security.h"

#include <algorithm>
#include <limits>
#include <sstream>
#include <thread>

#include "pracsim/error.h"

namespace pracsim {

namespace {

using i128 = __int128;
constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max();

std::int64_t floor_div_ratio(std::int64_t s, ActRatio r) {
  return static_cast<std::int64_t>(static_cast<i128>(s) * r.den / r.num);
}

RowSetTrajectory make(std::vector<std::int64_t> sizes) {
  RowSetTrajectory tr;
  tr.sizes = std::move(sizes);
  tr.cumulative.reserve(tr.sizes.size());
  std::int64_t s = 0;
  for (auto b : tr.sizes) tr.cumulative.push_back(s += b);
  return tr;
}

// Walks the wave rounds for one B_0 and returns the highest activation
// count some row reaches. `attack_cost_ok(sum_before_round)` decides
// whether the first activation of the next round still fits the budget.
template <class CostOk>
std::int64_t walk_reach(std::int64_t b0, std::int64_t removed, ActRatio divisor,
                        std::int64_t already, std::int64_t stop_at, CostOk cost_ok) {
  std::int64_t reach = already;
  std::int64_t sum = 0;
  std::int64_t size = b0;
  while (size > 0 && reach < stop_at) {
    if (!cost_ok(sum)) break;
    ++reach;
    sum += size;
    size = b0 - removed * floor_div_ratio(sum, divisor);
  }
  return reach;
}

}  // namespace

void PrfmParams::validate() const {
  if (rfm_th < 1) throw PreconditionError("rfm_th must be at least 1");
  if (victims_per_rfm < 1) throw PreconditionError("victims_per_rfm must be at least 1");
}

void PracParams::validate() const {
  auto allowed = [](std::int64_t v) { return v == 1 || v == 2 || v == 4; };
  if (abo_th < 1) throw PreconditionError("abo_th must be at least 1");
  if (!allowed(bo_n_refs)) throw PreconditionError("bo_n_refs must be 1, 2 or 4");
  if (!allowed(bo_n_acts)) throw PreconditionError("bo_n_acts must be 1, 2 or 4");
  if (quantization_pct != 70 && quantization_pct != 80 && quantization_pct != 90 &&
      quantization_pct != 100)
    throw PreconditionError("back-off quantization must be 70, 80, 90 or 100 percent");
}

std::int64_t RowSetTrajectory::rounds() const {
  auto it = std::find(sizes.begin(), sizes.end(), 0);
  return it - sizes.begin();
}

RowSetTrajectory removal_trajectory(std::int64_t r1, std::int64_t removed_per_step,
                                    ActRatio divisor, std::int64_t max_steps) {
  if (r1 < 1) throw PreconditionError("initial row-set size must be at least 1");
  if (max_steps < 1) throw PreconditionError("max_steps must be at least 1");
  if (divisor.num <= 0 || divisor.den <= 0) throw PreconditionError("degenerate divisor");
  std::vector<std::int64_t> sizes{r1};
  std::int64_t sum = 0;
  while (sizes.back() > 0 && static_cast<std::int64_t>(sizes.size()) < max_steps) {
    sum += sizes.back();
    i128 next = static_cast<i128>(r1) - static_cast<i128>(removed_per_step) * floor_div_ratio(sum, divisor);
    sizes.push_back(next > 0 ? static_cast<std::int64_t>(next) : 0);
  }
  return make(std::move(sizes));
}

RowSetTrajectory prfm_trajectory(std::int64_t r1, const PrfmParams& p, std::int64_t max_steps) {
  p.validate();
  return removal_trajectory(r1, 1, {p.rfm_th, 1}, max_steps);
}

RowSetTrajectory prfm_trajectory_stepwise(std::int64_t r1, const PrfmParams& p,
                                          std::int64_t max_steps) {
  p.validate();
  if (r1 < 1) throw PreconditionError("initial row-set size must be at least 1");
  if (max_steps < 1) throw PreconditionError("max_steps must be at least 1");
  std::vector<std::int64_t> sizes{r1};
  std::int64_t bank_counter = 0;
  std::int64_t b = r1;
  while (b > 0 && static_cast<std::int64_t>(sizes.size()) < max_steps) {
    std::int64_t acts = bank_counter + b;
    b = std::max<std::int64_t>(0, b - acts / p.rfm_th);
    bank_counter = acts % p.rfm_th;
    sizes.push_back(b);
  }
  return make(std::move(sizes));
}

ActRatio prac_divisor(const PracParams& p, const TimingParams& t, const PracOptions& opt) {
  if (opt.model == PracModel::EarlyDraft) return {p.bo_n_refs + p.bo_n_acts, 1};
  const std::int64_t window = t.tABO_ACT.count();
  const std::int64_t rc = t.tRC.count();
  if (opt.divisor == DivisorMode::Floored) {
    std::int64_t d = p.bo_n_acts + window / rc;
    if (d == 0) throw PreconditionError("degenerate back-off divisor");
    return {d, 1};
  }
  if (p.bo_n_acts == 0 && window == 0) throw PreconditionError("degenerate back-off divisor");
  return {p.bo_n_acts * rc + window, rc};
}

RowSetTrajectory prac_trajectory(std::int64_t r1, const PracParams& p, const TimingParams& t,
                                 const PracOptions& opt) {
  p.validate();
  return removal_trajectory(r1, p.bo_n_refs, prac_divisor(p, t, opt), opt.max_steps);
}

ActBudget max_act_budget(const TimingParams& t, const PrfmParams& p) {
  p.validate();
  ActBudget b;
  b.d_allref = t.tRFC * t.refs_per_window();
  b.t_available = t.tREFW - b.d_allref;
  b.t_rfm_period = t.tRC * p.rfm_th + t.tRFM;
  b.max_rfm = b.t_available / b.t_rfm_period;
  b.max_act = b.max_rfm * p.rfm_th;
  return b;
}

std::int64_t max_act_prac(const TimingParams& t, const PracParams& p, const PracOptions& opt) {
  p.validate();
  ActRatio d = prac_divisor(p, t, opt);
  Picos available = t.tREFW - t.tRFC * t.refs_per_window();
  // One recovery cycle: d activations and bo_n_refs RFMs.
  i128 cycle_ps_times_den = static_cast<i128>(d.num) * t.tRC.count() +
                            static_cast<i128>(d.den) * p.bo_n_refs * t.tRFM.count();
  return static_cast<std::int64_t>(static_cast<i128>(available.count()) * d.num / cycle_ps_times_den);
}

std::int64_t prfm_reach(std::int64_t b0, const PrfmParams& p, std::int64_t max_act,
                        std::int64_t stop_at) {
  return walk_reach(b0, 1, {p.rfm_th, 1}, 0, stop_at,
                    [&](std::int64_t sum) { return sum + 1 <= max_act; });
}

std::int64_t prac_reach(std::int64_t b0, const PracParams& p, const TimingParams& t,
                        const PracOptions& opt, std::int64_t stop_at) {
  const ActRatio d = prac_divisor(p, t, opt);
  const i128 available = (t.tREFW - t.tRFC * t.refs_per_window()).count();
  const i128 priming = static_cast<i128>(p.abo_th - 1) * b0;
  auto ok = [&](std::int64_t sum) {
    i128 acts = priming + sum + 1;
    i128 recoveries = floor_div_ratio(sum, d);
    return acts * t.tRC.count() + recoveries * p.bo_n_refs * t.tRFM.count() <= available;
  };
  if (!ok(0)) return 0;
  return walk_reach(b0, p.bo_n_refs, d, p.abo_th - 1, stop_at, ok);
}

namespace {

template <class Reach>
Verdict verdict_over_b0(std::int64_t n_rh, std::int64_t b0_cap, Reach reach) {
  if (n_rh < 1) throw PreconditionError("n_rh must be at least 1");
  Verdict v;
  for (std::int64_t b0 = 1; b0 <= b0_cap; ++b0) {
    std::int64_t r = reach(b0, n_rh);
    if (r >= n_rh) {
      v.secure = false;
      v.witness_b0 = b0;
      v.max_activations = r;
      return v;
    }
    v.max_activations = std::max(v.max_activations, r);
  }
  return v;
}

}  // namespace

Verdict is_secure_prfm(std::int64_t n_rh, const PrfmParams& p, const TimingParams& t,
                       std::int64_t b0_max) {
  p.validate();
  const std::int64_t max_act = max_act_budget(t, p).max_act;
  return verdict_over_b0(n_rh, std::min(b0_max, max_act), [&](std::int64_t b0, std::int64_t stop) {
    return prfm_reach(b0, p, max_act, stop);
  });
}

Verdict is_secure_prac(std::int64_t n_rh, const PracParams& p, const TimingParams& t,
                       std::int64_t b0_max, const PracOptions& opt) {
  p.validate();
  const std::int64_t cap = std::min(b0_max, max_act_prac(t, p, opt));
  return verdict_over_b0(n_rh, std::max<std::int64_t>(cap, 1), [&](std::int64_t b0, std::int64_t stop) {
    return prac_reach(b0, p, t, opt, stop);
  });
}

namespace {

// Largest value in [1, hi] for which `secure` holds, assuming security only
// gets harder as the threshold grows.
template <class Pred>
std::int64_t largest_secure(std::int64_t hi, Pred secure) {
  if (!secure(1)) return 0;
  std::int64_t lo = 1;
  while (lo < hi) {
    std::int64_t mid = lo + (hi - lo + 1) / 2;
    if (secure(mid)) lo = mid;
    else hi = mid - 1;
  }
  return lo;
}

}  // namespace

std::int64_t max_secure_rfm_th(std::int64_t n_rh, const TimingParams& t, std::int64_t b0_max) {
  std::int64_t hi = 1;
  while (is_secure_prfm(n_rh, PrfmParams{hi * 2, 4}, t, b0_max).secure && hi < (1 << 20)) hi *= 2;
  return largest_secure(hi * 2, [&](std::int64_t th) {
    return is_secure_prfm(n_rh, PrfmParams{th, 4}, t, b0_max).secure;
  });
}

std::int64_t max_secure_abo_th(std::int64_t n_rh, PracParams p, const TimingParams& t,
                               std::int64_t b0_max, const PracOptions& opt) {
  return largest_secure(n_rh, [&](std::int64_t th) {
    p.abo_th = th;
    return is_secure_prac(n_rh, p, t, b0_max, opt).secure;
  });
}

std::int64_t quantized_abo_th(std::int64_t n_rh, std::int64_t quantization_pct) {
  return std::max<std::int64_t>(1, n_rh * quantization_pct / 100);
}

std::vector<SweepRow> sweep(const SweepGrid& grid, const TimingParams& t, unsigned workers) {
  if (grid.thresholds.empty()) throw ConfigError("sweep grid has no thresholds");
  if (grid.mechanism == Mechanism::Prac && grid.bo_n_refs.empty())
    throw ConfigError("PRAC sweep grid has no bo_n_refs values");

  // Validate up front: workers must not throw.
  for (auto th : grid.thresholds) {
    if (grid.mechanism == Mechanism::Prfm) PrfmParams{th, 4}.validate();
    for (auto refs : grid.bo_n_refs)
      if (grid.mechanism == Mechanism::Prac) PracParams{th, refs, grid.bo_n_acts, 100}.validate();
  }
  for (auto b0 : grid.b0s)
    if (b0 < 1) throw PreconditionError("initial row-set size must be at least 1");

  std::vector<SweepRow> rows;
  for (auto th : grid.thresholds) {
    if (grid.mechanism == Mechanism::Prfm) {
      if (grid.b0s.empty()) rows.push_back({Mechanism::Prfm, th, 0, 0, {}});
      for (auto b0 : grid.b0s) rows.push_back({Mechanism::Prfm, th, b0, 0, {}});
    } else {
      for (auto refs : grid.bo_n_refs) rows.push_back({Mechanism::Prac, th, refs, 0, {}});
    }
  }
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::pair(a.threshold, a.second) < std::pair(b.threshold, b.second);
  });
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

  auto evaluate = [&](SweepRow& row) {
    if (row.mechanism == Mechanism::Prfm) {
      PrfmParams p{row.threshold, 4};
      p.validate();
      const std::int64_t max_act = max_act_budget(t, p).max_act;
      if (row.second > 0) {
        row.max_activations = prfm_reach(row.second, p, max_act, kUnbounded);
      } else {
        std::int64_t cap = std::min(grid.b0_max, max_act);
        for (std::int64_t b0 = 1; b0 <= cap; ++b0)
          row.max_activations = std::max(row.max_activations, prfm_reach(b0, p, max_act, kUnbounded));
      }
    } else {
      PracParams p{row.threshold, row.second, grid.bo_n_acts, 100};
      p.validate();
      std::int64_t cap = std::min(grid.b0_max, max_act_prac(t, p, grid.prac));
      for (std::int64_t b0 = 1; b0 <= cap; ++b0)
        row.max_activations = std::max(row.max_activations, prac_reach(b0, p, t, grid.prac, kUnbounded));
    }
    if (grid.n_rh) row.secure_at_nrh = row.max_activations < *grid.n_rh;
  };

  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(rows.size())));
  if (workers == 1) {
    for (auto& r : rows) evaluate(r);
    return rows;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < rows.size(); i += workers) evaluate(rows[i]);
    });
  pool.clear();
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "mechanism,threshold,b0_or_bo_n_refs,max_activations,secure_at_nrh\n";
  for (auto& r : rows) {
    out << (r.mechanism == Mechanism::Prfm ? "prfm" : "prac") << ',' << r.threshold << ','
        << r.second << ',' << r.max_activations << ',';
    if (r.secure_at_nrh) out << (*r.secure_at_nrh ? "secure" : "insecure");
    out << '\n';
  }
  return out.str();
}

}  // namespace pracsim
