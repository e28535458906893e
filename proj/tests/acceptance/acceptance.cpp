// End-to-end acceptance checks. Each criterion prints one PASS or FAIL line
// followed by the measured values it was judged on.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "pracsim/attack.h"
#include "pracsim/campaign.h"
#include "pracsim/config.h"
#include "pracsim/mitigations.h"
#include "pracsim/security.h"

using namespace pracsim;
using namespace std::chrono_literals;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "  failed: " << what << "\n";
    }
  }
  template <class T>
  void note(const std::string& what, const T& value) {
    detail << "  " << what << " = " << value << "\n";
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool within_rel(double v, double want, double rel) { return std::abs(v - want) <= rel * want; }

double ns(Picos p) { return std::chrono::duration<double, std::nano>(p).count(); }

std::string csv(const std::vector<SimReport>& r) {
  std::ostringstream out;
  write_reports_csv(out, r);
  return out.str();
}

// ------------------------------------------------------------------ 1

Outcome timing_shifts() {
  Outcome o;
  const auto base = preset("ddr5-3200an-base");
  const auto adj = apply_prac_adjustments(base);
  o.check(base.tRP == 15ns && base.tRAS == 32ns && base.tRTP == Picos{7500} && base.tWR == 30ns &&
              base.tRC == 47ns,
          "base values");
  o.check(adj.tRP == 36ns, "tRP 36ns");
  o.check(adj.tRAS == 16ns, "tRAS 16ns");
  o.check(adj.tRTP == 5ns, "tRTP 5ns");
  o.check(adj.tWR == 10ns, "tWR 10ns");
  o.check(adj.tRC == 52ns, "tRC 52ns");
  o.note("tRP/tRAS/tRTP/tWR/tRC",
         format_duration(adj.tRP) + " " + format_duration(adj.tRAS) + " " + format_duration(adj.tRTP) +
             " " + format_duration(adj.tWR) + " " + format_duration(adj.tRC));
  return o;
}

// ------------------------------------------------------------------ 2

Outcome security_sweep() {
  Outcome o;
  const auto prac_t = preset("ddr5-3200an-prac");
  const auto appendix = preset("analysis-appendix");
  const PracParams aggressive{1, 4, 1, 100};

  const auto v = is_secure_prac(1 << 20, aggressive, prac_t);
  o.note("PRAC-4 most aggressive max activations", v.max_activations);
  o.check(v.max_activations == 9, "max activations 9");
  std::vector<std::int64_t> insecure_above_9, secure_below_10;
  for (std::int64_t n = 1; n <= 1024; n = n < 32 ? n + 1 : n * 2) {
    const bool secure = is_secure_prac(n, aggressive, prac_t).secure;
    if (n >= 10 && !secure) insecure_above_9.push_back(n);
    if (n <= 9 && secure) secure_below_10.push_back(n);
  }
  o.check(insecure_above_9.empty(), "secure for every n_rh >= 10");
  o.check(secure_below_10.empty(), "insecure for every n_rh <= 9");

  for (std::int64_t th = 1; th <= 5; ++th)
    o.check(is_secure_prfm(64, {th, 4}, appendix).secure, "PRFM n_rh=64 rfm_th=" + std::to_string(th));
  o.note("PRFM n_rh=64 largest secure rfm_th", max_secure_rfm_th(64, appendix));
  o.check(is_secure_prfm(32, {3, 4}, appendix).secure, "PRFM n_rh=32 rfm_th=3");
  o.note("PRFM n_rh=32 largest secure rfm_th", max_secure_rfm_th(32, appendix));

  // Full analysis grid as plotted: PRFM thresholds maximized over B_0 and
  // PRAC thresholds for each recovery size.
  const auto t0 = std::chrono::steady_clock::now();
  SweepGrid prfm;
  prfm.mechanism = Mechanism::Prfm;
  prfm.thresholds = {1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 16, 20, 24, 32, 40, 48, 64, 80};
  SweepGrid prac;
  prac.mechanism = Mechanism::Prac;
  prac.thresholds = {1, 2, 3, 4, 5, 6, 7, 8, 10, 12, 16, 20, 24, 32, 48, 64, 128, 256, 512, 1024};
  prac.bo_n_refs = {1, 2, 4};
  const auto a = sweep(prfm, appendix, worker_count());
  const auto b = sweep(prac, prac_t, worker_count());
  const double secs = seconds_since(t0);
  o.note("grid rows", a.size() + b.size());
  o.note("grid seconds", secs);
  o.check(secs < 10.0, "full grid under 10 s");
  return o;
}

// ------------------------------------------------------------------ 3

Outcome attack_math() {
  Outcome o;
  const auto appendix = preset("analysis-appendix");
  const auto c6 = theoretical_consumption(appendix, PrfmParams{6, 4});
  o.note("t_available ns", ns(c6.t_available));
  o.check(within_rel(ns(c6.t_available), 29.58e6, 0.001), "t_available 29.58 ms");
  o.note("PRFM-6 period ns", ns(c6.t_attack_period));
  o.check(c6.t_attack_period == 577ns, "PRFM-6 period 577 ns");
  o.note("PRFM-6 t_prevent ns", ns(c6.t_prevent));
  o.check(within_rel(ns(c6.t_prevent), 15.12e6, 0.005), "PRFM-6 t_prevent 15.12 ms");
  o.note("PRFM-6 fraction", c6.fraction);
  o.check(std::abs(c6.fraction - 0.51) <= 0.01, "PRFM-6 fraction 51%");

  const auto c57 = theoretical_consumption(appendix, PracParams{57, 4, 1, 100});
  o.note("PRAC-57 period ns", ns(c57.t_attack_period));
  o.check(c57.t_attack_period == 3859ns, "PRAC-57 period 3859 ns");
  o.note("PRAC-57 t_prevent ns", ns(c57.t_prevent));
  o.check(within_rel(ns(c57.t_prevent), 9.04e6, 0.005), "PRAC-57 t_prevent 9.04 ms");
  o.note("PRAC-57 fraction", c57.fraction);
  o.check(std::abs(c57.fraction - 0.31) <= 0.01, "PRAC-57 fraction 31%");

  const auto t7 = preset("ddr5-3200an-prac");
  o.check(t7.tRFM == 350ns && t7.tRC == 52ns, "steady-state preset uses tRFM 350 ns, tRC 52 ns");
  const double ss = steady_state_fraction(t7, PracParams{7, 4, 1, 100});
  o.note("steady-state fraction", ss);
  o.check(std::abs(ss - 0.794) <= 0.001, "steady state 79.4%");
  return o;
}

// ------------------------------------------------------------------ 4

// Per-round removal iterated directly, independent of the closed form.
std::vector<std::int64_t> iterate_rounds(std::int64_t b0, std::int64_t refs, ActRatio d) {
  std::vector<std::int64_t> sizes{b0};
  std::int64_t acts = 0, size = b0;
  while (size > 0 && sizes.size() <= (1u << 20)) {
    acts += size;
    size = std::max<std::int64_t>(0, b0 - refs * (acts * d.den / d.num));
    sizes.push_back(size);
  }
  return sizes;
}

Outcome oracle_equivalence() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto base = preset("ddr5-3200an-base");

  std::vector<std::pair<std::int64_t, std::int64_t>> prfm_cases;
  for (std::int64_t th = 1; th <= 16; ++th)
    for (std::int64_t b0 = 1; b0 <= 64; ++b0) prfm_cases.push_back({th, b0});
  std::vector<char> prfm_ok(prfm_cases.size()), cumulative_ok(prfm_cases.size());
  parallel_for(prfm_cases.size(), worker_count(), [&](std::size_t i) {
    const auto [th, b0] = prfm_cases[i];
    AttackSpec spec;
    spec.target = PrfmConfig{{th, 4}};
    WaveSetup s;
    s.timing = base;
    s.n_rh = 1 << 20;
    s.b0 = b0;
    const auto sim = run_wave_attack(spec, s);
    const auto closed = prfm_trajectory(b0, {th, 4}, 1 << 20);
    prfm_ok[i] = sim.sizes == closed.sizes;
    cumulative_ok[i] = prfm_trajectory_stepwise(b0, {th, 4}, 1 << 20).sizes == closed.sizes;
  });

  struct PracCase {
    std::int64_t refs, d, b0;
  };
  std::vector<PracCase> prac_cases;
  for (std::int64_t refs : {1, 2, 4})
    for (std::int64_t d = 2; d <= 8; ++d)
      for (std::int64_t b0 = 1; b0 <= 64; ++b0) prac_cases.push_back({refs, d, b0});
  std::vector<char> prac_ok(prac_cases.size()), iter_ok(prac_cases.size());
  parallel_for(prac_cases.size(), worker_count(), [&](std::size_t i) {
    const auto [refs, d, b0] = prac_cases[i];
    AttackSpec spec;
    // Every decoy is primed to one below the threshold, so each activation
    // of a decoy crosses it: the divisor is set by the timing alone.
    spec.target = PracNConfig{{3, refs, 1, 100}};
    spec.initial_priming = 2;
    WaveSetup s;
    s.timing = wave_oracle_timing(d - 1);
    s.n_rh = 1 << 20;
    s.b0 = b0;
    const auto sim = run_wave_attack(spec, s);
    const auto closed = removal_trajectory(b0, refs, {d, 1}, 1 << 20);
    prac_ok[i] = sim.sizes == closed.sizes;
    iter_ok[i] = iterate_rounds(b0, refs, {d, 1}) == closed.sizes;
  });

  auto count = [](const std::vector<char>& v) { return std::count(v.begin(), v.end(), 1); };
  o.note("PRFM simulation matches", std::to_string(count(prfm_ok)) + "/" + std::to_string(prfm_ok.size()));
  o.note("PRFM cumulative vs stepwise", std::to_string(count(cumulative_ok)) + "/" + std::to_string(cumulative_ok.size()));
  o.note("PRAC simulation matches", std::to_string(count(prac_ok)) + "/" + std::to_string(prac_ok.size()));
  o.note("PRAC closed form vs iterated", std::to_string(count(iter_ok)) + "/" + std::to_string(iter_ok.size()));
  o.check(count(prfm_ok) == static_cast<long>(prfm_ok.size()), "PRFM simulation equals closed form");
  o.check(count(cumulative_ok) == static_cast<long>(cumulative_ok.size()), "PRFM cumulative equals stepwise");
  o.check(count(prac_ok) == static_cast<long>(prac_ok.size()), "PRAC simulation equals closed form");
  o.check(count(iter_ok) == static_cast<long>(iter_ok.size()), "PRAC closed form equals iteration");
  const double secs = seconds_since(t0);
  o.note("seconds", secs);
  o.check(secs < 60.0, "under 1 min");
  return o;
}

// ------------------------------------------------------------------ 5

struct SafetyCase {
  MitigationConfig target;
  std::int64_t n_rh, b0, priming;
  std::string label;
};

std::vector<SafetyCase> safety_grid(const TimingParams& base8, const TimingParams& prac8) {
  std::vector<std::int64_t> b0s;
  for (std::int64_t b = 1; b <= 64; ++b)
    if (b > 13 || b % 5 == 1) b0s.push_back(b);
  auto picks = [](std::int64_t max) {
    std::set<std::int64_t> s{1, max / 2, max - 1, max};
    std::erase_if(s, [](std::int64_t v) { return v < 1; });
    return s;
  };
  constexpr std::int64_t kRows = 64;
  std::vector<SafetyCase> cases;
  for (std::int64_t n : {16, 32, 64, 128}) {
    for (auto th : picks(max_secure_rfm_th(n, base8, kRows))) {
      if (!is_secure_prfm(n, {th, 4}, base8, kRows).secure) continue;
      for (auto b0 : b0s)
        cases.push_back({PrfmConfig{{th, 4}}, n, b0, 0,
                         "prfm n_rh=" + std::to_string(n) + " rfm_th=" + std::to_string(th)});
    }
    for (std::int64_t refs : {1, 2, 4}) {
      PracParams p{1, refs, 1, 100};
      for (auto a : picks(max_secure_abo_th(n, p, prac8, kRows))) {
        p.abo_th = a;
        if (!is_secure_prac(n, p, prac8, kRows).secure) continue;
        for (auto b0 : b0s)
          cases.push_back({PracNConfig{p}, n, b0, a - 1,
                           "prac n_rh=" + std::to_string(n) + " abo_th=" + std::to_string(a) +
                               " refs=" + std::to_string(refs)});
      }
    }
  }
  return cases;
}

WaveResult run_safety_case(const SafetyCase& c, const TimingParams& base8, const TimingParams& prac8,
                           bool resets) {
  AttackSpec spec;
  spec.target = c.target;
  spec.initial_priming = c.priming;
  WaveSetup s;
  s.timing = uses_prac_timing(c.target) ? prac8 : base8;
  s.n_rh = c.n_rh;
  s.b0 = c.b0;
  s.refresh = true;
  s.ref_resets_counters = resets;
  s.stop_on_violation = true;
  // Four windows: REF keeps resetting counters, so a stalled wave would
  // otherwise never run out of decoys.
  s.max_cycles = 4 * s.timing.cycles(s.timing.tREFW);
  return run_wave_attack(spec, s);
}

Outcome safety_invariant() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto base = preset("ddr5-3200an-base");
  const auto base8 = with_refresh_window(base, 8);
  const auto prac8 = with_refresh_window(apply_prac_adjustments(base), 8);
  const auto cases = safety_grid(base8, prac8);

  auto count_violations = [&](bool resets, std::vector<std::string>* where) {
    std::vector<std::optional<WaveResult>> results(cases.size());
    parallel_for(cases.size(), worker_count(),
                 [&](std::size_t i) { results[i] = run_safety_case(cases[i], base8, prac8, resets); });
    std::int64_t n = 0;
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const auto& r = *results[i];
      if (!r.violation) continue;
      ++n;
      if (where)
        where->push_back(cases[i].label + " b0=" + std::to_string(cases[i].b0) + " row " +
                         std::to_string(r.violation->row) + " count " +
                         std::to_string(r.max_activations));
    }
    return n;
  };

  std::vector<std::string> where;
  const auto violations = count_violations(true, &where);
  o.note("secure configurations replayed", cases.size());
  o.note("violations, REF resets counters", violations);
  for (auto& w : where) o.detail << "    " << w << "\n";
  o.check(violations == 0, "no violation on analyzer-secure configurations");
  // Same grid with counters surviving REF: isolates the reset as the cause.
  o.note("violations, counters kept across REF", count_violations(false, nullptr));

  // Insecure witness: the analyzer's own smallest breaking B_0.
  const PrfmParams weak{12, 4};
  const auto verdict = is_secure_prfm(16, weak, base8, 64);
  o.check(!verdict.secure && verdict.witness_b0, "PRFM n_rh=16 rfm_th=12 marked insecure");
  if (verdict.witness_b0) {
    SafetyCase c{PrfmConfig{weak}, 16, *verdict.witness_b0, 0, "witness"};
    const auto r = run_safety_case(c, base8, prac8, true);
    o.note("witness b0", *verdict.witness_b0);
    o.note("witness activations", r.max_activations);
    o.check(r.violation.has_value(), "insecure configuration produces a violation");
  }
  const double secs = seconds_since(t0);
  o.note("seconds", secs);
  o.check(secs < 300.0, "under 5 min");
  return o;
}

// ------------------------------------------------------------------ 6

Outcome ordering() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = load_config(PRACSIM_SOURCE_DIR "/configs/desk_campaign.yaml");
  const auto result = run_campaign(cfg, worker_count());

  // ws[mechanism][n_rh][mix] for benign runs on the plain mixes.
  std::map<std::string, std::map<std::int64_t, std::map<std::string, double>>> ws, idle, attacked;
  for (auto& r : result.reports) {
    const auto slash = r.mix.find('/');
    if (slash == std::string::npos)
      ws[r.mechanism][r.n_rh][r.mix] = r.weighted_speedup;
    else if (r.mix.ends_with("/idle0"))
      idle[r.mechanism][r.n_rh][r.mix.substr(0, slash)] = r.weighted_speedup;
    else
      attacked[r.mechanism][r.n_rh][r.mix.substr(0, slash)] = r.weighted_speedup;
  }
  const std::vector<std::int64_t> nrh{1024, 128, 64, 32, 16};
  auto mean = [](const std::map<std::string, double>& m) {
    double s = 0;
    for (auto& [k, v] : m) s += v;
    return m.empty() ? 0.0 : s / m.size();
  };

  // (a) per (mix, n_rh)
  int a_bad = 0;
  for (auto n : nrh)
    for (auto& [mix, v] : ws["prac"][n])
      if (ws["prac-optimistic"][n][mix] < v) {
        ++a_bad;
        o.detail << "    (a) " << mix << " n_rh=" << n << ": optimistic " << ws["prac-optimistic"][n][mix]
                 << " < prac " << v << "\n";
      }
  o.note("(a) inversions", a_bad);
  o.check(a_bad == 0, "(a) PRAC-Optimistic >= PRAC-4 everywhere");

  // (b) on the mix average
  for (const std::string mech : {"prac", "prfm"}) {
    std::ostringstream line;
    bool ok = true;
    double prev = 1e300;
    for (auto n : nrh) {
      const double m = mean(ws[mech][n]);
      line << " " << n << ":" << m;
      ok = ok && m <= prev;
      prev = m;
    }
    o.note("(b) " + mech + " mean weighted speedup", line.str());
    o.check(ok, "(b) " + mech + " non-increasing as n_rh decreases");
  }

  // (c) loss versus no mitigation at n_rh=16
  auto loss = [&](const std::string& mech, std::int64_t n) {
    return 100.0 * (1.0 - mean(ws[mech][n]) / mean(ws["none"][n]));
  };
  o.note("(c) loss at 16: prfm", loss("prfm", 16));
  o.note("(c) loss at 16: prac", loss("prac", 16));
  o.check(loss("prfm", 16) > loss("prac", 16), "(c) PRFM loss exceeds PRAC-4 at n_rh=16");

  // (d) per (mix, n_rh)
  int d_bad = 0;
  for (auto n : nrh)
    for (auto& [mix, v] : ws["prac"][n])
      if (ws["prac+prfm"][n][mix] > v) {
        ++d_bad;
        o.detail << "    (d) " << mix << " n_rh=" << n << ": prac+prfm " << ws["prac+prfm"][n][mix]
                 << " > prac " << v << "\n";
      }
  o.note("(d) inversions", d_bad);
  o.check(d_bad == 0, "(d) PRAC+PRFM never above PRAC-4");

  // (e) relative reduction of attacker-present runs, mix average
  for (const std::string mech : {"prac", "prfm"}) {
    std::ostringstream line;
    bool reduces = true, widens = true;
    double prev = -1e300;
    for (auto n : nrh) {
      if (n > cfg.attack.max_n_rh) continue;
      double gap = 0;
      int cnt = 0;
      for (auto& [mix, v] : idle[mech][n]) {
        const double w = attacked[mech][n][mix];
        if (!(w < v)) {
          reduces = false;
          o.detail << "    (e) " << mech << " " << mix << " n_rh=" << n << ": attacked " << w << " >= idle " << v
                   << "\n";
        }
        gap += 1.0 - w / v;
        ++cnt;
      }
      gap = cnt ? 100.0 * gap / cnt : 0.0;
      line << " " << n << ":" << gap << "%";
      widens = widens && gap > prev;
      prev = gap;
    }
    o.note("(e) " + mech + " attack reduction", line.str());
    o.check(reduces, "(e) " + mech + " attacker reduces weighted speedup on every mix");
    o.check(widens, "(e) " + mech + " gap widens as n_rh decreases");
  }
  const double secs = seconds_since(t0);
  o.note("runs", result.reports.size());
  o.note("seconds", secs);
  o.check(secs < 900.0, "under 15 min");
  return o;
}

// ------------------------------------------------------------------ 7

Outcome storage() {
  Outcome o;
  const Topology topo;
  const auto base = preset("ddr5-3200an-base");
  auto cost = [&](const std::string& kind, std::int64_t n) {
    return storage_cost(default_mitigation(kind, n, topo, base), n, topo, base);
  };
  const double prac = 100.0 * (1.0 - double(cost("prac", 16).dram_bits) / cost("prac", 1024).dram_bits);
  const double hydra = 100.0 * (1.0 - double(cost("hydra", 16).total()) / cost("hydra", 1024).total());
  const double graphene = double(cost("graphene", 16).cpu_bits) / cost("graphene", 1024).cpu_bits;
  o.note("PRAC dram-bit reduction %", prac);
  o.note("Hydra total reduction %", hydra);
  o.note("Graphene cpu-bit growth x", graphene);
  o.check(std::abs(prac - 100.0 * 6 / 11) < 1e-9, "PRAC 54.5%");
  o.check(std::abs(hydra - 45.5) <= 5.0, "Hydra 45.5% +-5 pp");
  o.check(within_rel(graphene, 50.3, 0.10), "Graphene 50.3x +-10%");
  return o;
}

// ------------------------------------------------------------------ 8

Outcome determinism() {
  Outcome o;
  auto cfg = parse_config(R"(
mitigation:
  kind: [none, prac, prfm, graphene, hydra, para]
  n_rh: [128, 32]
workload:
  mixes: 6
  trace_length: 20000
  instructions: 20000
attack:
  kind: dos
  mechanisms: [prac, prfm]
)");
  const auto one = csv(run_campaign(cfg, 1).reports);
  const auto many = csv(run_campaign(cfg, 4).reports);
  const auto again = csv(run_campaign(parse_config(to_yaml(cfg)), 3).reports);
  o.note("campaign bytes", one.size());
  o.check(one == many, "1 worker and 4 workers byte-identical");
  o.check(one == again, "re-run from the canonical config byte-identical");

  SweepGrid g;
  g.mechanism = Mechanism::Prac;
  g.thresholds = {1, 2, 4, 8, 16, 32};
  g.bo_n_refs = {1, 2, 4};
  g.n_rh = 64;
  const auto t = preset("ddr5-3200an-prac");
  o.check(sweep_csv(sweep(g, t, 1)) == sweep_csv(sweep(g, t, 4)), "sweep CSV worker-independent");

  AttackSpec spec;
  spec.target = PrfmConfig{{4, 4}};
  WaveSetup s;
  s.timing = preset("ddr5-3200an-base");
  s.b0 = 24;
  o.check(gen_wave_trace(spec, s) == gen_wave_trace(spec, s), "wave trace repeatable");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-8)")->check(CLI::Range(1, 8));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> all{
      {"PRAC timing reconciliation", timing_shifts},
      {"security sweep", security_sweep},
      {"theoretical attack math", attack_math},
      {"oracle equivalence", oracle_equivalence},
      {"simulation safety invariant", safety_invariant},
      {"ordering properties", ordering},
      {"storage model", storage},
      {"determinism", determinism},
  };
  bool ok = true;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (only && static_cast<std::size_t>(only) != i + 1) continue;
    Outcome r;
    try {
      r = all[i].second();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail << "  exception: " << e.what() << "\n";
    }
    std::cout << "criterion " << i + 1 << ": " << (r.pass ? "PASS" : "FAIL") << " " << all[i].first << "\n"
              << r.detail.str() << std::flush;
    ok = ok && r.pass;
  }
  return ok ? 0 : 1;
}
