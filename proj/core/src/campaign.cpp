#include "pracsim/campaign.h"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <cstring>
#include <map>

#include "pracsim/error.h"

namespace pracsim {

unsigned worker_count() {
  if (const char* env = std::getenv("PRACSIM_WORKERS")) {
    unsigned v = 0;
    auto [p, ec] = std::from_chars(env, env + std::strlen(env), v);
    if (ec != std::errc{} || *p != '\0' || v == 0)
      throw ConfigError(std::string("PRACSIM_WORKERS must be a positive integer, got '") + env + "'");
    return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string idle_variant(const std::string& mix) { return mix + "/idle0"; }
std::string attack_variant(const std::string& mix) { return mix + "/attack0"; }

namespace {

struct Job {
  std::string mix;
  std::string mechanism;
  std::int64_t n_rh;
  bool attack;
  std::vector<const Trace*> traces;
  std::vector<double> alone;
  int attacker_core = -1;
};

}  // namespace

CampaignResult run_campaign(const RunConfig& cfg, unsigned workers) {
  cfg.validate();
  if (cfg.attack.kind == "wave")
    throw ConfigError("wave attacks target a single bank; run them with the attack subcommand");

  // Resolve every mitigation up front so configuration errors surface
  // before any simulation starts.
  std::map<std::pair<std::string, std::int64_t>, MitigationConfig> mitigations;
  for (auto& m : cfg.mechanisms)
    for (auto n : cfg.n_rh) mitigations.emplace(std::pair{m, n}, cfg.mitigation(m, n));
  const bool dos = cfg.attack.kind == "dos";
  if (dos)
    for (auto& m : cfg.attack.mechanisms)
      for (auto n : cfg.n_rh)
        if (n <= cfg.attack.max_n_rh) mitigations.emplace(std::pair{m, n}, cfg.mitigation(m, n));

  // Traces: generated per (class, seed), or loaded from files.
  struct MixTraces {
    std::string name;
    std::vector<std::size_t> trace_ids;
  };
  std::vector<Trace> traces;
  std::vector<MixTraces> mixes;
  if (!cfg.workload.traces.empty()) {
    traces.resize(cfg.workload.traces.size());
    parallel_for(traces.size(), workers, [&](std::size_t i) { traces[i] = load_trace(cfg.workload.traces[i]); });
    MixTraces m{"custom", {}};
    for (std::size_t i = 0; i < traces.size(); ++i) m.trace_ids.push_back(i);
    mixes.push_back(m);
  } else {
    auto specs = build_mixes(cfg.workload.mixes, cfg.workload.seed);
    std::vector<std::pair<Intensity, std::uint64_t>> keys;
    std::map<std::pair<Intensity, std::uint64_t>, std::size_t> index;
    for (auto& s : specs) {
      MixTraces m{s.name, {}};
      for (int k = 0; k < 4; ++k) {
        auto key = std::pair{s.classes[k], s.seeds[k]};
        auto [it, fresh] = index.emplace(key, keys.size());
        if (fresh) keys.push_back(key);
        m.trace_ids.push_back(it->second);
      }
      mixes.push_back(m);
    }
    traces.resize(keys.size());
    parallel_for(keys.size(), workers, [&](std::size_t i) {
      traces[i] = gen_synthetic(keys[i].first, keys[i].second, cfg.workload.trace_length);
    });
  }

  auto base_system = [&] {
    SystemConfig s;
    s.topology = cfg.topology;
    s.timing = cfg.timing;
    s.controller = cfg.controller;
    s.stop = cfg.workload.stop;
    s.seed = cfg.workload.seed;
    return s;
  };

  // Alone IPC per trace without mitigation.
  std::vector<double> alone(traces.size());
  parallel_for(traces.size(), workers, [&](std::size_t i) {
    SystemConfig s = base_system();
    alone[i] = run_cores({&traces[i]}, s).cores[0].ipc_shared;
  });

  const Trace idle;
  Trace attacker;
  if (dos) {
    AttackSpec spec = perf_attack_spec();
    spec.rows_per_bank = cfg.attack.rows_per_bank;
    spec.banks = cfg.attack.banks;
    const Cycle rotation = cfg.timing.cycles(cfg.timing.tRC) * spec.rows_per_bank;
    attacker = gen_perf_attack_trace(spec, cfg.timing, std::max<Cycle>(rotation, 100'000), cfg.topology);
  }

  std::vector<Job> jobs;
  for (auto& m : mixes) {
    std::vector<const Trace*> ts;
    std::vector<double> al;
    for (auto id : m.trace_ids) {
      ts.push_back(&traces[id]);
      al.push_back(alone[id]);
    }
    for (auto& mech : cfg.mechanisms)
      for (auto n : cfg.n_rh) jobs.push_back({m.name, mech, n, false, ts, al});
    if (!dos) continue;
    if (ts.size() < 2) throw ConfigError("attacker-present runs need at least two cores");
    for (auto& mech : cfg.attack.mechanisms) {
      for (auto n : cfg.n_rh) {
        if (n > cfg.attack.max_n_rh) continue;
        auto with = ts;
        auto al0 = al;
        al0[0] = 1.0;  // core 0 is not scored
        with[0] = &idle;
        jobs.push_back({idle_variant(m.name), mech, n, false, with, al0, 0});
        with[0] = &attacker;
        jobs.push_back({attack_variant(m.name), mech, n, true, with, al0, 0});
      }
    }
  }

  CampaignResult out;
  out.reports.resize(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const Job& j = jobs[i];
    SystemConfig s = base_system();
    s.mitigation = mitigations.at({j.mechanism, j.n_rh});
    s.n_rh = j.n_rh;
    s.attacker_core = j.attacker_core;
    SimReport r = run_cores(j.traces, s);
    r.mix = j.mix;
    r.mechanism = j.mechanism;
    r.attack = j.attack;
    attach_alone(r, j.alone);
    out.reports[i] = std::move(r);
  });
  std::sort(out.reports.begin(), out.reports.end(),
            [](const SimReport& a, const SimReport& b) { return a.key() < b.key(); });
  return out;
}

}  // namespace pracsim
