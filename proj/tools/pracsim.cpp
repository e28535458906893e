// pracsim command-line front end.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration
// error, 3 security requirement not met under --require-secure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "manifest.h"
#include "pracsim/attack.h"
#include "pracsim/campaign.h"
#include "pracsim/config.h"
#include "pracsim/error.h"
#include "pracsim/metrics.h"
#include "pracsim/mitigations.h"
#include "pracsim/security.h"
#include "pracsim/timing.h"
#include "pracsim/workloads.h"

#ifndef PRACSIM_VERSION
#define PRACSIM_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;

namespace pracsim::cli {
namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInsecure = 3;

// Thrown when the output is complete but the security requirement failed.
struct InsecureGrid : std::runtime_error {
  using std::runtime_error::runtime_error;
};

fs::path manifest_path(const fs::path& out) {
  fs::path p = out;
  return p.replace_extension(".manifest.json");
}

fs::path gnuplot_path(const fs::path& out) {
  fs::path p = out;
  return p.replace_extension(".gp");
}

RunManifest base_manifest(const std::string& command, const std::vector<std::string>& args) {
  RunManifest m;
  m.command = command;
  m.arguments = args;
  m.version = PRACSIM_VERSION;
  return m;
}

// Writes the manifest next to `out` when outputs go to a file.
void finish(RunManifest m, const fs::path& out, bool gnuplot) {
  if (out.empty()) return;
  m.outputs.push_back(out.filename().string());
  if (gnuplot) m.outputs.push_back(gnuplot_path(out).filename().string());
  save_manifest(manifest_path(out), m);
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOpts {
  std::string mech;
  std::optional<std::int64_t> n_rh;
  std::vector<std::int64_t> thresholds;
  std::vector<std::int64_t> b0s;
  std::vector<std::int64_t> bo_n_refs{1, 2, 4};
  std::int64_t bo_n_acts = 1;
  std::int64_t b0_max = kDefaultRowsPerBank;
  std::string preset;
  std::optional<std::int64_t> refs_per_window;
  std::string divisor = "exact";
  std::string model = "final";
  bool require_secure = false;
  bool gnuplot = false;
  bool thresholds_given = false;
  fs::path out;
};

const std::vector<std::int64_t> kPrfmThresholds{1,  2,  3,  4,  5,  6,  7,  8,  10, 12,
                                                16, 20, 24, 32, 40, 48, 64, 80};
const std::vector<std::int64_t> kPracThresholds{1,  2,  3,  4,  5,  6,  7,  8,   10,  12, 16,
                                                20, 24, 32, 48, 64, 128, 256, 512, 1024};

void add_analyze(CLI::App& app, AnalyzeOpts& o) {
  auto* c = app.add_subcommand("analyze", "Maximum per-row activations under a wave attack");
  c->add_option("--mech", o.mech, "Mechanism")->required()->check(CLI::IsMember({"prfm", "prac"}));
  c->add_option("--nrh", o.n_rh, "Read-disturbance threshold for the secure column")->check(CLI::PositiveNumber);
  c->add_option("--thresholds", o.thresholds, "rfm_th or abo_th values")->delimiter(',');
  c->add_option("--b0", o.b0s, "PRFM initial row-set sizes (default: maximize)")->delimiter(',');
  c->add_option("--bo-n-refs", o.bo_n_refs, "PRAC recovery sizes")->delimiter(',');
  c->add_option("--bo-n-acts", o.bo_n_acts, "PRAC activations allowed between recoveries")
      ->capture_default_str();
  c->add_option("--b0-max", o.b0_max, "Largest initial row-set size considered")->capture_default_str();
  c->add_option("--timing-preset", o.preset, "Timing preset")->check(CLI::IsMember(preset_names()));
  c->add_option("--refs-per-window", o.refs_per_window, "Scale tREFW to this many REF commands");
  c->add_option("--divisor", o.divisor, "PRAC divisor rounding")
      ->check(CLI::IsMember({"exact", "floored"}))->capture_default_str();
  c->add_option("--model", o.model, "PRAC removal model")
      ->check(CLI::IsMember({"final", "early-draft"}))->capture_default_str();
  c->add_flag("--require-secure", o.require_secure, "Exit 3 unless some configuration is secure");
  c->add_flag("--gnuplot-stub", o.gnuplot, "Also write a gnuplot script next to --out");
  c->add_option("--out", o.out, "CSV path (default stdout)");
}

void cmd_analyze(AnalyzeOpts o, const std::vector<std::string>& args) {
  const bool prfm = o.mech == "prfm";
  if (o.require_secure && !o.n_rh) throw ConfigError("--require-secure needs --nrh");
  if (o.gnuplot && o.out.empty()) throw ConfigError("--gnuplot-stub needs --out");
  if (o.preset.empty()) o.preset = prfm ? "analysis-appendix" : "ddr5-3200an-prac";

  SweepGrid g;
  g.mechanism = prfm ? Mechanism::Prfm : Mechanism::Prac;
  g.thresholds = o.thresholds_given ? o.thresholds : (prfm ? kPrfmThresholds : kPracThresholds);
  if (g.thresholds.empty()) throw ConfigError("empty grid: no threshold values");
  g.b0s = o.b0s;
  g.bo_n_refs = o.bo_n_refs;
  g.bo_n_acts = o.bo_n_acts;
  g.n_rh = o.n_rh;
  g.b0_max = o.b0_max;
  g.prac.divisor = o.divisor == "exact" ? DivisorMode::Exact : DivisorMode::Floored;
  g.prac.model = o.model == "final" ? PracModel::Final : PracModel::EarlyDraft;
  if (!prfm && g.bo_n_refs.empty()) throw ConfigError("empty grid: no --bo-n-refs values");
  if (g.b0_max < 1) throw ConfigError("--b0-max must be at least 1");

  TimingParams t = preset(o.preset);
  if (o.refs_per_window) t = with_refresh_window(t, *o.refs_per_window);
  t.validate();

  const auto rows = sweep(g, t, worker_count());
  emit(o.out, sweep_csv(rows));

  RunManifest m = base_manifest("analyze", args);
  m.presets["timing"] = o.preset;
  if (o.gnuplot) {
    std::ostringstream gp;
    gp << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set logscale xy\n"
       << "set xlabel '" << (prfm ? "rfm_th" : "abo_th") << "'\n"
       << "set ylabel 'max activations to a row'\n";
    if (o.n_rh) gp << "set arrow from graph 0, first " << *o.n_rh << " to graph 1, first " << *o.n_rh << " nohead\n";
    gp << "plot '" << o.out.filename().string() << "' using 2:4 with linespoints\n";
    emit(gnuplot_path(o.out), gp.str());
  }
  finish(m, o.out, o.gnuplot);

  if (o.require_secure &&
      std::none_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.secure_at_nrh.value_or(false); }))
    throw InsecureGrid("no configuration in the grid is secure at n_rh=" + std::to_string(*o.n_rh));
}

// ---------------------------------------------------------- attack-theory

struct TheoryOpts {
  std::string mech = "prac";
  std::vector<std::int64_t> thresholds;
  std::int64_t bo_n_refs = 4;
  std::string preset;
  std::optional<std::string> trfm;
  std::optional<std::string> trc;
  fs::path out;
};

void add_theory(CLI::App& app, TheoryOpts& o) {
  auto* c = app.add_subcommand("attack-theory", "Throughput consumed by back-to-back preventive refreshes");
  c->add_option("--mech", o.mech, "Mechanism")->check(CLI::IsMember({"prfm", "prac"}))->capture_default_str();
  c->add_option("--thresholds", o.thresholds, "rfm_th or abo_th values (default 6 or 7)")->delimiter(',');
  c->add_option("--bo-n-refs", o.bo_n_refs, "PRAC recovery size")->capture_default_str();
  c->add_option("--timing-preset", o.preset, "Timing preset")->check(CLI::IsMember(preset_names()));
  c->add_option("--trfm", o.trfm, "Override tRFM, e.g. 350ns");
  c->add_option("--trc", o.trc, "Override tRC, e.g. 52ns (tRP absorbs the change)");
  c->add_option("--out", o.out, "CSV path (default stdout)");
}

std::string ns(Picos p) { return format_double(static_cast<double>(p.count()) / 1000.0); }

void cmd_theory(TheoryOpts o, const std::vector<std::string>& args) {
  const bool prfm = o.mech == "prfm";
  if (o.preset.empty()) o.preset = prfm ? "analysis-appendix" : "ddr5-3200an-prac";
  if (o.thresholds.empty()) o.thresholds = {prfm ? 6 : 7};
  TimingParams t = preset(o.preset);
  if (o.trfm) t.tRFM = parse_duration(*o.trfm);
  if (o.trc) {
    t.tRC = parse_duration(*o.trc);
    t.tRP = t.tRC - t.tRAS;
  }
  t.validate();

  std::ostringstream csv;
  csv << "mechanism,threshold,bo_n_refs,t_available_ns,t_attack_period_ns,t_prevent_ns,fraction,"
         "steady_state_fraction\n";
  for (auto th : o.thresholds) {
    MechanismParams p = prfm ? MechanismParams{PrfmParams{th, 4}} : MechanismParams{PracParams{th, o.bo_n_refs, 1, 100}};
    const auto c = theoretical_consumption(t, p);
    csv << o.mech << ',' << th << ',' << (prfm ? std::string() : std::to_string(o.bo_n_refs)) << ','
        << ns(c.t_available) << ',' << ns(c.t_attack_period) << ',' << ns(c.t_prevent) << ','
        << format_double(c.fraction) << ','
        << (prfm ? std::string() : format_double(steady_state_fraction(t, std::get<PracParams>(p)))) << '\n';
  }
  emit(o.out, csv.str());
  RunManifest m = base_manifest("attack-theory", args);
  m.presets["timing"] = o.preset;
  finish(m, o.out, false);
}

// -------------------------------------------------------------- gen-trace

struct TraceOpts {
  std::string cls;
  std::string attack;
  std::uint64_t seed = 1;
  std::int64_t length = 200'000;
  std::string mech = "prac";
  std::int64_t n_rh = 64;
  std::int64_t b0 = 8;
  std::int64_t rows_per_bank = 8;
  int banks = 4;
  std::optional<std::int64_t> priming;
  Cycle duration = 100'000;
  std::string preset = "ddr5-3200an-base";
  std::string topology = "full";
  fs::path out;
};

void add_trace(CLI::App& app, TraceOpts& o) {
  auto* c = app.add_subcommand("gen-trace", "Write a synthetic or attack trace");
  auto* cls = c->add_option("--class", o.cls, "Synthetic intensity class")->check(CLI::IsMember({"H", "M", "L"}));
  auto* atk = c->add_option("--attack", o.attack, "Attack pattern")->check(CLI::IsMember({"wave", "dos"}));
  cls->excludes(atk);
  c->add_option("--seed", o.seed, "Synthetic seed")->capture_default_str();
  c->add_option("--length", o.length, "Synthetic record count")->capture_default_str();
  c->add_option("--mech", o.mech, "Wave target mechanism")
      ->check(CLI::IsMember({"prfm", "prac"}))->capture_default_str();
  c->add_option("--nrh", o.n_rh, "Wave target n_rh")->capture_default_str();
  c->add_option("--b0", o.b0, "Wave initial row-set size")->capture_default_str();
  c->add_option("--rows-per-bank", o.rows_per_bank, "DoS rows per bank")->capture_default_str();
  c->add_option("--banks", o.banks, "DoS bank count")->capture_default_str();
  c->add_option("--priming", o.priming, "Wave priming activations per row (default abo_th-1)");
  c->add_option("--duration", o.duration, "DoS length in DRAM cycles")->capture_default_str();
  c->add_option("--timing-preset", o.preset, "Base timing preset")
      ->check(CLI::IsMember(preset_names()))->capture_default_str();
  c->add_option("--topology", o.topology, "DoS topology preset")
      ->check(CLI::IsMember(topology_presets()))->capture_default_str();
  c->add_option("--out", o.out, "Trace path; .gz compresses")->required();
}

void cmd_trace(const TraceOpts& o, const std::vector<std::string>& args) {
  if (o.cls.empty() == o.attack.empty()) throw ConfigError("give exactly one of --class or --attack");
  RunManifest m = base_manifest("gen-trace", args);
  Trace trace;
  if (!o.cls.empty()) {
    m.seeds["synthetic"] = o.seed;
    trace = gen_synthetic(parse_intensity(o.cls[0]), o.seed, o.length);
  } else if (o.attack == "wave") {
    const TimingParams base = preset(o.preset);
    const Topology topo = desk_topology();
    AttackSpec spec;
    spec.kind = AttackKind::Wave;
    spec.target = default_mitigation(o.mech, o.n_rh, topo, base);
    if (auto p = prac_part(spec.target)) spec.initial_priming = o.priming.value_or(p->abo_th - 1);
    else spec.initial_priming = o.priming.value_or(0);
    spec.validate();
    WaveSetup s;
    s.topology = topo;
    s.timing = uses_prac_timing(spec.target) ? apply_prac_adjustments(base) : base;
    s.n_rh = o.n_rh;
    s.b0 = o.b0;
    trace = gen_wave_trace(spec, s);
    m.presets["topology"] = "desk";
  } else {
    AttackSpec spec = perf_attack_spec();
    spec.kind = AttackKind::PerfDegradation;
    spec.rows_per_bank = o.rows_per_bank;
    spec.banks = o.banks;
    spec.validate();
    trace = gen_perf_attack_trace(spec, preset(o.preset), o.duration, topology_preset(o.topology));
    m.presets["topology"] = o.topology;
  }
  m.presets["timing"] = o.preset;
  if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
  save_trace(o.out, trace);
  finish(m, o.out, false);
}

// --------------------------------------------------------------- simulate

struct SimOpts {
  fs::path config;
  fs::path manifest;
  std::optional<fs::path> out_dir;
  bool gnuplot = false;
};

void add_simulate(CLI::App& app, SimOpts& o) {
  auto* c = app.add_subcommand("simulate", "Run a multi-core simulation campaign");
  auto* cfg = c->add_option("--config", o.config, "YAML run configuration")->check(CLI::ExistingFile);
  auto* man = c->add_option("--manifest", o.manifest, "Re-run from a manifest")->check(CLI::ExistingFile);
  cfg->excludes(man);
  c->add_option("--out-dir", o.out_dir, "Override output.dir");
  c->add_flag("--gnuplot-stub", o.gnuplot, "Also write a gnuplot script");
}

void run_simulation(RunConfig cfg, const std::optional<fs::path>& out_dir, bool gnuplot) {
  if (out_dir) cfg.output.dir = out_dir->string();
  cfg.validate();
  // Where outputs land is not part of what they contain.
  RunConfig portable = cfg;
  portable.output.dir = ".";
  const std::string snapshot = to_yaml(portable);
  const CampaignResult res = run_campaign(cfg, worker_count());

  const fs::path dir = cfg.output.dir;
  const std::string csv_name = cfg.output.prefix + "_reports.csv";
  std::ostringstream csv;
  write_reports_csv(csv, res.reports);
  emit(dir / csv_name, csv.str());

  RunManifest m = base_manifest("simulate", gnuplot ? std::vector<std::string>{"--gnuplot-stub"}
                                                    : std::vector<std::string>{});
  m.config = snapshot;
  m.presets["timing"] = cfg.timing_preset;
  m.presets["topology"] = cfg.topology_preset;
  m.seeds["workload"] = cfg.workload.seed;
  m.outputs.push_back(csv_name);
  if (gnuplot) {
    const std::string gp_name = cfg.output.prefix + ".gp";
    std::ostringstream gp;
    gp << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set logscale x\n"
       << "set xlabel 'n_rh'\n"
       << "set ylabel 'weighted speedup'\n"
       << "plot '" << csv_name << "' using 3:7 with points\n";
    emit(dir / gp_name, gp.str());
    m.outputs.push_back(gp_name);
  }
  save_manifest(dir / (cfg.output.prefix + "_manifest.json"), m);
}

void cmd_simulate(const SimOpts& o) {
  if (o.config.empty() == o.manifest.empty()) throw ConfigError("give exactly one of --config or --manifest");
  if (!o.config.empty()) {
    run_simulation(load_config(o.config), o.out_dir, o.gnuplot);
    return;
  }
  const RunManifest m = load_manifest(o.manifest);
  if (m.command != "simulate") throw ConfigError("manifest was written by '" + m.command + "', not simulate");
  RunConfig cfg = parse_config(m.config);
  // Without an explicit destination, regenerate next to the manifest.
  auto dir = o.out_dir;
  if (!dir) dir = o.manifest.parent_path().empty() ? fs::path(".") : o.manifest.parent_path();
  const bool gnuplot = o.gnuplot || std::count(m.arguments.begin(), m.arguments.end(), "--gnuplot-stub") > 0;
  run_simulation(cfg, dir, gnuplot);
}

// ---------------------------------------------------------------- storage

struct StorageOpts {
  std::vector<std::string> mechs{"prac", "prfm", "graphene", "hydra", "para"};
  std::vector<std::int64_t> n_rh{1024, 128, 64, 32, 16};
  std::string preset = "ddr5-3200an-base";
  std::string topology = "full";
  fs::path out;
};

void add_storage(CLI::App& app, StorageOpts& o) {
  auto* c = app.add_subcommand("storage", "Counter storage per mechanism and n_rh");
  c->add_option("--mech", o.mechs, "Mechanisms")->delimiter(',')->check(CLI::IsMember(mitigation_kinds()));
  c->add_option("--nrh", o.n_rh, "n_rh values")->delimiter(',');
  c->add_option("--timing-preset", o.preset, "Timing preset")
      ->check(CLI::IsMember(preset_names()))->capture_default_str();
  c->add_option("--topology", o.topology, "Topology preset")
      ->check(CLI::IsMember(topology_presets()))->capture_default_str();
  c->add_option("--out", o.out, "CSV path (default stdout)");
}

void cmd_storage(const StorageOpts& o, const std::vector<std::string>& args) {
  if (o.mechs.empty() || o.n_rh.empty()) throw ConfigError("empty grid");
  const TimingParams t = preset(o.preset);
  const Topology topo = topology_preset(o.topology);
  std::ostringstream csv;
  csv << "mechanism,n_rh,cpu_bits,dram_bits,total_bits\n";
  for (auto& mech : o.mechs) {
    for (auto n : o.n_rh) {
      const auto s = storage_cost(default_mitigation(mech, n, topo, t), n, topo, t);
      csv << mech << ',' << n << ',' << s.cpu_bits << ',' << s.dram_bits << ',' << s.total() << '\n';
    }
  }
  emit(o.out, csv.str());
  RunManifest m = base_manifest("storage", args);
  m.presets["timing"] = o.preset;
  m.presets["topology"] = o.topology;
  finish(m, o.out, false);
}

// ----------------------------------------------------------------- driver

// Arguments after the subcommand with output locations removed, so a
// manifest can be replayed into a different place.
std::vector<std::string> reproducible_args(const std::vector<std::string>& argv) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i < argv.size(); ++i) {
    const std::string& a = argv[i];
    if (a == "--out") {
      ++i;
      continue;
    }
    if (a.rfind("--out=", 0) == 0) continue;
    out.push_back(a);
  }
  return out;
}

int dispatch(const std::vector<std::string>& argv);

int replay(const fs::path& manifest, const std::optional<fs::path>& out) {
  const RunManifest m = load_manifest(manifest);
  if (m.command == "simulate") {
    SimOpts o;
    o.manifest = manifest;
    o.out_dir = out;
    cmd_simulate(o);
    return 0;
  }
  if (m.outputs.empty()) throw ConfigError("manifest lists no outputs");
  const fs::path base = manifest.parent_path();
  std::vector<std::string> argv{m.command};
  argv.insert(argv.end(), m.arguments.begin(), m.arguments.end());
  argv.push_back("--out");
  argv.push_back((out ? *out : base / m.outputs.front()).string());
  return dispatch(argv);
}

// argv excludes the program name.
int dispatch(const std::vector<std::string>& argv) {
  CLI::App app{"PRAC and PRFM read-disturbance mitigation analysis and simulation", "pracsim"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PRACSIM_VERSION);

  AnalyzeOpts analyze;
  TheoryOpts theory;
  TraceOpts trace;
  SimOpts sim;
  StorageOpts storage;
  add_analyze(app, analyze);
  add_theory(app, theory);
  add_trace(app, trace);
  add_simulate(app, sim);
  add_storage(app, storage);

  fs::path replay_manifest;
  std::optional<fs::path> replay_out;
  auto* rp = app.add_subcommand("replay", "Regenerate the outputs recorded in a manifest");
  rp->add_option("manifest", replay_manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
  rp->add_option("--out", replay_out, "Output file, or directory for simulate");

  std::vector<std::string> reversed(argv.rbegin(), argv.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  const auto args = reproducible_args(argv);
  auto* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  if (name == "analyze") {
    analyze.thresholds_given = sub->count("--thresholds") > 0;
    cmd_analyze(analyze, args);
  }
  else if (name == "attack-theory") cmd_theory(theory, args);
  else if (name == "gen-trace") cmd_trace(trace, args);
  else if (name == "simulate") cmd_simulate(sim);
  else if (name == "storage") cmd_storage(storage, args);
  else return replay(replay_manifest, replay_out);
  return 0;
}

}  // namespace
}  // namespace pracsim::cli

int main(int argc, char** argv) {
  using namespace pracsim;
  try {
    return cli::dispatch(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const cli::InsecureGrid& e) {
    std::cerr << "pracsim: " << e.what() << '\n';
    return cli::kExitInsecure;
  } catch (const ConfigError& e) {
    std::cerr << "pracsim: configuration error: " << e.what() << '\n';
    return cli::kExitUsage;
  } catch (const InvalidTiming& e) {
    std::cerr << "pracsim: invalid timing: " << e.what() << '\n';
    return cli::kExitUsage;
  } catch (const PreconditionError& e) {
    std::cerr << "pracsim: invalid argument: " << e.what() << '\n';
    return cli::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "pracsim: " << e.what() << '\n';
    return cli::kExitRuntime;
  }
}
