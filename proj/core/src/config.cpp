#include "pracsim/config.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "pracsim/error.h"

namespace pracsim {

RunConfig::RunConfig() : timing(preset("ddr5-3200an-base")), topology(pracsim::topology_preset("full")) {}

std::vector<std::string> topology_presets() { return {"full", "desk"}; }

Topology topology_preset(const std::string& name) {
  if (name == "full") return Topology{};
  if (name == "desk") return desk_topology();
  throw ConfigError("unknown topology preset '" + name + "' (valid: full, desk)");
}

void RunConfig::validate() const {
  timing.validate();
  topology.validate();
  controller.validate();
  if (mechanisms.empty()) throw ConfigError("mitigation.kind lists no mechanism");
  if (n_rh.empty()) throw ConfigError("mitigation.n_rh lists no value");
  auto kinds = mitigation_kinds();
  for (auto& m : mechanisms)
    if (std::find(kinds.begin(), kinds.end(), m) == kinds.end()) throw ConfigError("unknown mitigation '" + m + "'");
  for (auto v : n_rh)
    if (v < 2) throw ConfigError("n_rh must be at least 2");
  if (bo_n_refs != 1 && bo_n_refs != 2 && bo_n_refs != 4) throw ConfigError("bo_n_refs must be 1, 2 or 4");
  if (workload.traces.empty()) {
    if (workload.mixes <= 0 || workload.mixes % 6 != 0)
      throw ConfigError("workload.mixes must be a positive multiple of 6");
    if (workload.trace_length < kMinSyntheticRecords)
      throw ConfigError("workload.trace_length must be at least " + std::to_string(kMinSyntheticRecords));
  }
  if (workload.stop.instructions < 1 || workload.stop.max_cpu_cycles < 1)
    throw ConfigError("workload stop condition must be positive");
  if (attack.kind != "none" && attack.kind != "wave" && attack.kind != "dos")
    throw ConfigError("attack.kind must be none, wave or dos");
  if (attack.rows_per_bank < 1 || attack.banks < 1) throw ConfigError("attack rows and banks must be positive");
  for (auto& m : attack.mechanisms)
    if (std::find(kinds.begin(), kinds.end(), m) == kinds.end())
      throw ConfigError("unknown attack mitigation '" + m + "'");
}

MitigationConfig RunConfig::mitigation(const std::string& kind, std::int64_t nrh) const {
  const auto& o = overrides;
  auto patch_prac = [&](PracParams& p) {
    if (o.abo_th) p.abo_th = *o.abo_th;
    if (o.bo_n_refs) p.bo_n_refs = *o.bo_n_refs;
    if (o.bo_n_acts) p.bo_n_acts = *o.bo_n_acts;
    if (o.quantization_pct) {
      p.quantization_pct = *o.quantization_pct;
      if (!o.abo_th) p.abo_th = std::min(p.abo_th, quantized_abo_th(nrh, p.quantization_pct));
    }
  };
  // Explicit thresholds skip the security search entirely.
  MitigationConfig m;
  if ((kind == "prfm" && o.rfm_th) ||
      ((kind == "prac" || kind == "prac-optimistic") && o.abo_th) ||
      (kind == "prac+prfm" && o.abo_th && o.rfm_th)) {
    PracParams p{o.abo_th.value_or(1), bo_n_refs, 1, 100};
    if (kind == "prfm") m = PrfmConfig{{*o.rfm_th, 4}};
    else if (kind == "prac") m = PracNConfig{p};
    else if (kind == "prac-optimistic") m = PracOptimisticConfig{p};
    else m = PracPlusPrfmConfig{p, {*o.rfm_th, 4}};
  } else {
    m = default_mitigation(kind, nrh, topology, timing, o.bo_n_refs.value_or(bo_n_refs));
  }
  std::visit(
      [&](auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, PrfmConfig>) {
          if (o.rfm_th) c.prfm.rfm_th = *o.rfm_th;
        } else if constexpr (std::is_same_v<T, PracNConfig> || std::is_same_v<T, PracOptimisticConfig>) {
          patch_prac(c.prac);
        } else if constexpr (std::is_same_v<T, PracPlusPrfmConfig>) {
          patch_prac(c.prac);
          if (o.rfm_th) c.prfm.rfm_th = *o.rfm_th;
        } else if constexpr (std::is_same_v<T, GrapheneConfig>) {
          if (o.table_entries) c.table_entries = *o.table_entries;
          if (o.threshold) c.threshold = *o.threshold;
        } else if constexpr (std::is_same_v<T, ParaConfig>) {
          if (o.probability) c.probability = *o.probability;
        }
      },
      m);
  pracsim::validate(m, nrh);
  return m;
}

namespace {

void check_keys(const YAML::Node& n, const std::string& where, const std::set<std::string>& allowed) {
  if (!n.IsMap()) throw ConfigError("section '" + where + "' must be a mapping");
  for (auto it = n.begin(); it != n.end(); ++it) {
    auto key = it->first.as<std::string>();
    if (!allowed.count(key)) {
      std::string valid;
      for (auto& a : allowed) valid += (valid.empty() ? "" : ", ") + a;
      throw ConfigError("unknown key '" + where + "." + key + "' (valid: " + valid + ")");
    }
  }
}

template <class T>
T get(const YAML::Node& n, const std::string& where) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("bad value for '" + where + "'");
  }
}

template <class T>
std::vector<T> scalar_or_list(const YAML::Node& n, const std::string& where) {
  std::vector<T> out;
  if (n.IsSequence()) {
    for (auto e : n) out.push_back(get<T>(e, where));
  } else {
    out.push_back(get<T>(n, where));
  }
  return out;
}

Picos duration(const YAML::Node& n, const std::string& where) {
  auto s = get<std::string>(n, where);
  try {
    return parse_duration(s);
  } catch (const ConfigError& e) {
    throw ConfigError("'" + where + "': " + e.what());
  }
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  RunConfig c;
  if (root.IsNull()) return c;
  check_keys(root, "config", {"timing", "topology", "mitigation", "workload", "attack", "output", "controller"});

  if (auto t = root["timing"]) {
    std::set<std::string> keys{"preset", "refs_per_window"};
    for (auto& f : timing_field_names()) keys.insert(f);
    check_keys(t, "timing", keys);
    if (t["preset"]) {
      c.timing_preset = get<std::string>(t["preset"], "timing.preset");
      c.timing = preset(c.timing_preset);
    }
    for (auto& f : timing_field_names())
      if (t[f]) timing_field(c.timing, f) = duration(t[f], "timing." + f);
    if (t["refs_per_window"]) {
      c.refs_per_window = get<std::int64_t>(t["refs_per_window"], "timing.refs_per_window");
      c.timing = with_refresh_window(c.timing, *c.refs_per_window);
    }
    c.timing.validate();
  }

  if (auto t = root["topology"]) {
    check_keys(t, "topology", {"preset", "ranks", "bankgroups", "banks_per_group", "rows_per_bank", "columns"});
    if (t["preset"]) {
      c.topology_preset = get<std::string>(t["preset"], "topology.preset");
      c.topology = topology_preset(c.topology_preset);
    }
    if (t["ranks"]) c.topology.ranks = get<int>(t["ranks"], "topology.ranks");
    if (t["bankgroups"]) c.topology.bankgroups = get<int>(t["bankgroups"], "topology.bankgroups");
    if (t["banks_per_group"]) c.topology.banks_per_group = get<int>(t["banks_per_group"], "topology.banks_per_group");
    if (t["rows_per_bank"]) c.topology.rows_per_bank = get<std::int64_t>(t["rows_per_bank"], "topology.rows_per_bank");
    if (t["columns"]) c.topology.columns = get<int>(t["columns"], "topology.columns");
  }

  if (auto m = root["mitigation"]) {
    check_keys(m, "mitigation",
               {"kind", "n_rh", "bo_n_refs", "rfm_th", "abo_th", "bo_n_acts", "quantization_pct", "probability",
                "table_entries", "threshold"});
    if (m["kind"]) c.mechanisms = scalar_or_list<std::string>(m["kind"], "mitigation.kind");
    if (m["n_rh"]) c.n_rh = scalar_or_list<std::int64_t>(m["n_rh"], "mitigation.n_rh");
    if (m["bo_n_refs"]) c.bo_n_refs = get<std::int64_t>(m["bo_n_refs"], "mitigation.bo_n_refs");
    auto& o = c.overrides;
    if (m["rfm_th"]) o.rfm_th = get<std::int64_t>(m["rfm_th"], "mitigation.rfm_th");
    if (m["abo_th"]) o.abo_th = get<std::int64_t>(m["abo_th"], "mitigation.abo_th");
    if (m["bo_n_acts"]) o.bo_n_acts = get<std::int64_t>(m["bo_n_acts"], "mitigation.bo_n_acts");
    if (m["quantization_pct"]) o.quantization_pct = get<std::int64_t>(m["quantization_pct"], "mitigation.quantization_pct");
    if (m["probability"]) o.probability = get<double>(m["probability"], "mitigation.probability");
    if (m["table_entries"]) o.table_entries = get<std::int64_t>(m["table_entries"], "mitigation.table_entries");
    if (m["threshold"]) o.threshold = get<std::int64_t>(m["threshold"], "mitigation.threshold");
  }

  if (auto k = root["controller"]) {
    check_keys(k, "controller", {"read_queue_depth", "write_queue_depth", "frfcfs_cap", "write_high", "write_low",
                                 "page_policy", "refresh"});
    auto& cc = c.controller;
    if (k["read_queue_depth"]) cc.read_queue_depth = get<int>(k["read_queue_depth"], "controller.read_queue_depth");
    if (k["write_queue_depth"]) cc.write_queue_depth = get<int>(k["write_queue_depth"], "controller.write_queue_depth");
    if (k["frfcfs_cap"]) cc.frfcfs_cap = get<int>(k["frfcfs_cap"], "controller.frfcfs_cap");
    if (k["write_high"]) cc.write_high = get<int>(k["write_high"], "controller.write_high");
    if (k["write_low"]) cc.write_low = get<int>(k["write_low"], "controller.write_low");
    if (k["page_policy"]) {
      auto p = get<std::string>(k["page_policy"], "controller.page_policy");
      if (p == "open") cc.page_policy = PagePolicy::Open;
      else if (p == "closed") cc.page_policy = PagePolicy::Closed;
      else throw ConfigError("controller.page_policy must be open or closed");
    }
    if (k["refresh"]) cc.refresh = get<bool>(k["refresh"], "controller.refresh");
  }

  if (auto w = root["workload"]) {
    check_keys(w, "workload", {"mixes", "seed", "trace_length", "instructions", "max_cycles", "traces"});
    auto& wl = c.workload;
    if (w["mixes"]) wl.mixes = get<int>(w["mixes"], "workload.mixes");
    if (w["seed"]) wl.seed = get<std::uint64_t>(w["seed"], "workload.seed");
    if (w["trace_length"]) wl.trace_length = get<std::int64_t>(w["trace_length"], "workload.trace_length");
    if (w["instructions"]) wl.stop.instructions = get<std::int64_t>(w["instructions"], "workload.instructions");
    if (w["max_cycles"]) wl.stop.max_cpu_cycles = get<std::int64_t>(w["max_cycles"], "workload.max_cycles");
    if (w["traces"]) wl.traces = scalar_or_list<std::string>(w["traces"], "workload.traces");
  }

  if (auto a = root["attack"]) {
    check_keys(a, "attack", {"kind", "rows_per_bank", "banks", "initial_priming", "mechanisms", "max_n_rh"});
    auto& at = c.attack;
    if (a["kind"]) at.kind = get<std::string>(a["kind"], "attack.kind");
    if (a["rows_per_bank"]) at.rows_per_bank = get<std::int64_t>(a["rows_per_bank"], "attack.rows_per_bank");
    if (a["banks"]) at.banks = get<int>(a["banks"], "attack.banks");
    if (a["initial_priming"]) at.initial_priming = get<std::int64_t>(a["initial_priming"], "attack.initial_priming");
    if (a["mechanisms"]) at.mechanisms = scalar_or_list<std::string>(a["mechanisms"], "attack.mechanisms");
    if (a["max_n_rh"]) at.max_n_rh = get<std::int64_t>(a["max_n_rh"], "attack.max_n_rh");
  }

  if (auto o = root["output"]) {
    check_keys(o, "output", {"dir", "prefix"});
    if (o["dir"]) c.output.dir = get<std::string>(o["dir"], "output.dir");
    if (o["prefix"]) c.output.prefix = get<std::string>(o["prefix"], "output.prefix");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_yaml(const RunConfig& c) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "timing" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "preset" << YAML::Value << c.timing_preset;
  for (auto& f : timing_field_names()) e << YAML::Key << f << YAML::Value << format_duration(timing_field(c.timing, f));
  if (c.refs_per_window) e << YAML::Key << "refs_per_window" << YAML::Value << *c.refs_per_window;
  e << YAML::EndMap;

  e << YAML::Key << "topology" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "preset" << YAML::Value << c.topology_preset;
  e << YAML::Key << "ranks" << YAML::Value << c.topology.ranks;
  e << YAML::Key << "bankgroups" << YAML::Value << c.topology.bankgroups;
  e << YAML::Key << "banks_per_group" << YAML::Value << c.topology.banks_per_group;
  e << YAML::Key << "rows_per_bank" << YAML::Value << c.topology.rows_per_bank;
  e << YAML::Key << "columns" << YAML::Value << c.topology.columns;
  e << YAML::EndMap;

  e << YAML::Key << "mitigation" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << YAML::Flow << c.mechanisms;
  e << YAML::Key << "n_rh" << YAML::Value << YAML::Flow << c.n_rh;
  e << YAML::Key << "bo_n_refs" << YAML::Value << c.bo_n_refs;
  const auto& o = c.overrides;
  if (o.rfm_th) e << YAML::Key << "rfm_th" << YAML::Value << *o.rfm_th;
  if (o.abo_th) e << YAML::Key << "abo_th" << YAML::Value << *o.abo_th;
  if (o.bo_n_acts) e << YAML::Key << "bo_n_acts" << YAML::Value << *o.bo_n_acts;
  if (o.quantization_pct) e << YAML::Key << "quantization_pct" << YAML::Value << *o.quantization_pct;
  if (o.probability) e << YAML::Key << "probability" << YAML::Value << format_double(*o.probability);
  if (o.table_entries) e << YAML::Key << "table_entries" << YAML::Value << *o.table_entries;
  if (o.threshold) e << YAML::Key << "threshold" << YAML::Value << *o.threshold;
  e << YAML::EndMap;

  const auto& cc = c.controller;
  e << YAML::Key << "controller" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "read_queue_depth" << YAML::Value << cc.read_queue_depth;
  e << YAML::Key << "write_queue_depth" << YAML::Value << cc.write_queue_depth;
  e << YAML::Key << "frfcfs_cap" << YAML::Value << cc.frfcfs_cap;
  e << YAML::Key << "write_high" << YAML::Value << cc.write_high;
  e << YAML::Key << "write_low" << YAML::Value << cc.write_low;
  e << YAML::Key << "page_policy" << YAML::Value << (cc.page_policy == PagePolicy::Open ? "open" : "closed");
  e << YAML::Key << "refresh" << YAML::Value << cc.refresh;
  e << YAML::EndMap;

  const auto& w = c.workload;
  e << YAML::Key << "workload" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mixes" << YAML::Value << w.mixes;
  e << YAML::Key << "seed" << YAML::Value << w.seed;
  e << YAML::Key << "trace_length" << YAML::Value << w.trace_length;
  e << YAML::Key << "instructions" << YAML::Value << w.stop.instructions;
  e << YAML::Key << "max_cycles" << YAML::Value << w.stop.max_cpu_cycles;
  if (!w.traces.empty()) e << YAML::Key << "traces" << YAML::Value << w.traces;
  e << YAML::EndMap;

  const auto& a = c.attack;
  e << YAML::Key << "attack" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << a.kind;
  e << YAML::Key << "rows_per_bank" << YAML::Value << a.rows_per_bank;
  e << YAML::Key << "banks" << YAML::Value << a.banks;
  e << YAML::Key << "initial_priming" << YAML::Value << a.initial_priming;
  e << YAML::Key << "mechanisms" << YAML::Value << YAML::Flow << a.mechanisms;
  e << YAML::Key << "max_n_rh" << YAML::Value << a.max_n_rh;
  e << YAML::EndMap;

  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "dir" << YAML::Value << c.output.dir;
  e << YAML::Key << "prefix" << YAML::Value << c.output.prefix;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace pracsim
