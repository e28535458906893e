#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pracsim/attack.h"
#include "pracsim/workloads.h"

namespace pracsim {

// Explicit values that replace the per-N_RH defaults.
struct MitigationOverrides {
  std::optional<std::int64_t> rfm_th;
  std::optional<std::int64_t> abo_th;
  std::optional<std::int64_t> bo_n_refs;
  std::optional<std::int64_t> bo_n_acts;
  std::optional<std::int64_t> quantization_pct;
  std::optional<double> probability;
  std::optional<std::int64_t> table_entries;
  std::optional<std::int64_t> threshold;
};

struct WorkloadSection {
  int mixes = 12;
  std::uint64_t seed = 1;
  std::int64_t trace_length = 200'000;
  StopCondition stop{};
  // Explicit trace files, one per core, instead of generated mixes.
  std::vector<std::string> traces;
};

struct AttackSection {
  // none, wave or dos
  std::string kind = "none";
  std::int64_t rows_per_bank = 8;
  int banks = 4;
  std::int64_t initial_priming = 0;
  // Mechanisms and largest n_rh for which attacker-present runs are added.
  std::vector<std::string> mechanisms{"prac", "prfm"};
  std::int64_t max_n_rh = 128;
};

struct OutputSection {
  std::string dir = "out";
  std::string prefix = "run";
};

struct RunConfig {
  std::string timing_preset = "ddr5-3200an-base";
  TimingParams timing;  // preset with overrides applied, unadjusted
  std::optional<std::int64_t> refs_per_window;
  std::string topology_preset = "full";
  Topology topology;
  std::vector<std::string> mechanisms{"prac"};
  std::vector<std::int64_t> n_rh{1024};
  std::int64_t bo_n_refs = 4;
  MitigationOverrides overrides;
  ControllerConfig controller;
  WorkloadSection workload;
  AttackSection attack;
  OutputSection output;

  RunConfig();
  // Throws ConfigError on inconsistent values; resolves nothing expensive.
  void validate() const;
  // Mitigation for one (mechanism, n_rh) point with overrides applied.
  MitigationConfig mitigation(const std::string& kind, std::int64_t n_rh) const;
};

std::vector<std::string> topology_presets();
Topology topology_preset(const std::string& name);

// Unknown keys anywhere are errors.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::filesystem::path& path);
// Canonical document; parse_config(to_yaml(c)) reproduces c.
std::string to_yaml(const RunConfig& c);

}  // namespace pracsim
