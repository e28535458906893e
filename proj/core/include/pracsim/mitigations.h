#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "pracsim/dram.h"
#include "pracsim/security.h"
#include "pracsim/timing.h"

namespace pracsim {

struct NoMitigation {
  bool operator==(const NoMitigation&) const = default;
};
struct PrfmConfig {
  PrfmParams prfm;
  bool operator==(const PrfmConfig&) const = default;
};
struct PracNConfig {
  PracParams prac;
  bool operator==(const PracNConfig&) const = default;
};
struct PracPlusPrfmConfig {
  PracParams prac;
  PrfmParams prfm;
  bool operator==(const PracPlusPrfmConfig&) const = default;
};
// PRAC-N behavior on unmodified timings.
struct PracOptimisticConfig {
  PracParams prac;
  bool operator==(const PracOptimisticConfig&) const = default;
};
struct GrapheneConfig {
  std::int64_t table_entries = 0;  // per bank
  std::int64_t threshold = 0;
  bool operator==(const GrapheneConfig&) const = default;
};
struct HydraConfig {
  std::int64_t gct_entries = 0;
  std::int64_t rcc_entries = 0;
  std::int64_t group_threshold = 0;
  std::int64_t row_threshold = 0;
  bool operator==(const HydraConfig&) const = default;
};
struct ParaConfig {
  double probability = 0.0;
  bool operator==(const ParaConfig&) const = default;
};

using MitigationConfig = std::variant<NoMitigation, PrfmConfig, PracNConfig, PracPlusPrfmConfig,
                                      PracOptimisticConfig, GrapheneConfig, HydraConfig, ParaConfig>;

std::string mitigation_name(const MitigationConfig& m);
// Short identifiers accepted on the command line and in config files.
std::vector<std::string> mitigation_kinds();

// Throws ConfigError when thresholds are not below n_rh or a probability
// is out of range.
void validate(const MitigationConfig& m, std::int64_t n_rh);

bool uses_prac_timing(const MitigationConfig& m);
bool uses_backoff(const MitigationConfig& m);
std::optional<PrfmParams> prfm_part(const MitigationConfig& m);
std::optional<PracParams> prac_part(const MitigationConfig& m);

// Per-N_RH defaults. PRFM and PRAC thresholds come from the security
// analyzer on the given timing; controller-side mechanisms use their
// standard sizing rules.
MitigationConfig default_mitigation(const std::string& kind, std::int64_t n_rh, const Topology& topo,
                                    const TimingParams& base_timing, std::int64_t prac_refs = 4);

// Probability that keeps the chance of n_rh unrefreshed activations below
// 2^-40.
double para_probability(std::int64_t n_rh);
std::int64_t graphene_threshold(std::int64_t n_rh);
// Activations one bank can receive in a refresh window.
std::int64_t acts_per_window(const TimingParams& t);
std::int64_t graphene_entries(std::int64_t n_rh, const TimingParams& t);

struct StorageBreakdown {
  std::int64_t cpu_bits = 0;
  std::int64_t dram_bits = 0;
  std::int64_t total() const { return cpu_bits + dram_bits; }
};

StorageBreakdown storage_cost(const MitigationConfig& m, std::int64_t n_rh, const Topology& topo,
                              const TimingParams& t);

// Hydra packs counters into whole bytes.
int hydra_counter_bits(std::int64_t threshold);

// Controller-side mechanism state.
struct MitigationAction {
  bool refresh = false;      // preventive refresh of the aggressor's victims
  int counter_reads = 0;     // DRAM-resident counter traffic
  int counter_writes = 0;
  std::int64_t counter_row = 0;  // row holding the counters, same bank
};

class ControllerMitigation {
 public:
  virtual ~ControllerMitigation() = default;
  virtual MitigationAction on_activation(int bank, std::int64_t row, Cycle now) = 0;
  virtual std::string name() const = 0;
};

class Graphene final : public ControllerMitigation {
 public:
  Graphene(const GrapheneConfig& cfg, const Topology& topo, Cycle window_cycles);
  MitigationAction on_activation(int bank, std::int64_t row, Cycle now) override;
  std::string name() const override { return "graphene"; }
  std::int64_t estimate(int bank, std::int64_t row) const;
  std::int64_t refreshes() const { return m_refreshes; }

 private:
  struct Table {
    std::unordered_map<std::int64_t, std::int64_t> count;
    std::set<std::pair<std::int64_t, std::int64_t>> by_count;
    std::int64_t spill = 0;
  };
  GrapheneConfig m_cfg;
  Cycle m_window;
  Cycle m_epoch_start = 0;
  std::vector<Table> m_tables;
  std::int64_t m_refreshes = 0;
};

class Hydra final : public ControllerMitigation {
 public:
  Hydra(const HydraConfig& cfg, const Topology& topo, Cycle window_cycles);
  MitigationAction on_activation(int bank, std::int64_t row, Cycle now) override;
  std::string name() const override { return "hydra"; }
  std::int64_t row_counter(int bank, std::int64_t row) const;
  std::int64_t counter_reads() const { return m_reads; }
  std::int64_t counter_writes() const { return m_writes; }

 private:
  void reset();
  HydraConfig m_cfg;
  Topology m_topo;
  Cycle m_window;
  Cycle m_epoch_start = 0;
  std::int64_t m_group_size = 1;
  std::vector<std::int64_t> m_gct;
  std::unordered_map<std::int64_t, std::int64_t> m_rct;  // authoritative
  // LRU row-count cache keyed by global row, value = dirty.
  std::map<std::int64_t, std::pair<std::uint64_t, bool>> m_rcc;
  std::map<std::uint64_t, std::int64_t> m_lru;
  std::uint64_t m_tick = 0;
  std::int64_t m_reads = 0;
  std::int64_t m_writes = 0;
};

class Para final : public ControllerMitigation {
 public:
  Para(const ParaConfig& cfg, std::uint64_t seed);
  MitigationAction on_activation(int bank, std::int64_t row, Cycle now) override;
  std::string name() const override { return "para"; }

 private:
  std::uint64_t m_cut;
  bool m_always;
  std::mt19937_64 m_rng;
};

std::unique_ptr<ControllerMitigation> make_controller_mitigation(const MitigationConfig& m,
                                                                 const Topology& topo,
                                                                 const TimingParams& t,
                                                                 std::uint64_t seed);

}  // namespace pracsim
