#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pracsim/controller.h"
#include "pracsim/metrics.h"

namespace pracsim {

struct TraceRecord {
  std::uint32_t bubble_count = 0;
  bool write = false;
  std::uint64_t address = 0;
  bool operator==(const TraceRecord&) const = default;
};

using Trace = std::vector<TraceRecord>;

// Text format: a header line, then `bubble_count,op,address` with op R or W
// and a hexadecimal address.
void write_trace(std::ostream& out, const Trace& trace);
Trace read_trace(std::istream& in);
// Paths ending in .gz are written compressed; reading detects gzip itself.
void save_trace(const std::filesystem::path& path, const Trace& trace);
Trace load_trace(const std::filesystem::path& path);

enum class Intensity { H, M, L };
char intensity_letter(Intensity c);
Intensity parse_intensity(char c);

// Generated addresses stay below this footprint so four cores can be
// placed in disjoint quarters of a 32 GiB channel.
inline constexpr std::uint64_t kCoreFootprint = 8ULL << 30;
inline constexpr std::int64_t kMinSyntheticRecords = 1'000;

Trace gen_synthetic(Intensity c, std::uint64_t seed, std::int64_t length);

struct MixSpec {
  std::string name;   // e.g. "HHMM-03"
  std::array<Intensity, 4> classes{};
  std::array<std::uint64_t, 4> seeds{};
  std::string type() const;
};

inline constexpr std::array<const char*, 6> kMixTypes{"HHHH", "MMMM", "LLLL", "HHMM", "MMLL", "LLHH"};

std::vector<MixSpec> build_mixes(int count, std::uint64_t seed);

struct CoreConfig {
  int width = 4;
  int window = 128;
};

struct StopCondition {
  std::int64_t instructions = 100'000;
  std::int64_t max_cpu_cycles = 3'000'000;
};

struct SystemConfig {
  Topology topology{};
  // Unadjusted timing; PRAC-style mechanisms get the adjusted set applied.
  TimingParams timing = preset("ddr5-3200an-base");
  MitigationConfig mitigation = NoMitigation{};
  std::int64_t n_rh = 1024;
  ControllerConfig controller{};
  CoreConfig core{};
  StopCondition stop{};
  // CPU cycles per DRAM cycle as a ratio (4.2 GHz over 1.6 GHz).
  int cpu_ratio_num = 21;
  int cpu_ratio_den = 8;
  std::uint64_t seed = 0;
  // Index of an attacker core excluded from the stop condition, or -1.
  int attacker_core = -1;
  bool safety_monitor = false;
  EnergyModel energy = EnergyModel::ddr5_default();
};

// The timing set the device runs with under `cfg.mitigation`.
TimingParams effective_timing(const SystemConfig& cfg);

// Runs the traces (one per core, replayed cyclically) until every
// non-attacker core retires `stop.instructions` or the cycle cap is hit.
// Core i's addresses are offset into the i-th quarter of the channel.
SimReport run_cores(const std::vector<const Trace*>& traces, const SystemConfig& cfg);

}  // namespace pracsim
