#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <sstream>

#include "pracsim/error.h"
#include "pracsim/workloads.h"

using namespace pracsim;

namespace {

double solo_rbmpki(Intensity c, std::uint64_t seed) {
  const Trace t = gen_synthetic(c, seed, 1'000'000);
  SystemConfig cfg;
  cfg.seed = seed;
  return run_cores({&t}, cfg).cores[0].rbmpki();
}

}  // namespace

TEST(Synthetic, HighIntensityBand) { EXPECT_GE(solo_rbmpki(Intensity::H, 1), 10.0); }

TEST(Synthetic, MediumIntensityBand) {
  const double v = solo_rbmpki(Intensity::M, 1);
  EXPECT_GE(v, 2.0);
  EXPECT_LT(v, 10.0);
}

TEST(Synthetic, LowIntensityBand) { EXPECT_LT(solo_rbmpki(Intensity::L, 1), 2.0); }

TEST(Synthetic, Deterministic) {
  const auto a = gen_synthetic(Intensity::M, 42, 5000);
  const auto b = gen_synthetic(Intensity::M, 42, 5000);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].address, b[i].address);
    EXPECT_EQ(a[i].bubble_count, b[i].bubble_count);
    EXPECT_EQ(a[i].write, b[i].write);
  }
  const auto c = gen_synthetic(Intensity::M, 43, 5000);
  bool differs = false;
  for (std::size_t i = 0; i < a.size() && !differs; ++i) differs = a[i].address != c[i].address;
  EXPECT_TRUE(differs);
}

TEST(Synthetic, TooShortRejected) { EXPECT_THROW(gen_synthetic(Intensity::H, 1, 999), ConfigError); }

TEST(TraceIo, TextRoundTrip) {
  const auto t = gen_synthetic(Intensity::L, 3, 1000);
  std::stringstream ss;
  write_trace(ss, t);
  const auto back = read_trace(ss);
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back[i].address, t[i].address);
    EXPECT_EQ(back[i].bubble_count, t[i].bubble_count);
    EXPECT_EQ(back[i].write, t[i].write);
  }
}

TEST(TraceIo, GzipRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "pracsim_trace_io";
  std::filesystem::create_directories(dir);
  const auto t = gen_synthetic(Intensity::H, 5, 2000);
  save_trace(dir / "t.trace.gz", t);
  save_trace(dir / "t.trace", t);
  const auto gz = load_trace(dir / "t.trace.gz");
  const auto plain = load_trace(dir / "t.trace");
  ASSERT_EQ(gz.size(), t.size());
  ASSERT_EQ(plain.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(gz[i].address, plain[i].address);
  std::filesystem::remove_all(dir);
}

TEST(TraceIo, MalformedLineRejected) {
  std::stringstream ss("bubble_count,op,address\n3,X,0x40\n");
  EXPECT_THROW(read_trace(ss), ConfigError);
}

TEST(Mixes, TenOfEachType) {
  const auto mixes = build_mixes(60, 1);
  ASSERT_EQ(mixes.size(), 60u);
  std::map<std::string, int> count;
  for (auto& m : mixes) ++count[m.type()];
  for (auto* type : kMixTypes) EXPECT_EQ(count[type], 10) << type;
}

TEST(Mixes, OneOfEach) {
  const auto mixes = build_mixes(6, 1);
  std::set<std::string> types;
  for (auto& m : mixes) types.insert(m.type());
  EXPECT_EQ(types.size(), 6u);
}

TEST(Mixes, SeedChangesMembersNotTypes) {
  const auto a = build_mixes(12, 1), b = build_mixes(12, 2);
  std::map<std::string, int> ta, tb;
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ta[a[i].type()];
    ++tb[b[i].type()];
    differs |= a[i].seeds != b[i].seeds;
  }
  EXPECT_EQ(ta, tb);
  EXPECT_TRUE(differs);
  EXPECT_THROW(build_mixes(7, 1), ConfigError);
}

TEST(Cores, ComputeOnlyTraceRetiresAtFullWidth) {
  const Trace empty;
  SystemConfig cfg;
  const auto r = run_cores({&empty}, cfg);
  EXPECT_EQ(r.cores[0].ipc_shared, 4.0);
  EXPECT_EQ(r.commands.act, 0);
}

TEST(Cores, SoloRunIsRepeatable) {
  const auto t = gen_synthetic(Intensity::M, 9, 20'000);
  SystemConfig cfg;
  cfg.stop.instructions = 30'000;
  const auto a = run_cores({&t}, cfg), b = run_cores({&t}, cfg);
  EXPECT_EQ(a.cores[0].ipc_shared, b.cores[0].ipc_shared);
  EXPECT_EQ(a.commands, b.commands);
}

TEST(Cores, StopsAtInstructionTarget) {
  const auto t = gen_synthetic(Intensity::L, 2, 5000);
  SystemConfig cfg;
  cfg.stop.instructions = 20'000;
  const auto r = run_cores({&t, &t}, cfg);
  for (auto& c : r.cores) EXPECT_GE(c.instructions, 20'000);
  EXPECT_LT(r.cpu_cycles, cfg.stop.max_cpu_cycles);
}

TEST(Cores, PracTimingsUsedForPracMechanisms) {
  SystemConfig cfg;
  cfg.mitigation = PracNConfig{{32, 4, 1, 100}};
  EXPECT_TRUE(effective_timing(cfg).prac_adjusted);
  cfg.mitigation = PracOptimisticConfig{{32, 4, 1, 100}};
  EXPECT_FALSE(effective_timing(cfg).prac_adjusted);
}
