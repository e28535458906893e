#include <gtest/gtest.h>

#include <sstream>

#include "pracsim/error.h"
#include "pracsim/metrics.h"
#include "pracsim/mitigations.h"
#include "pracsim/workloads.h"

using namespace pracsim;
using namespace std::chrono_literals;

namespace {

SimReport report(const std::string& mix, std::vector<double> shared, std::vector<double> alone) {
  SimReport r;
  r.mix = mix;
  r.mechanism = "prac";
  r.n_rh = 64;
  for (std::size_t i = 0; i < shared.size(); ++i) {
    CoreResult c;
    c.ipc_shared = shared[i];
    r.cores.push_back(c);
  }
  attach_alone(r, alone);
  return r;
}

}  // namespace

TEST(WeightedSpeedup, Identities) {
  EXPECT_DOUBLE_EQ(weighted_speedup({1, 2, 3, 4}, {1, 2, 3, 4}), 4.0);
  EXPECT_DOUBLE_EQ(weighted_speedup({0.7}, {0.7}), 1.0);
  EXPECT_DOUBLE_EQ(weighted_speedup({0.5, 1, 1.5, 2}, {1, 2, 3, 4}), 2.0);
  EXPECT_THROW(weighted_speedup({1}, {0}), PreconditionError);
}

TEST(WeightedSpeedup, AttackerCoreIsNotScored) {
  SimReport r = report("m", {4.0, 0.5, 0.5}, {1.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(r.weighted_speedup, 5.0);
  r.cores[0].attacker = true;
  attach_alone(r, {1.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(r.weighted_speedup, 1.0);
}

TEST(Energy, ZeroWork) {
  EXPECT_EQ(energy({}, EnergyModel::ddr5_default(), Picos{0}).total(), 0.0);
}

TEST(Energy, DynamicEnergyIsLinear) {
  const auto m = EnergyModel::ddr5_default();
  CommandCounts c{100, 100, 50, 20, 3, 2, 1};
  CommandCounts d{200, 200, 100, 40, 6, 4, 2};
  const auto a = energy(c, m, 1ms), b = energy(d, m, 1ms);
  EXPECT_DOUBLE_EQ(b.total() - b.background, 2 * (a.total() - a.background));
  EXPECT_DOUBLE_EQ(a.background, b.background);
  EXPECT_DOUBLE_EQ(a.background, m.background_mw * 1e9 * 1e-3);
}

TEST(Energy, PracCostsMoreAtLowThreshold) {
  const auto t = gen_synthetic(Intensity::H, 11, 50'000);
  const std::vector<const Trace*> mix{&t, &t, &t, &t};
  SystemConfig cfg;
  cfg.stop.instructions = 40'000;
  auto run = [&](std::int64_t n_rh) {
    cfg.n_rh = n_rh;
    cfg.mitigation = default_mitigation("prac", n_rh, cfg.topology, cfg.timing);
    return run_cores(mix, cfg);
  };
  const auto hi = run(1024), lo = run(16);
  EXPECT_GT(lo.backoffs, hi.backoffs);
  EXPECT_GT(lo.energy_pj.total(), hi.energy_pj.total());
}

TEST(Latency, NearestRank) {
  std::vector<std::int32_t> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  const auto l = latency_percentiles(v, Picos{625});
  EXPECT_DOUBLE_EQ(l.ns[0], 50 * 0.625);
  EXPECT_DOUBLE_EQ(l.ns[1], 90 * 0.625);
  EXPECT_DOUBLE_EQ(l.ns[5], 100 * 0.625);
  EXPECT_EQ(latency_percentiles({}, Picos{625}).ns[0], 0.0);
}

TEST(Slowdown, IdenticalReportsGiveZero) {
  const auto base = report("a", {1, 1}, {2, 2});
  const auto s = slowdown_stats({base}, {base});
  EXPECT_EQ(s.avg_ws_loss, 0.0);
  EXPECT_EQ(s.max_ws_loss, 0.0);
  EXPECT_EQ(s.max_single_app_slowdown, 0.0);
}

TEST(Slowdown, HalvedIpcIsHalfTheSpeedup) {
  const auto base = report("a", {1, 2}, {2, 2});
  const auto half = report("a", {0.5, 1}, {2, 2});
  const auto s = slowdown_stats({base}, {half});
  EXPECT_DOUBLE_EQ(s.avg_ws_loss, 50.0);
  EXPECT_DOUBLE_EQ(s.max_ws_loss, 50.0);
}

TEST(Slowdown, MismatchedMixesRejected) {
  EXPECT_THROW(slowdown_stats({report("a", {1}, {1})}, {report("b", {1}, {1})}), PreconditionError);
}

TEST(ReportsCsv, RoundTrip) {
  const auto t = gen_synthetic(Intensity::M, 4, 5000);
  SystemConfig cfg;
  cfg.stop.instructions = 10'000;
  cfg.mitigation = PrfmConfig{{8, 4}};
  cfg.n_rh = 128;
  SimReport r = run_cores({&t, &t}, cfg);
  r.mix = "MMMM-00";
  r.mechanism = "prfm";
  attach_alone(r, {1.0, 1.0});
  std::stringstream a;
  write_reports_csv(a, {r});
  const auto back = read_reports_csv(a);
  ASSERT_EQ(back.size(), 1u);
  std::stringstream b;
  write_reports_csv(b, back);
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(back[0].key(), r.key());
}

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}
