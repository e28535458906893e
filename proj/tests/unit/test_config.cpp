#include <gtest/gtest.h>

#include "pracsim/campaign.h"
#include "pracsim/config.h"
#include "pracsim/error.h"

using namespace pracsim;
using namespace std::chrono_literals;

TEST(Config, DefaultsRoundTrip) {
  const RunConfig c;
  EXPECT_EQ(to_yaml(parse_config(to_yaml(c))), to_yaml(c));
}

TEST(Config, SectionsAndOverrides) {
  const auto c = parse_config(R"(
timing:
  preset: ddr5-3200an-base
  tRFM: 295ns
  refs_per_window: 8
topology:
  preset: desk
mitigation:
  kind: [prac, prfm]
  n_rh: [64, 32]
  rfm_th: 4
workload:
  mixes: 6
  seed: 9
output:
  prefix: t
)");
  EXPECT_EQ(c.timing.tRFM, 295ns);
  EXPECT_EQ(c.timing.refs_per_window(), 8);
  EXPECT_EQ(c.topology.rows_per_bank, 64);
  EXPECT_EQ(c.mechanisms, (std::vector<std::string>{"prac", "prfm"}));
  EXPECT_EQ(c.n_rh, (std::vector<std::int64_t>{64, 32}));
  EXPECT_EQ(c.workload.seed, 9u);
  EXPECT_EQ(std::get<PrfmConfig>(c.mitigation("prfm", 64)).prfm.rfm_th, 4);
  EXPECT_EQ(to_yaml(parse_config(to_yaml(c))), to_yaml(c));
}

TEST(Config, ScalarMechanism) {
  const auto c = parse_config("mitigation:\n  kind: prfm\n  n_rh: 128\n");
  EXPECT_EQ(c.mechanisms, (std::vector<std::string>{"prfm"}));
  EXPECT_EQ(c.n_rh, (std::vector<std::int64_t>{128}));
}

TEST(Config, UnknownKeysAreErrors) {
  EXPECT_THROW(parse_config("timings:\n  preset: ddr5-3200an-base\n"), ConfigError);
  EXPECT_THROW(parse_config("timing:\n  tRCC: 5ns\n"), ConfigError);
  EXPECT_THROW(parse_config("workload:\n  mix: 6\n"), ConfigError);
}

TEST(Config, DurationsNeedUnits) {
  EXPECT_THROW(parse_config("timing:\n  tRFM: 350\n"), ConfigError);
}

TEST(Config, InconsistentValuesRejected) {
  EXPECT_THROW(parse_config("mitigation:\n  kind: prfm\n  n_rh: 16\n  rfm_th: 16\n").mitigation("prfm", 16),
               ConfigError);
  EXPECT_THROW(parse_config("mitigation:\n  kind: magic\n").validate(), ConfigError);
  EXPECT_THROW(parse_config("workload:\n  mixes: 5\n").validate(), ConfigError);
}

TEST(Campaign, WaveAttackKindRejected) {
  auto c = parse_config("attack:\n  kind: wave\n");
  EXPECT_THROW(run_campaign(c, 1), ConfigError);
}

TEST(Campaign, WorkerCountIndependent) {
  auto c = parse_config(R"(
mitigation:
  kind: [none, prfm]
  n_rh: [128]
workload:
  mixes: 6
  trace_length: 5000
  instructions: 8000
attack:
  kind: dos
  mechanisms: [prfm]
)");
  const auto a = run_campaign(c, 1), b = run_campaign(c, 4);
  std::stringstream sa, sb;
  write_reports_csv(sa, a.reports);
  write_reports_csv(sb, b.reports);
  EXPECT_EQ(sa.str(), sb.str());
  // 6 mixes x 2 mechanisms benign, plus idle and attack variants for prfm.
  EXPECT_EQ(a.reports.size(), 6u * 2 + 6u * 2);
}
