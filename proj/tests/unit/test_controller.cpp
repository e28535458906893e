#include <gtest/gtest.h>

#include <set>

#include "pracsim/controller.h"
#include "pracsim/error.h"

using namespace pracsim;

TEST(Mapper, ZeroAddress) {
  const AddressMapper m{Topology{}};
  EXPECT_EQ(m.map(0), Address{});
}

TEST(Mapper, BankGroupBitsSelectBankGroup) {
  const AddressMapper m{Topology{}};
  // Block offset (6 bits) and low column (2 bits) sit below the group bits.
  const auto a = m.map(0), b = m.map(1ULL << 8);
  EXPECT_NE(a.bankgroup, b.bankgroup);
  EXPECT_EQ(a.bank, b.bank);
  EXPECT_EQ(a.row, b.row);
}

TEST(Mapper, ComposeInvertsMap) {
  const Topology topo{};
  const AddressMapper m{topo};
  for (std::uint64_t x = 0; x < (1ULL << 24); x += 4096 + 64 * 7) EXPECT_EQ(m.compose(m.map(x)), x & ~63ULL);
  EXPECT_THROW(m.map(m.capacity()), PreconditionError);
}

TEST(Mapper, LinearStreamRunsMatchGroupSize) {
  const Topology topo{};
  const AddressMapper m{topo};
  std::vector<int> run_lengths;
  int run = 0, prev = -1;
  for (std::uint64_t blk = 0; blk < 4096; ++blk) {
    const int bank = flat_bank(topo, m.map(blk * 64));
    if (bank != prev && prev >= 0) {
      run_lengths.push_back(run);
      run = 0;
    }
    prev = bank;
    ++run;
  }
  for (int r : run_lengths) EXPECT_EQ(r, AddressMapper::kGroupBlocks);
}

namespace {

struct Rig {
  Device dev;
  Controller ctrl;
  Cycle now = 0;
  std::vector<Completion> done;

  Rig(MitigationConfig mit, DeviceConfig dc, ControllerConfig cc)
      : dev(dc), ctrl(cc, dev, mit, nullptr, 1) {}

  Request read(std::int64_t row, int column, int bank = 0) {
    Request r;
    r.id = ++next;
    r.core = 0;
    r.addr.bank = bank;
    r.addr.row = row;
    r.addr.column = column;
    r.phys = ctrl.mapper().compose(r.addr);
    r.arrival = now;
    return r;
  }
  void run_until_idle(Cycle limit = 1'000'000) {
    while (ctrl.pending() > 0 && now < limit) {
      ctrl.tick(now);
      ctrl.collect(now, done);
      ++now;
    }
  }
  // Keeps ticking with empty queues so deferred maintenance can issue.
  void run_for(Cycle cycles) {
    for (const Cycle end = now + cycles; now < end; ++now) {
      ctrl.tick(now);
      ctrl.collect(now, done);
    }
  }
  std::uint64_t next = 0;
};

DeviceConfig device(const TimingParams& t) {
  DeviceConfig d;
  d.timing = t;
  d.event_log = true;
  return d;
}

}  // namespace

TEST(Controller, IdleControllerStillRefreshes) {
  const auto t = preset("ddr5-3200an-base");
  Rig rig(NoMitigation{}, device(t), ControllerConfig{});
  const Cycle span = 3 * t.cycles(t.tREFI) + 10;
  for (; rig.now < span; ++rig.now) rig.ctrl.tick(rig.now);
  EXPECT_EQ(rig.dev.stats().refs, 3 * rig.dev.topology().ranks);
}

TEST(Controller, HitCapLetsOldMissThrough) {
  const auto t = preset("ddr5-3200an-base");
  ControllerConfig cc;
  cc.refresh = false;
  Rig rig(NoMitigation{}, device(t), cc);
  ASSERT_TRUE(rig.ctrl.enqueue(rig.read(10, 0)));
  rig.run_until_idle();
  const std::size_t mark = rig.dev.log().size();

  ASSERT_TRUE(rig.ctrl.enqueue(rig.read(20, 0)));  // oldest, row miss
  ++rig.now;
  for (int c = 1; c <= 5; ++c) ASSERT_TRUE(rig.ctrl.enqueue(rig.read(10, c)));
  rig.run_until_idle();

  int hits_before_miss = 0;
  bool miss_opened = false;
  for (std::size_t i = mark; i < rig.dev.log().size(); ++i) {
    const auto& rec = rig.dev.log()[i];
    if (rec.command == Command::ACT && rec.row == 20) {
      miss_opened = true;
      break;
    }
    if (rec.command == Command::RD && rec.row == 10) ++hits_before_miss;
  }
  EXPECT_TRUE(miss_opened);
  EXPECT_EQ(hits_before_miss, cc.frfcfs_cap);
  EXPECT_EQ(rig.done.size(), 7u);
}

TEST(Controller, BackoffRecoveryMeetsDeadline) {
  const auto t = preset("ddr5-3200an-prac");
  const PracParams p{2, 1, 1, 100};
  auto dc = device(t);
  dc.prac = true;
  dc.abo_th = p.abo_th;
  dc.bo_n_refs = p.bo_n_refs;
  dc.bo_n_acts = p.bo_n_acts;
  ControllerConfig cc;
  cc.refresh = false;
  // Closed pages so every read is an activation.
  cc.page_policy = PagePolicy::Closed;
  Rig rig(PracNConfig{p}, dc, cc);
  std::vector<Cycle> asserts;
  rig.ctrl.set_observer([&](const std::vector<Event>& evs) {
    for (auto& e : evs)
      if (e.kind == EventKind::BackOffAsserted) asserts.push_back(e.cycle);
  });
  // A burst of row conflicts spread over four banks of one rank.
  for (int i = 0; i < 48; ++i) ASSERT_TRUE(rig.ctrl.enqueue(rig.read(i % 12, 0, i % 4)));
  rig.run_until_idle();
  const Cycle rc = t.cycles(t.tRC), abo = t.cycles(t.tABO_ACT);
  // The last back-off may be asserted after the queues drain.
  rig.run_for(t.cycles(t.tBackoffSignal) + abo + t.cycles(t.tRFM) * p.bo_n_refs + rc);
  ASSERT_FALSE(asserts.empty());

  const auto& log = rig.dev.log();
  for (Cycle a : asserts) {
    const Cycle deadline = a + abo;
    Cycle first_rfm = -1, last_act = -1;
    for (auto& rec : log) {
      if (rec.cycle < a) continue;
      if (rec.command == Command::RFMab || rec.command == Command::RFMsb) {
        first_rfm = rec.cycle;
        break;
      }
      if (rec.command == Command::ACT) last_act = rec.cycle;
    }
    ASSERT_GE(first_rfm, 0);
    EXPECT_LE(first_rfm, deadline);
    if (last_act >= 0) EXPECT_LE(last_act, deadline - rc);
  }
  EXPECT_GE(rig.dev.stats().deadline_slack_min, 0);
  EXPECT_EQ(rig.ctrl.stats().rfm_backoff, static_cast<std::int64_t>(asserts.size()) * p.bo_n_refs);
}

TEST(Controller, PrfmIssuesRfmEveryThreshold) {
  const auto t = preset("ddr5-3200an-base");
  ControllerConfig cc;
  cc.refresh = false;
  cc.page_policy = PagePolicy::Closed;
  Rig rig(PrfmConfig{{4, 4}}, device(t), cc);
  for (int i = 0; i < 40; ++i) {
    ASSERT_TRUE(rig.ctrl.enqueue(rig.read(i, 0)));
    rig.run_until_idle();
  }
  rig.run_for(t.cycles(t.tRC + t.tRFM) * 2);
  EXPECT_EQ(rig.dev.stats().acts, 40);
  EXPECT_EQ(rig.ctrl.stats().rfm_prfm, 10);
}

TEST(ControllerConfig, Validation) {
  ControllerConfig c;
  c.write_low = c.write_high;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ControllerConfig{};
  c.frfcfs_cap = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}
