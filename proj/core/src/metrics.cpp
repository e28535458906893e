#include "pracsim/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "pracsim/error.h"

namespace pracsim {

EnergyModel EnergyModel::ddr5_default() {
  EnergyModel m;
  m.act_pj = 1'450;
  m.rd_pj = 1'100;
  m.wr_pj = 1'200;
  m.ref_pj = 650'000;
  m.rfm_pj = 120'000;
  m.preventive_pj = 5'800;
  m.background_mw = 880;
  return m;
}

EnergyBreakdown energy(const CommandCounts& c, const EnergyModel& m, Picos runtime) {
  EnergyBreakdown e;
  e.act = c.act * m.act_pj;
  e.rd = c.rd * m.rd_pj;
  e.wr = c.wr * m.wr_pj;
  e.ref = c.ref * m.ref_pj;
  e.rfm = c.rfm * m.rfm_pj;
  e.preventive = c.preventive * m.preventive_pj;
  // 1 mW over 1 ps is 1e-3 pJ.
  e.background = m.background_mw * static_cast<double>(runtime.count()) * 1e-3;
  return e;
}

LatencyTable latency_percentiles(std::vector<std::int32_t> cycles, Picos clock_period) {
  LatencyTable t;
  if (cycles.empty()) return t;
  std::sort(cycles.begin(), cycles.end());
  const double ns_per_cycle = static_cast<double>(clock_period.count()) / 1000.0;
  for (std::size_t i = 0; i < LatencyTable::kPercentiles.size(); ++i) {
    double p = LatencyTable::kPercentiles[i];
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(cycles.size())));
    rank = std::clamp<std::size_t>(rank, 1, cycles.size());
    t.ns[i] = cycles[rank - 1] * ns_per_cycle;
  }
  return t;
}

std::string SimReport::key() const {
  return mix + "|" + mechanism + "|" + std::to_string(n_rh) + "|" + (attack ? "attack" : "benign");
}

double weighted_speedup(const std::vector<double>& shared, const std::vector<double>& alone) {
  if (shared.size() != alone.size()) throw PreconditionError("IPC vectors differ in length");
  double ws = 0.0;
  for (std::size_t i = 0; i < shared.size(); ++i) {
    if (!(alone[i] > 0.0)) throw PreconditionError("alone IPC must be positive");
    ws += shared[i] / alone[i];
  }
  return ws;
}

void attach_alone(SimReport& r, const std::vector<double>& alone) {
  if (alone.size() != r.cores.size()) throw PreconditionError("alone IPC count differs from cores");
  std::vector<double> s, a;
  for (std::size_t i = 0; i < r.cores.size(); ++i) {
    r.cores[i].ipc_alone = alone[i];
    if (r.cores[i].attacker) continue;
    s.push_back(r.cores[i].ipc_shared);
    a.push_back(alone[i]);
  }
  r.weighted_speedup = weighted_speedup(s, a);
}

SlowdownStats slowdown_stats(const std::vector<SimReport>& baseline, const std::vector<SimReport>& treated) {
  if (baseline.size() != treated.size() || baseline.empty())
    throw PreconditionError("slowdown needs matched, non-empty report lists");
  SlowdownStats s;
  double sum = 0.0;
  for (std::size_t i = 0; i < baseline.size(); ++i) {
    const auto& b = baseline[i];
    const auto& t = treated[i];
    if (b.mix != t.mix || b.cores.size() != t.cores.size())
      throw PreconditionError("mismatched mixes: " + b.mix + " vs " + t.mix);
    double loss = 100.0 * (1.0 - t.weighted_speedup / b.weighted_speedup);
    sum += loss;
    s.max_ws_loss = std::max(s.max_ws_loss, loss);
    for (std::size_t c = 0; c < b.cores.size(); ++c) {
      if (b.cores[c].attacker || t.cores[c].attacker) continue;
      double slow = 100.0 * (1.0 - t.cores[c].ipc_shared / b.cores[c].ipc_shared);
      s.max_single_app_slowdown = std::max(s.max_single_app_slowdown, slow);
    }
  }
  s.avg_ws_loss = sum / static_cast<double>(baseline.size());
  return s;
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

namespace {

constexpr int kMaxCores = 8;

std::vector<std::string> header() {
  std::vector<std::string> h{"mix", "mechanism", "n_rh", "attack", "seed", "cores", "weighted_speedup"};
  for (int c = 0; c < kMaxCores; ++c)
    for (auto f : {"ipc", "alone", "instr", "cycles", "row_misses", "reads", "writes", "attacker"})
      h.push_back(std::string(f) + std::to_string(c));
  for (auto f : {"act", "pre", "rd", "wr", "ref", "rfm", "preventive"}) h.push_back(std::string("cmd_") + f);
  for (auto f : {"act", "rd", "wr", "ref", "rfm", "preventive", "background", "total"})
    h.push_back(std::string("energy_pj_") + f);
  for (auto p : {"p50", "p90", "p99", "p99_9", "p99_99", "max"}) h.push_back(std::string("latency_ns_") + p);
  for (auto f : {"max_row_activation", "backoffs", "rfm_prfm", "rfm_backoff", "deadline_slack_min",
                 "deadline_slack_mean", "cpu_cycles", "dram_cycles"})
    h.push_back(f);
  return h;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_d(const std::string& s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{}) throw ConfigError("bad number '" + s + "' in report CSV");
  return v;
}

std::int64_t to_i(const std::string& s) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{}) throw ConfigError("bad integer '" + s + "' in report CSV");
  return v;
}

}  // namespace

void write_reports_csv(std::ostream& out, const std::vector<SimReport>& reports) {
  auto h = header();
  for (std::size_t i = 0; i < h.size(); ++i) out << (i ? "," : "") << h[i];
  out << '\n';
  for (auto& r : reports) {
    if (r.cores.size() > kMaxCores) throw PreconditionError("too many cores for report CSV");
    out << r.mix << ',' << r.mechanism << ',' << r.n_rh << ',' << (r.attack ? 1 : 0) << ',' << r.seed << ','
        << r.cores.size() << ',' << format_double(r.weighted_speedup);
    for (int c = 0; c < kMaxCores; ++c) {
      if (c < static_cast<int>(r.cores.size())) {
        auto& k = r.cores[c];
        out << ',' << format_double(k.ipc_shared) << ',' << format_double(k.ipc_alone) << ',' << k.instructions
            << ',' << k.cycles << ',' << k.row_misses << ',' << k.reads << ',' << k.writes << ','
            << (k.attacker ? 1 : 0);
      } else {
        out << ",,,,,,,,";
      }
    }
    auto& m = r.commands;
    out << ',' << m.act << ',' << m.pre << ',' << m.rd << ',' << m.wr << ',' << m.ref << ',' << m.rfm << ','
        << m.preventive;
    auto& e = r.energy_pj;
    for (double v : {e.act, e.rd, e.wr, e.ref, e.rfm, e.preventive, e.background, e.total()})
      out << ',' << format_double(v);
    for (double v : r.latency.ns) out << ',' << format_double(v);
    out << ',' << r.max_row_activation << ',' << r.backoffs << ',' << r.rfm_prfm << ',' << r.rfm_backoff << ','
        << r.deadline_slack_min << ',' << format_double(r.deadline_slack_mean) << ',' << r.cpu_cycles << ','
        << r.dram_cycles << '\n';
  }
}

std::vector<SimReport> read_reports_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty report CSV");
  const auto h = header();
  if (split(line) != h) throw ConfigError("unexpected report CSV header");
  std::vector<SimReport> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split(line);
    if (f.size() != h.size()) throw ConfigError("report CSV row has wrong field count");
    std::size_t i = 0;
    SimReport r;
    r.mix = f[i++];
    r.mechanism = f[i++];
    r.n_rh = to_i(f[i++]);
    r.attack = to_i(f[i++]) != 0;
    r.seed = static_cast<std::uint64_t>(std::stoull(f[i++]));
    auto ncores = to_i(f[i++]);
    r.weighted_speedup = to_d(f[i++]);
    for (int c = 0; c < kMaxCores; ++c) {
      if (c < ncores) {
        CoreResult k;
        k.ipc_shared = to_d(f[i++]);
        k.ipc_alone = to_d(f[i++]);
        k.instructions = to_i(f[i++]);
        k.cycles = to_i(f[i++]);
        k.row_misses = to_i(f[i++]);
        k.reads = to_i(f[i++]);
        k.writes = to_i(f[i++]);
        k.attacker = to_i(f[i++]) != 0;
        r.cores.push_back(k);
      } else {
        i += 8;
      }
    }
    auto& m = r.commands;
    for (auto* p : {&m.act, &m.pre, &m.rd, &m.wr, &m.ref, &m.rfm, &m.preventive}) *p = to_i(f[i++]);
    auto& e = r.energy_pj;
    for (auto* p : {&e.act, &e.rd, &e.wr, &e.ref, &e.rfm, &e.preventive, &e.background}) *p = to_d(f[i++]);
    ++i;  // total is derived
    for (auto& v : r.latency.ns) v = to_d(f[i++]);
    r.max_row_activation = to_i(f[i++]);
    r.backoffs = to_i(f[i++]);
    r.rfm_prfm = to_i(f[i++]);
    r.rfm_backoff = to_i(f[i++]);
    r.deadline_slack_min = to_i(f[i++]);
    r.deadline_slack_mean = to_d(f[i++]);
    r.cpu_cycles = to_i(f[i++]);
    r.dram_cycles = to_i(f[i++]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pracsim
