#include "pracsim/mitigations.h"

#include <bit>
#include <cmath>
#include <mutex>
#include <tuple>

#include "pracsim/error.h"

namespace pracsim {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

int bits_for(std::int64_t max_value) {
  return std::max(1, static_cast<int>(std::bit_width(static_cast<std::uint64_t>(max_value))));
}

int log2_exact(std::int64_t v) { return std::bit_width(static_cast<std::uint64_t>(v)) - 1; }

// Secure-threshold searches are expensive and repeated across a campaign.
std::int64_t cached(const std::string& key, auto compute) {
  static std::mutex mu;
  static std::map<std::string, std::int64_t> memo;
  {
    std::lock_guard lock(mu);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
  }
  std::int64_t v = compute();
  std::lock_guard lock(mu);
  memo.emplace(key, v);
  return v;
}

std::string timing_key(const TimingParams& t) {
  std::string k;
  for (auto& f : timing_field_names()) k += std::to_string(timing_field(t, f).count()) + ",";
  return k;
}

}  // namespace

std::string mitigation_name(const MitigationConfig& m) {
  return std::visit(overloaded{
                        [](const NoMitigation&) { return std::string("none"); },
                        [](const PrfmConfig&) { return std::string("prfm"); },
                        [](const PracNConfig& c) { return "prac-" + std::to_string(c.prac.bo_n_refs); },
                        [](const PracPlusPrfmConfig&) { return std::string("prac+prfm"); },
                        [](const PracOptimisticConfig&) { return std::string("prac-optimistic"); },
                        [](const GrapheneConfig&) { return std::string("graphene"); },
                        [](const HydraConfig&) { return std::string("hydra"); },
                        [](const ParaConfig&) { return std::string("para"); },
                    },
                    m);
}

std::vector<std::string> mitigation_kinds() {
  return {"none", "prfm", "prac", "prac+prfm", "prac-optimistic", "graphene", "hydra", "para"};
}

void validate(const MitigationConfig& m, std::int64_t n_rh) {
  auto below = [&](std::int64_t v, const char* what) {
    if (v < 1 || v >= n_rh)
      throw ConfigError(std::string(what) + " must be in [1, n_rh) (got " + std::to_string(v) + ")");
  };
  std::visit(overloaded{
                 [](const NoMitigation&) {},
                 [&](const PrfmConfig& c) {
                   c.prfm.validate();
                   below(c.prfm.rfm_th, "rfm_th");
                 },
                 [&](const PracNConfig& c) {
                   c.prac.validate();
                   below(c.prac.abo_th, "abo_th");
                 },
                 [&](const PracPlusPrfmConfig& c) {
                   c.prac.validate();
                   c.prfm.validate();
                   below(c.prac.abo_th, "abo_th");
                   below(c.prfm.rfm_th, "rfm_th");
                 },
                 [&](const PracOptimisticConfig& c) {
                   c.prac.validate();
                   below(c.prac.abo_th, "abo_th");
                 },
                 [&](const GrapheneConfig& c) {
                   below(c.threshold, "graphene threshold");
                   if (c.table_entries < 1) throw ConfigError("graphene table needs at least one entry");
                 },
                 [&](const HydraConfig& c) {
                   below(c.group_threshold, "hydra group_threshold");
                   below(c.row_threshold, "hydra row_threshold");
                   if (c.gct_entries < 1 || c.rcc_entries < 1)
                     throw ConfigError("hydra tables need at least one entry");
                 },
                 [&](const ParaConfig& c) {
                   if (!(c.probability > 0.0 && c.probability <= 1.0))
                     throw ConfigError("para probability must be in (0, 1]");
                 },
             },
             m);
}

bool uses_prac_timing(const MitigationConfig& m) {
  return std::holds_alternative<PracNConfig>(m) || std::holds_alternative<PracPlusPrfmConfig>(m);
}

bool uses_backoff(const MitigationConfig& m) { return prac_part(m).has_value(); }

std::optional<PrfmParams> prfm_part(const MitigationConfig& m) {
  if (auto* c = std::get_if<PrfmConfig>(&m)) return c->prfm;
  if (auto* c = std::get_if<PracPlusPrfmConfig>(&m)) return c->prfm;
  return std::nullopt;
}

std::optional<PracParams> prac_part(const MitigationConfig& m) {
  if (auto* c = std::get_if<PracNConfig>(&m)) return c->prac;
  if (auto* c = std::get_if<PracPlusPrfmConfig>(&m)) return c->prac;
  if (auto* c = std::get_if<PracOptimisticConfig>(&m)) return c->prac;
  return std::nullopt;
}

double para_probability(std::int64_t n_rh) {
  return 1.0 - std::exp(std::log(std::ldexp(1.0, -40)) / static_cast<double>(n_rh));
}

std::int64_t graphene_threshold(std::int64_t n_rh) { return std::max<std::int64_t>(1, n_rh / 4); }

std::int64_t acts_per_window(const TimingParams& t) {
  return (t.tREFW - t.tRFC * t.refs_per_window()) / t.tRC;
}

std::int64_t graphene_entries(std::int64_t n_rh, const TimingParams& t) {
  return ceil_div(acts_per_window(t), graphene_threshold(n_rh)) + 1;
}

int hydra_counter_bits(std::int64_t threshold) {
  return static_cast<int>(std::ceil(std::log2(static_cast<double>(threshold)) / 8.0)) * 8;
}

MitigationConfig default_mitigation(const std::string& kind, std::int64_t n_rh, const Topology& topo,
                                    const TimingParams& base_timing, std::int64_t prac_refs) {
  const TimingParams prac_timing =
      base_timing.prac_adjusted ? base_timing : apply_prac_adjustments(base_timing);
  auto rfm_th = [&] {
    std::string key = "prfm:" + std::to_string(n_rh) + ":" + std::to_string(topo.rows_per_bank) + ":" +
                      timing_key(base_timing);
    std::int64_t th = cached(key, [&] { return max_secure_rfm_th(n_rh, base_timing, topo.rows_per_bank); });
    if (th < 1) throw ConfigError("no secure PRFM threshold for n_rh=" + std::to_string(n_rh));
    return PrfmParams{th, 4};
  };
  auto prac = [&] {
    PracParams p{1, prac_refs, 1, 100};
    std::string key = "prac:" + std::to_string(n_rh) + ":" + std::to_string(prac_refs) + ":" +
                      std::to_string(topo.rows_per_bank) + ":" + timing_key(prac_timing);
    p.abo_th = cached(key, [&] { return max_secure_abo_th(n_rh, p, prac_timing, topo.rows_per_bank); });
    if (p.abo_th < 1) throw ConfigError("no secure PRAC threshold for n_rh=" + std::to_string(n_rh));
    return p;
  };
  const double scale = static_cast<double>(topo.total_rows()) / (2.0 * 32 * 65'536);
  if (kind == "none") return NoMitigation{};
  if (kind == "prfm") return PrfmConfig{rfm_th()};
  if (kind == "prac") return PracNConfig{prac()};
  if (kind == "prac+prfm") return PracPlusPrfmConfig{prac(), rfm_th()};
  if (kind == "prac-optimistic") return PracOptimisticConfig{prac()};
  if (kind == "graphene") return GrapheneConfig{graphene_entries(n_rh, base_timing), graphene_threshold(n_rh)};
  if (kind == "hydra")
    return HydraConfig{std::max<std::int64_t>(1, std::llround(131'072 * scale)),
                       std::max<std::int64_t>(1, std::llround(4'096 * scale)),
                       std::max<std::int64_t>(1, n_rh / 2), std::max<std::int64_t>(1, n_rh / 2)};
  if (kind == "para") return ParaConfig{para_probability(n_rh)};
  throw ConfigError("unknown mitigation '" + kind + "'");
}

StorageBreakdown storage_cost(const MitigationConfig& m, std::int64_t n_rh, const Topology& topo,
                              const TimingParams& t) {
  const std::int64_t rows = topo.total_rows();
  const std::int64_t banks = topo.total_banks();
  const int row_bits = log2_exact(topo.rows_per_bank);
  auto prac_bits = [&] { return rows * counter_bits(n_rh); };
  auto prfm_bits = [&](const PrfmParams& p) { return banks * bits_for(p.rfm_th); };
  return std::visit(
      overloaded{
          [](const NoMitigation&) { return StorageBreakdown{}; },
          [&](const PrfmConfig& c) { return StorageBreakdown{prfm_bits(c.prfm), 0}; },
          [&](const PracNConfig&) { return StorageBreakdown{0, prac_bits()}; },
          [&](const PracOptimisticConfig&) { return StorageBreakdown{0, prac_bits()}; },
          [&](const PracPlusPrfmConfig& c) { return StorageBreakdown{prfm_bits(c.prfm), prac_bits()}; },
          [&](const GrapheneConfig& c) {
            // Each entry holds a row address and a counter wide enough for
            // two threshold periods; one spillover register per bank.
            const std::int64_t width = row_bits + counter_bits(n_rh);
            const std::int64_t spill = bits_for(acts_per_window(t));
            return StorageBreakdown{banks * (c.table_entries * width + spill), 0};
          },
          [&](const HydraConfig& c) {
            const int row_ctr = hydra_counter_bits(c.row_threshold);
            const int group_ctr = hydra_counter_bits(c.group_threshold);
            const int tag = log2_exact(rows);
            const std::int64_t cpu = c.gct_entries * group_ctr + c.rcc_entries * (tag + row_ctr + 2);
            return StorageBreakdown{cpu, rows * row_ctr};
          },
          [](const ParaConfig&) { return StorageBreakdown{}; },
      },
      m);
}

Graphene::Graphene(const GrapheneConfig& cfg, const Topology& topo, Cycle window_cycles)
    : m_cfg(cfg), m_window(window_cycles), m_tables(topo.total_banks()) {}

std::int64_t Graphene::estimate(int bank, std::int64_t row) const {
  const Table& t = m_tables[bank];
  auto it = t.count.find(row);
  return it == t.count.end() ? t.spill : it->second;
}

MitigationAction Graphene::on_activation(int bank, std::int64_t row, Cycle now) {
  if (now - m_epoch_start >= m_window) {
    for (auto& t : m_tables) t = Table{};
    m_epoch_start = now - (now - m_epoch_start) % m_window;
  }
  Table& t = m_tables[bank];
  std::int64_t before = 0, after = 0;
  if (auto it = t.count.find(row); it != t.count.end()) {
    before = it->second;
    after = before + 1;
    t.by_count.erase({before, row});
    it->second = after;
    t.by_count.insert({after, row});
  } else if (static_cast<std::int64_t>(t.count.size()) < m_cfg.table_entries) {
    before = t.spill;
    after = t.spill + 1;
    t.count.emplace(row, after);
    t.by_count.insert({after, row});
  } else {
    auto victim = t.by_count.begin();
    if (victim->first == t.spill) {
      before = t.spill;
      after = t.spill + 1;
      t.count.erase(victim->second);
      t.by_count.erase(victim);
      t.count.emplace(row, after);
      t.by_count.insert({after, row});
    } else {
      ++t.spill;
      return {};
    }
  }
  MitigationAction a;
  if (after / m_cfg.threshold > before / m_cfg.threshold) {
    a.refresh = true;
    ++m_refreshes;
  }
  return a;
}

Hydra::Hydra(const HydraConfig& cfg, const Topology& topo, Cycle window_cycles)
    : m_cfg(cfg), m_topo(topo), m_window(window_cycles) {
  m_group_size = std::max<std::int64_t>(1, topo.total_rows() / cfg.gct_entries);
  reset();
}

void Hydra::reset() {
  m_gct.assign(ceil_div(m_topo.total_rows(), m_group_size), 0);
  m_rct.clear();
  m_rcc.clear();
  m_lru.clear();
}

std::int64_t Hydra::row_counter(int bank, std::int64_t row) const {
  const std::int64_t global = bank * m_topo.rows_per_bank + row;
  if (auto it = m_rct.find(global); it != m_rct.end()) return it->second;
  return m_gct[global / m_group_size];
}

MitigationAction Hydra::on_activation(int bank, std::int64_t row, Cycle now) {
  if (now - m_epoch_start >= m_window) {
    reset();
    m_epoch_start = now - (now - m_epoch_start) % m_window;
  }
  const std::int64_t global = bank * m_topo.rows_per_bank + row;
  const std::int64_t group = global / m_group_size;
  // Counters for 64-byte blocks live in the last rows of each bank.
  const std::int64_t per_row = static_cast<std::int64_t>(m_topo.columns) * 64 /
                               (hydra_counter_bits(m_cfg.row_threshold) / 8);
  MitigationAction a;
  a.counter_row = m_topo.rows_per_bank - 1 - (row / per_row) % m_topo.rows_per_bank;

  if (m_gct[group] < m_cfg.group_threshold) {
    if (++m_gct[group] == m_cfg.group_threshold) {
      const std::int64_t first = group * m_group_size;
      const std::int64_t last = std::min(first + m_group_size, m_topo.total_rows());
      for (std::int64_t r = first; r < last; ++r) m_rct[r] = m_cfg.group_threshold;
      const std::int64_t bytes = m_group_size * (hydra_counter_bits(m_cfg.row_threshold) / 8);
      a.counter_writes += static_cast<int>(ceil_div(bytes, 64));
      m_writes += a.counter_writes;
    }
    return a;
  }

  if (auto it = m_rcc.find(global); it != m_rcc.end()) {
    m_lru.erase(it->second.first);
    it->second = {++m_tick, true};
    m_lru.emplace(m_tick, global);
  } else {
    ++a.counter_reads;
    ++m_reads;
    if (static_cast<std::int64_t>(m_rcc.size()) >= m_cfg.rcc_entries) {
      auto oldest = m_lru.begin();
      auto ev = m_rcc.find(oldest->second);
      if (ev->second.second) {
        ++a.counter_writes;
        ++m_writes;
      }
      m_rcc.erase(ev);
      m_lru.erase(oldest);
    }
    m_rcc.emplace(global, std::pair{++m_tick, true});
    m_lru.emplace(m_tick, global);
  }
  auto& c = m_rct[global];
  if (++c >= m_cfg.row_threshold) {
    a.refresh = true;
    c = 0;
  }
  return a;
}

Para::Para(const ParaConfig& cfg, std::uint64_t seed)
    : m_cut(cfg.probability >= 1.0 ? ~0ULL : static_cast<std::uint64_t>(std::ldexp(cfg.probability, 64))),
      m_always(cfg.probability >= 1.0),
      m_rng(seed) {}

MitigationAction Para::on_activation(int, std::int64_t, Cycle) {
  MitigationAction a;
  std::uint64_t draw = m_rng();
  a.refresh = m_always || draw < m_cut;
  return a;
}

std::unique_ptr<ControllerMitigation> make_controller_mitigation(const MitigationConfig& m,
                                                                 const Topology& topo,
                                                                 const TimingParams& t,
                                                                 std::uint64_t seed) {
  const Cycle window = t.cycles(t.tREFW);
  if (auto* g = std::get_if<GrapheneConfig>(&m)) return std::make_unique<Graphene>(*g, topo, window);
  if (auto* h = std::get_if<HydraConfig>(&m)) return std::make_unique<Hydra>(*h, topo, window);
  if (auto* p = std::get_if<ParaConfig>(&m)) return std::make_unique<Para>(*p, seed);
  return nullptr;
}

}  // namespace pracsim
