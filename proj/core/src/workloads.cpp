#include "pracsim/workloads.h"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include <zlib.h>

#include "pracsim/error.h"

namespace pracsim {

namespace {

constexpr const char* kTraceHeader = "bubble_count,op,address";

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Integer-only draws so traces are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : m_state(splitmix(seed)) {}
  std::uint64_t next() {
    m_state = splitmix(m_state);
    return m_state;
  }
  // Uniform in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64); }
  // True with probability num/1000.
  bool permille(std::uint64_t num) { return below(1000) < num; }

 private:
  std::uint64_t m_state;
};

}  // namespace

void write_trace(std::ostream& out, const Trace& trace) {
  out << kTraceHeader << '\n';
  char buf[64];
  for (const auto& r : trace) {
    char* p = std::to_chars(buf, buf + sizeof buf, r.bubble_count).ptr;
    *p++ = ',';
    *p++ = r.write ? 'W' : 'R';
    *p++ = ',';
    *p++ = '0';
    *p++ = 'x';
    p = std::to_chars(p, buf + sizeof buf, r.address, 16).ptr;
    *p++ = '\n';
    out.write(buf, p - buf);
  }
}

Trace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader)
    throw ConfigError(std::string("trace must start with header '") + kTraceHeader + "'");
  Trace t;
  std::int64_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto bad = [&] { return ConfigError("malformed trace record at line " + std::to_string(lineno) + ": " + line); };
    auto c1 = line.find(',');
    auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || c2 != c1 + 2) throw bad();
    TraceRecord r;
    const char* b = line.data();
    if (std::from_chars(b, b + c1, r.bubble_count).ptr != b + c1) throw bad();
    char op = line[c1 + 1];
    if (op != 'R' && op != 'W') throw bad();
    r.write = op == 'W';
    std::size_t a = c2 + 1;
    if (line.compare(a, 2, "0x") == 0) a += 2;
    if (a >= line.size() || std::from_chars(b + a, b + line.size(), r.address, 16).ptr != b + line.size())
      throw bad();
    t.push_back(r);
  }
  return t;
}

void save_trace(const std::filesystem::path& path, const Trace& trace) {
  std::ostringstream text;
  write_trace(text, trace);
  const std::string s = text.str();
  if (path.extension() == ".gz") {
    gzFile f = gzopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot write " + path.string());
    bool ok = gzwrite(f, s.data(), static_cast<unsigned>(s.size())) == static_cast<int>(s.size());
    ok = gzclose(f) == Z_OK && ok;
    if (!ok) throw ConfigError("failed writing " + path.string());
    return;
  }
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  bool ok = std::fwrite(s.data(), 1, s.size(), f) == s.size();
  ok = std::fclose(f) == 0 && ok;
  if (!ok) throw ConfigError("failed writing " + path.string());
}

Trace load_trace(const std::filesystem::path& path) {
  // gzread passes uncompressed files through unchanged.
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw ConfigError("cannot open trace " + path.string());
  std::string s;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof buf)) > 0) s.append(buf, static_cast<std::size_t>(n));
  int err = 0;
  const char* msg = n < 0 ? gzerror(f, &err) : nullptr;
  std::string why = msg ? msg : "";
  gzclose(f);
  if (n < 0) throw ConfigError("failed reading " + path.string() + ": " + why);
  std::istringstream in(s);
  return read_trace(in);
}

char intensity_letter(Intensity c) {
  switch (c) {
    case Intensity::H: return 'H';
    case Intensity::M: return 'M';
    case Intensity::L: return 'L';
  }
  return '?';
}

Intensity parse_intensity(char c) {
  switch (c) {
    case 'H': return Intensity::H;
    case 'M': return Intensity::M;
    case 'L': return Intensity::L;
  }
  throw ConfigError(std::string("intensity class must be H, M or L, got '") + c + "'");
}

namespace {

struct ClassShape {
  std::uint64_t mean_bubbles;
  // Phase mix in permille: streaming, random, hot rows (remainder).
  std::uint64_t stream, random;
  std::uint64_t write_permille;
};

ClassShape shape(Intensity c) {
  switch (c) {
    case Intensity::H: return {20, 300, 500, 250};
    case Intensity::M: return {80, 500, 300, 250};
    case Intensity::L: return {700, 600, 200, 250};
  }
  return {};
}

}  // namespace

Trace gen_synthetic(Intensity c, std::uint64_t seed, std::int64_t length) {
  if (length < kMinSyntheticRecords)
    throw ConfigError("synthetic traces need at least " + std::to_string(kMinSyntheticRecords) +
                      " records for the intensity band to be measurable, got " + std::to_string(length));
  const ClassShape s = shape(c);
  constexpr std::uint64_t kBlocks = kCoreFootprint / 64;
  Rng rng(seed * 3 + static_cast<std::uint64_t>(c));
  Trace t;
  t.reserve(static_cast<std::size_t>(length));

  std::vector<std::uint64_t> hot;
  while (static_cast<std::int64_t>(t.size()) < length) {
    const std::uint64_t phase_len = 16 + rng.below(113);
    const std::uint64_t pick = rng.below(1000);
    enum { Stream, Random, Hot } kind = pick < s.stream ? Stream : pick < s.stream + s.random ? Random : Hot;
    std::uint64_t cursor = rng.below(kBlocks);
    if (kind == Hot) {
      hot.assign(4 + rng.below(13), 0);
      for (auto& h : hot) h = rng.below(kBlocks) & ~std::uint64_t{3};
    }
    for (std::uint64_t i = 0; i < phase_len && static_cast<std::int64_t>(t.size()) < length; ++i) {
      TraceRecord r;
      r.bubble_count = static_cast<std::uint32_t>(rng.below(2 * s.mean_bubbles + 1));
      r.write = rng.permille(s.write_permille);
      std::uint64_t block = 0;
      switch (kind) {
        case Stream: block = cursor++ % kBlocks; break;
        case Random: block = rng.below(kBlocks); break;
        case Hot: block = hot[rng.below(hot.size())] + rng.below(4); break;
      }
      r.address = block * 64;
      t.push_back(r);
    }
  }
  return t;
}

std::string MixSpec::type() const {
  std::string s;
  for (auto c : classes) s += intensity_letter(c);
  return s;
}

std::vector<MixSpec> build_mixes(int count, std::uint64_t seed) {
  if (count <= 0 || count % 6 != 0)
    throw ConfigError("mix count must be a positive multiple of 6, got " + std::to_string(count));
  const int per_type = count / 6;
  std::vector<MixSpec> out;
  for (std::size_t ty = 0; ty < kMixTypes.size(); ++ty) {
    for (int k = 0; k < per_type; ++k) {
      MixSpec m;
      char idx[16];
      std::snprintf(idx, sizeof idx, "%02d", k);
      m.name = std::string(kMixTypes[ty]) + "-" + idx;
      for (int s = 0; s < 4; ++s) {
        m.classes[s] = parse_intensity(kMixTypes[ty][s]);
        m.seeds[s] = splitmix(seed ^ splitmix(static_cast<std::uint64_t>(out.size() * 4 + s)));
      }
      out.push_back(m);
    }
  }
  return out;
}

}  // namespace pracsim
