#include "pracsim/units.h"

#include <cctype>
#include <charconv>

#include "pracsim/error.h"

namespace pracsim {

Picos parse_duration(std::string_view text) {
  auto bad = [&] { return ConfigError("invalid duration '" + std::string(text) + "'"); };
  std::size_t pos = 0;
  while (pos < text.size() && (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.')) ++pos;
  std::string_view number = text.substr(0, pos);
  std::string_view unit = text.substr(pos);
  while (!unit.empty() && unit.front() == ' ') unit.remove_prefix(1);

  std::int64_t scale = 0;
  if (unit == "ps") scale = 1;
  else if (unit == "ns") scale = 1'000;
  else if (unit == "us") scale = 1'000'000;
  else if (unit == "ms") scale = 1'000'000'000;
  else throw bad();

  auto dot = number.find('.');
  std::string_view whole = number.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : number.substr(dot + 1);
  if (whole.empty() && frac.empty()) throw bad();
  if (frac.find('.') != std::string_view::npos) throw bad();

  std::int64_t w = 0;
  if (!whole.empty()) {
    auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
    if (ec != std::errc{} || p != whole.data() + whole.size()) throw bad();
  }
  std::int64_t result = w * scale;
  std::int64_t place = scale;
  for (char c : frac) {
    if (place % 10 != 0) throw ConfigError("duration '" + std::string(text) + "' finer than 1ps");
    place /= 10;
    result += (c - '0') * place;
  }
  return Picos{result};
}

std::string format_duration(Picos d) {
  std::int64_t v = d.count();
  if (v != 0 && v % 1'000'000'000 == 0) return std::to_string(v / 1'000'000'000) + "ms";
  if (v != 0 && v % 1'000'000 == 0) return std::to_string(v / 1'000'000) + "us";
  if (v != 0 && v % 1'000 == 0) return std::to_string(v / 1'000) + "ns";
  return std::to_string(v) + "ps";
}

}  // namespace pracsim
