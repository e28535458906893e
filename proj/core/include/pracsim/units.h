#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace pracsim {

// All durations are exact integer picoseconds. std::chrono literals in
// ns/us/ms convert implicitly without loss.
using Picos = std::chrono::duration<std::int64_t, std::pico>;

// DRAM command-clock cycles.
using Cycle = std::int64_t;

// Parses "7.5ns", "3.9us", "32ms", "625ps" exactly. A bare number is
// rejected so that unit mistakes in config files surface immediately.
Picos parse_duration(std::string_view text);

// Renders with the largest unit that keeps the value exact.
std::string format_duration(Picos d);

constexpr std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return a / b + ((a % b != 0 && ((a < 0) == (b < 0))) ? 1 : 0);
}

}  // namespace pracsim
