#pragma once

#include <stdexcept>
#include <string>

namespace pracsim {

// Bad user input: unknown preset, unknown config key, empty grid.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A timing parameter set that breaks its own invariants.
class InvalidTiming : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated operation precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A DRAM command issued before a timing constraint allowed it.
class ProtocolViolation : public std::runtime_error {
 public:
  ProtocolViolation(std::string constraint, long long slack_cycles, const std::string& detail)
      : std::runtime_error("protocol violation: " + constraint + " (short by " +
                           std::to_string(slack_cycles) + " cycles) " + detail),
        m_constraint(std::move(constraint)),
        m_slack(slack_cycles) {}
  const std::string& constraint() const { return m_constraint; }
  long long slack() const { return m_slack; }

 private:
  std::string m_constraint;
  long long m_slack;
};

// Scheduler invariant broken (e.g. back-off deadline overrun).
class SchedulerBug : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pracsim
