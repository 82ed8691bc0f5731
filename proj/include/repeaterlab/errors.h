#pragma once

#include <stdexcept>
#include <string>

#include "repeaterlab/sim_time.h"

namespace repeaterlab {

/// Invalid topology, profile, sweep or timing configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Broken protocol bookkeeping: double delivery, aliased slot, consumed operand.
class ProtocolFault : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A session could not obtain the memory it needs.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An event handler failed; carries the simulation time at which it happened.
class SimulationFault : public std::runtime_error {
 public:
  SimulationFault(SimTime at, const std::string& what)
      : std::runtime_error("t=" + at.to_string() + ": " + what), at_(at) {}

  SimTime at() const { return at_; }

 private:
  SimTime at_;
};

}  // namespace repeaterlab
