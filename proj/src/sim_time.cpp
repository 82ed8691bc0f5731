#include "repeaterlab/sim_time.h"

#include <cmath>

#include "repeaterlab/errors.h"

namespace repeaterlab {

SimTime SimTime::from_seconds(double seconds) {
  if (!std::isfinite(seconds) || seconds < 0.0) {
    throw ConfigError("time must be a finite non-negative number of seconds, got " +
                      std::to_string(seconds));
  }
  const long double ps = std::nearbyint(static_cast<long double>(seconds) * kPicosPerSecond);
  if (ps >= static_cast<long double>(std::numeric_limits<rep>::max())) {
    throw ConfigError("time of " + std::to_string(seconds) + " s overflows the picosecond clock");
  }
  return SimTime{static_cast<rep>(ps)};
}

SimTime SimTime::operator+(SimTime other) const {
  if (ps_ > std::numeric_limits<rep>::max() - other.ps_) {
    throw ConfigError("simulation time overflow");
  }
  return SimTime{ps_ + other.ps_};
}

std::string SimTime::to_string() const { return std::to_string(ps_) + "ps"; }

}  // namespace repeaterlab
