#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <string>

namespace repeaterlab {

/// Simulation timestamp or duration in integer picoseconds.
///
/// One picosecond is the timeline's time quantum. 10^4 s of simulated time is
/// 10^16 ps, well inside the 64-bit range.
class SimTime {
 public:
  using rep = std::uint64_t;

  static constexpr rep kPicosPerSecond = 1'000'000'000'000ULL;

  constexpr SimTime() = default;
  constexpr explicit SimTime(rep picoseconds) : ps_(picoseconds) {}

  static constexpr SimTime zero() { return SimTime{0}; }
  static constexpr SimTime max() { return SimTime{std::numeric_limits<rep>::max()}; }
  static constexpr SimTime picoseconds(rep ps) { return SimTime{ps}; }

  /// Rounds to the nearest picosecond. Throws ConfigError for negative,
  /// non-finite or unrepresentable values.
  static SimTime from_seconds(double seconds);

  constexpr rep ps() const { return ps_; }
  constexpr double seconds() const { return static_cast<double>(ps_) / kPicosPerSecond; }

  constexpr auto operator<=>(const SimTime&) const = default;

  /// Checked addition; throws ConfigError on overflow.
  SimTime operator+(SimTime other) const;
  /// Saturates at zero.
  constexpr SimTime operator-(SimTime other) const {
    return SimTime{ps_ > other.ps_ ? ps_ - other.ps_ : 0};
  }
  SimTime& operator+=(SimTime other) { return *this = *this + other; }

  std::string to_string() const;

 private:
  rep ps_{0};
};

}  // namespace repeaterlab
