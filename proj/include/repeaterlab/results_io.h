#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "repeaterlab/experiments.h"

namespace repeaterlab {

/// One CSV line of a sweep result.
struct ResultRow {
  std::string sweep_kind;
  double total_distance_km{0.0};
  std::size_t router_count{2};
  std::size_t bsm_count{1};
  double hop_km{0.0};
  unsigned attempts{0};
  unsigned e_count{0};
  unsigned failures{0};
  std::optional<double> mean_f_e2e;
  std::string parity;
  std::string odd_subclass;
  std::uint64_t seed{0};

  static ResultRow from(const ExperimentResult& result);
};

extern const char* const kResultHeader;

/// Rows sorted by (distance, router count), header always first, floats with
/// six significant digits.
void write_results(std::vector<ResultRow> rows, std::ostream& out);
/// Throws ResourceError naming the path on I/O failure.
void write_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path);

/// Parses a file produced by write_results. Throws ConfigError on a bad header
/// or malformed line.
std::vector<ResultRow> read_results(std::istream& in);
std::vector<ResultRow> read_results(const std::filesystem::path& path);

std::string format_float(double value);

}  // namespace repeaterlab
