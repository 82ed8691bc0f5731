#include "repeaterlab/results_io.h"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "repeaterlab/errors.h"

namespace repeaterlab {

const char* const kResultHeader =
    "sweep_kind,total_distance_km,router_count,bsm_count,hop_km,attempts,e_count,failures,"
    "mean_f_e2e,parity,odd_subclass,seed";

ResultRow ResultRow::from(const ExperimentResult& r) {
  ResultRow row;
  row.sweep_kind = to_string(r.config.kind);
  row.total_distance_km = r.config.total_distance_km;
  row.router_count = r.config.router_count;
  row.bsm_count = r.bsm_count();
  row.hop_km = r.hop_km();
  row.attempts = r.attempts;
  row.e_count = r.e_count;
  row.failures = r.failures;
  row.mean_f_e2e = r.mean_f_e2e;
  row.parity = r.parity();
  row.odd_subclass = r.odd_subclass();
  row.seed = r.seed;
  return row;
}

std::string format_float(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

void write_results(std::vector<ResultRow> rows, std::ostream& out) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.total_distance_km != b.total_distance_km) {
      return a.total_distance_km < b.total_distance_km;
    }
    return a.router_count < b.router_count;
  });
  out << kResultHeader << '\n';
  for (const ResultRow& r : rows) {
    out << r.sweep_kind << ',' << format_float(r.total_distance_km) << ',' << r.router_count
        << ',' << r.bsm_count << ',' << format_float(r.hop_km) << ',' << r.attempts << ','
        << r.e_count << ',' << r.failures << ','
        << (r.mean_f_e2e ? format_float(*r.mean_f_e2e) : std::string()) << ',' << r.parity << ','
        << r.odd_subclass << ',' << r.seed << '\n';
  }
}

void write_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ResourceError("cannot write " + path.string() + ": " + std::strerror(errno));
  }
  write_results(rows, out);
  out.flush();
  if (!out) {
    throw ResourceError("write to " + path.string() + " failed");
  }
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    fields.push_back(field);
  }
  if (!line.empty() && line.back() == ',') {
    fields.emplace_back();
  }
  return fields;
}

double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) {
      return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("line " + std::to_string(line) + ": bad number \"" + s + "\"");
}

std::uint64_t to_unsigned(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(s, &used);
    if (used == s.size() && !s.empty() && s[0] != '-') {
      return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("line " + std::to_string(line) + ": bad integer \"" + s + "\"");
}

}  // namespace

std::vector<ResultRow> read_results(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kResultHeader) {
    throw ConfigError("results file does not start with the expected header");
  }
  std::vector<ResultRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) {
      continue;
    }
    const std::vector<std::string> f = split(line);
    if (f.size() != 12) {
      throw ConfigError("line " + std::to_string(number) + ": expected 12 fields, got " +
                        std::to_string(f.size()));
    }
    ResultRow r;
    r.sweep_kind = f[0];
    r.total_distance_km = to_double(f[1], number);
    r.router_count = to_unsigned(f[2], number);
    r.bsm_count = to_unsigned(f[3], number);
    r.hop_km = to_double(f[4], number);
    r.attempts = static_cast<unsigned>(to_unsigned(f[5], number));
    r.e_count = static_cast<unsigned>(to_unsigned(f[6], number));
    r.failures = static_cast<unsigned>(to_unsigned(f[7], number));
    if (!f[8].empty()) {
      r.mean_f_e2e = to_double(f[8], number);
    }
    r.parity = f[9];
    r.odd_subclass = f[10];
    r.seed = to_unsigned(f[11], number);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open " + path.string());
  }
  try {
    return read_results(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace repeaterlab
