#include "repeaterlab/config.h"

#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

#include "repeaterlab/errors.h"

namespace repeaterlab {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where.empty() ? what : where + ": " + what);
}

void reject_unknown(const ordered_json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) {
    fail(where, "expected an object");
  }
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (keys.count(item.key()) == 0) {
      fail(where, "unknown key \"" + item.key() + "\"");
    }
  }
}

double get_number(const ordered_json& obj, const char* key, const std::string& where,
                  double fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  const ordered_json& v = obj.at(key);
  if (!v.is_number()) {
    fail(where, std::string(key) + " must be a number");
  }
  return v.get<double>();
}

std::uint64_t get_unsigned(const ordered_json& obj, const char* key, const std::string& where,
                           std::uint64_t fallback,
                           std::uint64_t max = std::numeric_limits<std::uint64_t>::max()) {
  if (!obj.contains(key)) {
    return fallback;
  }
  const ordered_json& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    fail(where, std::string(key) + " must be a non-negative integer");
  }
  const std::uint64_t x = v.get<std::uint64_t>();
  if (x > max) {
    fail(where, std::string(key) + " must be <= " + std::to_string(max));
  }
  return x;
}

std::string get_string(const ordered_json& obj, const char* key, const std::string& where,
                       const std::string& fallback) {
  if (!obj.contains(key)) {
    return fallback;
  }
  const ordered_json& v = obj.at(key);
  if (!v.is_string()) {
    fail(where, std::string(key) + " must be a string");
  }
  return v.get<std::string>();
}

void check_name(const std::string& name, const std::string& what) {
  if (name.empty()) {
    fail(what, "name must not be empty");
  }
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    if (!ok) {
      fail(what + " \"" + name + "\"", "name may only contain letters, digits, '-', '_' and '.'");
    }
  }
}

ExperimentSettings parse_settings(const ordered_json& obj, const std::string& where,
                                  const ExperimentSettings& base) {
  ExperimentSettings s = base;
  s.attempts = static_cast<unsigned>(
      get_unsigned(obj, "attempts", where, base.attempts, std::numeric_limits<unsigned>::max()));
  s.retry_budget = static_cast<unsigned>(get_unsigned(obj, "retry_budget", where,
                                                      base.retry_budget,
                                                      std::numeric_limits<unsigned>::max()));
  s.f_threshold = get_number(obj, "f_threshold", where, base.f_threshold);
  s.t_sim_s = get_number(obj, "t_sim_s", where, base.t_sim_s);
  try {
    s.validate();
  } catch (const ConfigError& e) {
    fail(where, e.what());
  }
  return s;
}

HardwareProfile parse_profile(const std::string& name, const ordered_json& obj) {
  const std::string where = "profile \"" + name + "\"";
  reject_unknown(obj, where,
                 {"base", "memory_slots", "tau_coh_s", "f_init", "emit_frequency_hz",
                  "attenuation_db_per_km", "light_speed_km_per_s", "classical_delay_s",
                  "bsm_intrinsic_success", "detector_efficiency", "swap_success",
                  "bsm_position_fraction"});
  HardwareProfile p;
  if (obj.contains("base")) {
    const std::string base = get_string(obj, "base", where, "");
    const auto& builtins = builtin_profiles();
    const auto it = builtins.find(base);
    if (it == builtins.end()) {
      fail(where, "base names unknown built-in profile \"" + base + "\"");
    }
    p = it->second;
  }
  p.name = name;
  p.memory_slots = static_cast<std::uint32_t>(get_unsigned(
      obj, "memory_slots", where, p.memory_slots, std::numeric_limits<std::uint32_t>::max()));
  p.tau_coh_s = get_number(obj, "tau_coh_s", where, p.tau_coh_s);
  p.f_init = get_number(obj, "f_init", where, p.f_init);
  p.emit_frequency_hz = get_number(obj, "emit_frequency_hz", where, p.emit_frequency_hz);
  p.attenuation_db_per_km = get_number(obj, "attenuation_db_per_km", where, p.attenuation_db_per_km);
  p.light_speed_km_per_s = get_number(obj, "light_speed_km_per_s", where, p.light_speed_km_per_s);
  p.classical_delay_s = get_number(obj, "classical_delay_s", where, p.classical_delay_s);
  p.bsm_intrinsic_success = get_number(obj, "bsm_intrinsic_success", where, p.bsm_intrinsic_success);
  p.detector_efficiency = get_number(obj, "detector_efficiency", where, p.detector_efficiency);
  if (obj.contains("swap_success")) {
    if (obj.at("swap_success").is_null()) {
      p.swap_success.reset();
    } else {
      p.swap_success = get_number(obj, "swap_success", where, 1.0);
    }
  }
  p.bsm_position_fraction = get_number(obj, "bsm_position_fraction", where, p.bsm_position_fraction);
  try {
    p.validate();
  } catch (const ConfigError& e) {
    fail(where, e.what());
  }
  return p;
}

SweepSpec parse_sweep(const std::string& name, const ordered_json& obj,
                      const GlobalSettings& global) {
  const std::string where = "sweep \"" + name + "\"";
  reject_unknown(obj, where,
                 {"kind", "profile", "distances_km", "min_routers", "max_routers", "hop_km",
                  "repeaters", "base_seed", "attempts", "retry_budget", "f_threshold", "t_sim_s"});
  SweepSpec s;
  s.name = name;
  if (!obj.contains("kind")) {
    fail(where, "kind is required");
  }
  try {
    s.kind = sweep_kind_from_string(get_string(obj, "kind", where, ""));
  } catch (const ConfigError& e) {
    fail(where, e.what());
  }
  if (!obj.contains("profile")) {
    fail(where, "profile is required");
  }
  s.profile = get_string(obj, "profile", where, "");
  if (obj.contains("distances_km")) {
    const ordered_json& d = obj.at("distances_km");
    if (!d.is_array()) {
      fail(where, "distances_km must be an array of numbers");
    }
    for (const ordered_json& x : d) {
      if (!x.is_number()) {
        fail(where, "distances_km must be an array of numbers");
      }
      s.distances_km.push_back(x.get<double>());
    }
  }
  s.min_routers = get_unsigned(obj, "min_routers", where, s.min_routers, 1000000);
  s.max_routers = get_unsigned(obj, "max_routers", where, s.max_routers, 1000000);
  s.hop_km = get_number(obj, "hop_km", where, s.hop_km);
  s.repeaters = get_unsigned(obj, "repeaters", where, s.repeaters, 1000000);
  s.base_seed = get_unsigned(obj, "base_seed", where, global.base_seed);
  s.settings = parse_settings(obj, where, global.settings);
  try {
    s.validate();
  } catch (const ConfigError& e) {
    fail(where, e.what());
  }
  return s;
}

}  // namespace

const HardwareProfile& ConfigFile::profile(const std::string& name) const {
  if (const auto it = profiles.find(name); it != profiles.end()) {
    return it->second;
  }
  const auto& builtins = builtin_profiles();
  if (const auto it = builtins.find(name); it != builtins.end()) {
    return it->second;
  }
  throw ConfigError("unknown profile \"" + name + "\"");
}

const SweepSpec& ConfigFile::sweep(const std::string& name) const {
  for (const SweepSpec& s : sweeps) {
    if (s.name == name) {
      return s;
    }
  }
  throw ConfigError("unknown sweep \"" + name + "\"");
}

ConfigFile parse_config(const ordered_json& doc) {
  reject_unknown(doc, "",
                 {"base_seed", "t_sim_s", "output_dir", "f_threshold", "retry_budget", "attempts",
                  "profiles", "sweeps"});
  ConfigFile config;
  config.global.base_seed = get_unsigned(doc, "base_seed", "", config.global.base_seed);
  config.global.output_dir = get_string(doc, "output_dir", "", config.global.output_dir);
  if (config.global.output_dir.empty()) {
    fail("", "output_dir must not be empty");
  }
  config.global.settings = parse_settings(doc, "", ExperimentSettings{});

  if (doc.contains("profiles")) {
    const ordered_json& profiles = doc.at("profiles");
    if (!profiles.is_object()) {
      fail("profiles", "expected an object keyed by profile name");
    }
    for (const auto& item : profiles.items()) {
      check_name(item.key(), "profile");
      config.profiles.emplace(item.key(), parse_profile(item.key(), item.value()));
    }
  }
  if (doc.contains("sweeps")) {
    const ordered_json& sweeps = doc.at("sweeps");
    if (!sweeps.is_object()) {
      fail("sweeps", "expected an object keyed by sweep name");
    }
    for (const auto& item : sweeps.items()) {
      check_name(item.key(), "sweep");
      SweepSpec s = parse_sweep(item.key(), item.value(), config.global);
      config.profile(s.profile);  // must resolve
      config.sweeps.push_back(std::move(s));
    }
  }
  return config;
}

ConfigFile parse_config_text(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config_text(buffer.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ordered_json profile_to_json(const HardwareProfile& p) {
  ordered_json j;
  j["memory_slots"] = p.memory_slots;
  j["tau_coh_s"] = p.tau_coh_s;
  j["f_init"] = p.f_init;
  j["emit_frequency_hz"] = p.emit_frequency_hz;
  j["attenuation_db_per_km"] = p.attenuation_db_per_km;
  j["light_speed_km_per_s"] = p.light_speed_km_per_s;
  j["classical_delay_s"] = p.classical_delay_s;
  j["bsm_intrinsic_success"] = p.bsm_intrinsic_success;
  j["detector_efficiency"] = p.detector_efficiency;
  j["swap_success"] = p.swap_success ? ordered_json(*p.swap_success) : ordered_json(nullptr);
  j["bsm_position_fraction"] = p.bsm_position_fraction;
  return j;
}

ordered_json config_to_json(const ConfigFile& c) {
  ordered_json j;
  j["base_seed"] = c.global.base_seed;
  j["output_dir"] = c.global.output_dir;
  j["attempts"] = c.global.settings.attempts;
  j["retry_budget"] = c.global.settings.retry_budget;
  j["f_threshold"] = c.global.settings.f_threshold;
  j["t_sim_s"] = c.global.settings.t_sim_s;
  j["profiles"] = ordered_json::object();
  for (const auto& [name, p] : c.profiles) {
    j["profiles"][name] = profile_to_json(p);
  }
  j["sweeps"] = ordered_json::object();
  for (const SweepSpec& s : c.sweeps) {
    ordered_json o;
    o["kind"] = to_string(s.kind);
    o["profile"] = s.profile;
    o["distances_km"] = s.distances_km;
    o["min_routers"] = s.min_routers;
    o["max_routers"] = s.max_routers;
    o["hop_km"] = s.hop_km;
    o["repeaters"] = s.repeaters;
    o["base_seed"] = s.base_seed;
    o["attempts"] = s.settings.attempts;
    o["retry_budget"] = s.settings.retry_budget;
    o["f_threshold"] = s.settings.f_threshold;
    o["t_sim_s"] = s.settings.t_sim_s;
    j["sweeps"][s.name] = std::move(o);
  }
  return j;
}

}  // namespace repeaterlab
