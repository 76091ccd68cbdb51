#include "bellsim/config.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace bellsim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw config_error("config: " + path + ": " + what);
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "expected an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) fail(path + "." + item.key(), "unknown field");
  }
}

double get_double(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    const auto v = j.get<std::int64_t>();
    if (v < 0) fail(path, "must be >= 0");
    return std::uint64_t(v);
  }
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!(v >= 0.0) || v != std::floor(v) || v > 9007199254740992.0) {
      fail(path, "must be a nonnegative integer");
    }
    return std::uint64_t(v);
  }
  fail(path, "expected an integer");
}

Basis parse_basis(const json& j, const std::string& path) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "z" || s == "Z") return Basis::Z;
    if (s == "x" || s == "X") return Basis::X;
  }
  fail(path, "expected \"z\" or \"x\"");
}

json source_json(const SourceConfig& s) {
  return {{"intensities", s.intensities},
          {"extinction_db", s.extinction_db},
          {"prep_phase_error_rad", s.prep_phase_error_rad}};
}

json channel_json(const ChannelConfig& c) {
  return {{"length_km", c.length_km},
          {"attenuation_db_per_km", c.attenuation_db_per_km},
          {"extra_loss_db", c.extra_loss_db}};
}

json detector_json(const DetectorConfig& d) {
  return {{"eta", d.eta},
          {"dark_rate_hz", d.dark_rate_hz},
          {"tau_ns", d.tau_ns},
          {"kinetic_inductance", d.kinetic_inductance},
          {"load_resistance_ohm", d.load_resistance_ohm},
          {"pileup_floor_ns", d.pileup_floor_ns},
          {"kappa", d.kappa}};
}

json schedule_json(const std::vector<ScheduleEntry>& schedule) {
  json arr = json::array();
  for (const ScheduleEntry& e : schedule) {
    arr.push_back({{"basis", basis_name(e.basis)},
                   {"bit_a", e.bit_a},
                   {"bit_b", e.bit_b},
                   {"mu_a", e.mu_a},
                   {"mu_b", e.mu_b},
                   {"weight", e.weight}});
  }
  return arr;
}

json config_json(const RunConfig& cfg) {
  return {{"cycles", cfg.cycles},
          {"seed", cfg.seed},
          {"threads", cfg.threads},
          {"phase",
           {{"mode", cfg.phase_mode == PhaseMode::RandomPerCycle ? "random" : "fixed"},
            {"theta_rad", cfg.fixed_theta}}},
          {"sources", {source_json(cfg.sources[0]), source_json(cfg.sources[1])}},
          {"channels", {channel_json(cfg.channels[0]), channel_json(cfg.channels[1])}},
          {"detectors", {detector_json(cfg.detectors[0]), detector_json(cfg.detectors[1])}},
          {"timing",
           {{"rep_rate_hz", cfg.timing.rep_rate_hz},
            {"bin_separation_ns", cfg.timing.bin_separation_ns},
            {"pulse_width_ns", cfg.timing.pulse_width_ns}}},
          {"schedule", schedule_json(cfg.schedule)}};
}

void merge_source(SourceConfig& s, const json& j, const std::string& path) {
  check_keys(j, path, {"intensities", "extinction_db", "prep_phase_error_rad"});
  if (j.contains("intensities")) {
    const json& arr = j.at("intensities");
    if (!arr.is_array()) fail(path + ".intensities", "expected an array of numbers");
    std::vector<double> vals;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      vals.push_back(get_double(arr[i], path + ".intensities." + std::to_string(i)));
    }
    s.intensities = std::move(vals);
  }
  if (j.contains("extinction_db")) {
    s.extinction_db = get_double(j.at("extinction_db"), path + ".extinction_db");
  }
  if (j.contains("prep_phase_error_rad")) {
    s.prep_phase_error_rad = get_double(j.at("prep_phase_error_rad"), path + ".prep_phase_error_rad");
  }
}

void merge_channel(ChannelConfig& c, const json& j, const std::string& path) {
  check_keys(j, path, {"length_km", "attenuation_db_per_km", "extra_loss_db"});
  if (j.contains("length_km")) c.length_km = get_double(j.at("length_km"), path + ".length_km");
  if (j.contains("attenuation_db_per_km")) {
    c.attenuation_db_per_km = get_double(j.at("attenuation_db_per_km"), path + ".attenuation_db_per_km");
  }
  if (j.contains("extra_loss_db")) {
    c.extra_loss_db = get_double(j.at("extra_loss_db"), path + ".extra_loss_db");
  }
}

void merge_detector(DetectorConfig& d, const json& j, const std::string& path) {
  check_keys(j, path, {"eta", "dark_rate_hz", "tau_ns", "kinetic_inductance",
                       "load_resistance_ohm", "pileup_floor_ns", "kappa"});
  if (j.contains("eta")) d.eta = get_double(j.at("eta"), path + ".eta");
  if (j.contains("dark_rate_hz")) d.dark_rate_hz = get_double(j.at("dark_rate_hz"), path + ".dark_rate_hz");
  if (j.contains("tau_ns")) d.tau_ns = get_double(j.at("tau_ns"), path + ".tau_ns");
  if (j.contains("kinetic_inductance")) {
    d.kinetic_inductance = get_double(j.at("kinetic_inductance"), path + ".kinetic_inductance");
  }
  if (j.contains("load_resistance_ohm")) {
    d.load_resistance_ohm = get_double(j.at("load_resistance_ohm"), path + ".load_resistance_ohm");
  }
  if (j.contains("pileup_floor_ns")) {
    d.pileup_floor_ns = get_double(j.at("pileup_floor_ns"), path + ".pileup_floor_ns");
  }
  if (j.contains("kappa")) d.kappa = get_double(j.at("kappa"), path + ".kappa");
}

template <typename T, typename MergeFn>
void merge_pair(std::array<T, 2>& dst, const json& j, const std::string& path, MergeFn merge_fn) {
  if (!j.is_array() || j.size() != 2) fail(path, "expected an array of exactly 2 entries");
  merge_fn(dst[0], j[0], path + ".0");
  merge_fn(dst[1], j[1], path + ".1");
}

RunConfig parse_run_config(const json& j) {
  RunConfig cfg = default_run_config();
  check_keys(j, "config",
             {"cycles", "seed", "threads", "phase", "sources", "channels", "detectors",
              "timing", "schedule"});
  if (j.contains("cycles")) cfg.cycles = get_u64(j.at("cycles"), "config.cycles");
  if (j.contains("seed")) cfg.seed = get_u64(j.at("seed"), "config.seed");
  if (j.contains("threads")) cfg.threads = get_int(j.at("threads"), "config.threads");
  if (j.contains("phase")) {
    const json& p = j.at("phase");
    check_keys(p, "config.phase", {"mode", "theta_rad"});
    if (p.contains("mode")) {
      if (!p.at("mode").is_string()) fail("config.phase.mode", "expected \"random\" or \"fixed\"");
      const std::string mode = p.at("mode").get<std::string>();
      if (mode == "random") {
        cfg.phase_mode = PhaseMode::RandomPerCycle;
      } else if (mode == "fixed") {
        cfg.phase_mode = PhaseMode::Fixed;
      } else {
        fail("config.phase.mode", "expected \"random\" or \"fixed\"");
      }
    }
    if (p.contains("theta_rad")) {
      cfg.fixed_theta = get_double(p.at("theta_rad"), "config.phase.theta_rad");
    }
  }
  if (j.contains("sources")) merge_pair(cfg.sources, j.at("sources"), "config.sources", merge_source);
  if (j.contains("channels")) {
    merge_pair(cfg.channels, j.at("channels"), "config.channels", merge_channel);
  }
  if (j.contains("detectors")) {
    merge_pair(cfg.detectors, j.at("detectors"), "config.detectors", merge_detector);
  }
  if (j.contains("timing")) {
    const json& t = j.at("timing");
    check_keys(t, "config.timing", {"rep_rate_hz", "bin_separation_ns", "pulse_width_ns"});
    if (t.contains("rep_rate_hz")) {
      cfg.timing.rep_rate_hz = get_double(t.at("rep_rate_hz"), "config.timing.rep_rate_hz");
    }
    if (t.contains("bin_separation_ns")) {
      cfg.timing.bin_separation_ns = get_double(t.at("bin_separation_ns"), "config.timing.bin_separation_ns");
    }
    if (t.contains("pulse_width_ns")) {
      cfg.timing.pulse_width_ns = get_double(t.at("pulse_width_ns"), "config.timing.pulse_width_ns");
    }
  }
  if (j.contains("schedule")) {
    const json& arr = j.at("schedule");
    if (!arr.is_array()) fail("config.schedule", "expected an array");
    std::vector<ScheduleEntry> schedule;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = "config.schedule." + std::to_string(i);
      const json& e = arr[i];
      check_keys(e, path, {"basis", "bit_a", "bit_b", "mu_a", "mu_b", "weight"});
      for (const char* req : {"basis", "bit_a", "bit_b", "mu_a", "mu_b"}) {
        if (!e.contains(req)) fail(path + "." + req, "missing field");
      }
      ScheduleEntry entry;
      entry.basis = parse_basis(e.at("basis"), path + ".basis");
      entry.bit_a = get_int(e.at("bit_a"), path + ".bit_a");
      entry.bit_b = get_int(e.at("bit_b"), path + ".bit_b");
      entry.mu_a = get_double(e.at("mu_a"), path + ".mu_a");
      entry.mu_b = get_double(e.at("mu_b"), path + ".mu_b");
      if (e.contains("weight")) entry.weight = get_double(e.at("weight"), path + ".weight");
      schedule.push_back(entry);
    }
    cfg.schedule = std::move(schedule);
  }
  return cfg;
}

}  // namespace

RunConfig default_run_config() {
  RunConfig cfg;
  cfg.channels[0].length_km = 20.0;
  cfg.channels[1].length_km = 20.0;
  cfg.detectors[0].eta = 0.775;
  cfg.detectors[0].dark_rate_hz = 10.0;
  cfg.detectors[0].tau_ns = 30.0;
  cfg.detectors[1].eta = 0.762;
  cfg.detectors[1].dark_rate_hz = 10.0;
  cfg.detectors[1].tau_ns = 40.0;
  cfg.schedule = default_schedule(cfg.sources[0], cfg.sources[1]);
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  return config_json(cfg).dump(2) + "\n";
}

RunConfig run_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("config: invalid JSON: ") + e.what());
  }
  return parse_run_config(j);
}

std::string canonical_config_json(const RunConfig& cfg) {
  json j = config_json(cfg);
  j.erase("cycles");
  j.erase("seed");
  j.erase("threads");
  if (cfg.schedule.empty()) {
    j["schedule"] = schedule_json(default_schedule(cfg.sources[0], cfg.sources[1]));
  }
  return j.dump();
}

std::string config_digest(const RunConfig& cfg) {
  const std::string canon = canonical_config_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw config_error("config: override '" + assignment + "': expected path=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string value_text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(value_text);
  } catch (const json::parse_error&) {
    value = value_text;  // bare word, treat as string
  }

  json root = config_json(cfg);
  json* cur = &root;
  std::size_t start = 0;
  std::vector<std::string> segments;
  while (true) {
    const std::size_t dot = path.find('.', start);
    segments.push_back(path.substr(start, dot == std::string::npos ? dot : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  std::string walked;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::string& seg = segments[i];
    walked += walked.empty() ? seg : "." + seg;
    json* next = nullptr;
    if (cur->is_object()) {
      if (!cur->contains(seg)) fail(walked, "unknown config field");
      next = &cur->at(seg);
    } else if (cur->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(seg);
      } catch (const std::exception&) {
        fail(walked, "expected an array index");
      }
      if (idx >= cur->size()) fail(walked, "array index out of range");
      next = &(*cur)[idx];
    } else {
      fail(walked, "path descends into a scalar");
    }
    if (i + 1 == segments.size()) {
      *next = value;
    } else {
      cur = next;
    }
  }
  cfg = parse_run_config(root);
}

}  // namespace bellsim
