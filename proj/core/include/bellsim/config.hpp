#pragma once

#include <stdexcept>
#include <string>

#include "bellsim/montecarlo.hpp"

namespace bellsim {

class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reference setup: mu/nu/vacuum decoy ladder at 50 dB extinction, 20 km of
/// 0.2 dB/km fiber per arm, detector 1 {eta 0.775, 10 Hz, 30 ns}, detector 2
/// {eta 0.762, 10 Hz, 40 ns}, 5 MHz clock with 75 ns bin separation, uniform
/// schedule over all same-basis state pairs and intensity pairs.
RunConfig default_run_config();

/// Serialize every field, including seed, cycles and threads.
std::string run_config_to_json(const RunConfig& cfg);

/// Parse a config, treating absent fields as the default_run_config values,
/// so a file only states deviations from the reference setup. Unknown keys,
/// wrong types and malformed values raise config_error naming the JSON path.
RunConfig run_config_from_json(const std::string& text);

/// Canonical form of the physics-defining fields: seed, cycles and threads
/// are excluded, an empty schedule is resolved to the default one, keys are
/// sorted. Two runs are mergeable exactly when these strings match.
std::string canonical_config_json(const RunConfig& cfg);

/// FNV-1a 64-bit hash of canonical_config_json as 16 hex digits.
std::string config_digest(const RunConfig& cfg);

/// Apply one "dot.path=value" assignment, e.g. "detectors.0.tau_ns=100" or
/// "phase.mode=fixed". Paths mirror the JSON layout; the field must already
/// exist. Throws config_error for unknown paths or unparseable values.
void apply_override(RunConfig& cfg, const std::string& assignment);

}  // namespace bellsim
