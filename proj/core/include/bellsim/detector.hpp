#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace bellsim {

/// One SNSPD. tau_ns is the effective (non-paralyzable) dead-time actually
/// used by the simulators; the kinetic-inductance parameters allow deriving
/// it through deadtime_from_physics.
struct DetectorConfig {
  double eta = 1.0;                  // system detection efficiency
  double dark_rate_hz = 0.0;
  double tau_ns = 0.0;               // effective dead-time
  double kinetic_inductance = 0.0;   // arbitrary units
  double load_resistance_ohm = 50.0; // 50 ohm cable + optional series resistor
  double pileup_floor_ns = 0.0;      // minimum resolvable inter-detection separation
  double kappa = 1.0;                // ns*ohm per inductance unit

  void validate() const;  // throws std::invalid_argument on violation
};

/// Dead-time from the recovery scaling tau ~ L_k/R_l, clamped below by the
/// pile-up floor. kappa is a per-detector fit constant.
/// Throws std::domain_error for load_resistance_ohm <= 0.
double deadtime_from_physics(double kinetic_inductance, double load_resistance_ohm,
                             double kappa, double pileup_floor_ns);

/// Greedy non-paralyzable dead-time filter: keep the first event, then keep
/// each event at least tau_ns after the last kept one. Input must be sorted
/// ascending (std::invalid_argument otherwise).
std::vector<double> apply_deadtime(const std::vector<double>& timestamps_ns, double tau_ns);

/// Probability of at least one dark count in a window: 1 - exp(-rate*window).
double dark_click_prob(double dark_rate_hz, double window_ns);

struct InterarrivalHistogram {
  double bin_width_ns = 1.0;
  std::vector<std::uint64_t> counts;  // bin i covers [i*w, (i+1)*w)
  std::uint64_t detections = 0;       // surviving detections
  bool low_statistics = false;        // fewer than 1e4 surviving detections

  std::uint64_t total_counts() const;
  /// First bin with a nonzero count, in ns (-1 if empty).
  double first_nonzero_bin_ns() const;
  /// CSV rows "bin_start_ns,count" with a header line.
  void write_csv(std::ostream& os) const;
};

/// Simulate a homogeneous Poisson detection stream at rate_hz for duration_s,
/// run it through apply_deadtime, and histogram consecutive differences.
/// Reproducible for a fixed seed.
InterarrivalHistogram interarrival_histogram(double rate_hz, double tau_ns, double duration_s,
                                             double bin_width_ns, std::uint64_t seed);

}  // namespace bellsim
