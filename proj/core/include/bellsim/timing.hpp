#pragma once

#include <stdexcept>

namespace bellsim {

/// Clocking of the qubit train: one cycle per 1/rep_rate_hz holds an early
/// bin at offset 0 and a late bin at offset bin_separation_ns.
struct TimingConfig {
  double rep_rate_hz = 5e6;
  double bin_separation_ns = 75.0;
  double pulse_width_ns = 0.5;

  double period_ns() const { return 1e9 / rep_rate_hz; }

  void validate() const {
    if (!(rep_rate_hz > 0.0)) {
      throw std::invalid_argument("timing: rep_rate_hz must be > 0");
    }
    if (!(bin_separation_ns > 0.0) || !(bin_separation_ns < period_ns())) {
      throw std::invalid_argument("timing: bin separation must lie inside one clock period");
    }
    if (!(pulse_width_ns > 0.0) || !(pulse_width_ns < bin_separation_ns)) {
      throw std::invalid_argument("timing: pulse width must be positive and below bin separation");
    }
  }
};

}  // namespace bellsim
