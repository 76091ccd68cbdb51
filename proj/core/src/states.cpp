#include "bellsim/states.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bellsim {

void SourceConfig::validate() const {
  if (intensities.empty()) {
    throw std::invalid_argument("source: intensities must not be empty");
  }
  for (std::size_t i = 0; i < intensities.size(); ++i) {
    if (!(intensities[i] >= 0.0)) {
      throw std::invalid_argument("source: intensities must be >= 0");
    }
    if (i > 0 && !(intensities[i] < intensities[i - 1])) {
      throw std::invalid_argument("source: intensities must be strictly decreasing");
    }
  }
  if (intensities.back() != 0.0) {
    throw std::invalid_argument("source: last intensity must be 0 (vacuum)");
  }
  if (!(extinction_db > 0.0)) {
    throw std::invalid_argument("source: extinction_db must be > 0");
  }
}

TimeBinState prepare(Basis basis, int bit, double mu, double global_phase) {
  if (mu < 0.0) {
    throw std::domain_error("prepare: mean photon number must be >= 0, got " + std::to_string(mu));
  }
  if (bit != 0 && bit != 1) {
    throw std::invalid_argument("prepare: bit must be 0 or 1");
  }
  const std::complex<double> phase = std::polar(1.0, global_phase);
  TimeBinState s;
  s.label = StateLabel{basis, bit};
  if (basis == Basis::Z) {
    const std::complex<double> amp = std::sqrt(mu) * phase;
    if (bit == 0) {
      s.amp_early = amp;
    } else {
      s.amp_late = amp;
    }
  } else {
    const std::complex<double> amp = std::sqrt(mu / 2.0) * phase;
    s.amp_early = amp;
    s.amp_late = (bit == 0) ? amp : -amp;
  }
  return s;
}

TimeBinState apply_extinction(const TimeBinState& state, double extinction_db, double mu) {
  if (!(extinction_db > 0.0)) {
    throw std::domain_error("apply_extinction: extinction_db must be > 0");
  }
  const double leak = mu * std::pow(10.0, -extinction_db / 10.0);
  if (leak <= 0.0) {
    return state;
  }
  // Leakage inherits the laser phase, read off the occupied bin.
  double ref_phase = 0.0;
  if (std::norm(state.amp_early) > 0.0) {
    ref_phase = std::arg(state.amp_early);
  } else if (std::norm(state.amp_late) > 0.0) {
    ref_phase = std::arg(state.amp_late);
  }
  const std::complex<double> leak_amp = std::polar(std::sqrt(leak), ref_phase);
  TimeBinState out = state;
  if (std::norm(out.amp_early) == 0.0) {
    out.amp_early = leak_amp;
  }
  if (std::norm(out.amp_late) == 0.0) {
    out.amp_late = leak_amp;
  }
  return out;
}

TimeBinState apply_prep_phase_error(const TimeBinState& state, double delta_phi) {
  TimeBinState out = state;
  out.amp_late *= std::polar(1.0, delta_phi);
  return out;
}

char state_char(Basis basis, int bit) {
  if (basis == Basis::Z) {
    return bit == 0 ? '0' : '1';
  }
  return bit == 0 ? '+' : '-';
}

const char* basis_name(Basis basis) { return basis == Basis::Z ? "z" : "x"; }

}  // namespace bellsim
