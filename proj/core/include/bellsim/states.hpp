#pragma once

#include <complex>
#include <optional>
#include <vector>

namespace bellsim {

/// Measurement/preparation basis of a time-bin qubit. Z is spanned by the
/// early/late kets, X by their balanced superpositions.
enum class Basis { Z, X };

/// Logical bit within a basis: 0 -> |0> (early) or |+>, 1 -> |1> (late) or |->.
struct StateLabel {
  Basis basis;
  int bit;
};

/// Coherent-amplitude pair describing one attenuated laser pulse pair.
/// |amp|^2 is the mean photon number in that temporal bin.
struct TimeBinState {
  std::complex<double> amp_early{0.0, 0.0};
  std::complex<double> amp_late{0.0, 0.0};
  std::optional<StateLabel> label;

  double intensity_early() const { return std::norm(amp_early); }
  double intensity_late() const { return std::norm(amp_late); }
  double total_intensity() const { return std::norm(amp_early) + std::norm(amp_late); }
};

/// Per-station source parameters: decoy intensity ladder, intensity-modulator
/// extinction, and the deterministic phase error applied when preparing |->.
struct SourceConfig {
  std::vector<double> intensities{0.11, 0.05, 0.0};  // strictly decreasing, last 0
  double extinction_db = 50.0;
  double prep_phase_error_rad = 0.0;

  void validate() const;  // throws std::invalid_argument on violation
};

/// Prepare a fresh qubit with mean photon number mu. Z puts all intensity in
/// one bin; X splits mu/2 per bin with a pi phase on the late bin for |->.
/// All amplitudes carry exp(i*global_phase). Throws std::domain_error for
/// mu < 0, std::invalid_argument for bit outside {0,1}.
TimeBinState prepare(Basis basis, int bit, double mu, double global_phase = 0.0);

/// Leak mu * 10^(-extinction_db/10) of intensity into every nominally empty
/// bin. The leakage is coherent with the source: it inherits the phase of the
/// occupied bin (single shared laser). Occupied bins are untouched.
TimeBinState apply_extinction(const TimeBinState& state, double extinction_db, double mu);

/// Multiply the late-bin amplitude by exp(i*delta_phi). Intensities unchanged.
TimeBinState apply_prep_phase_error(const TimeBinState& state, double delta_phi);

/// '0'/'1' for Z, '+'/'-' for X.
char state_char(Basis basis, int bit);
const char* basis_name(Basis basis);

}  // namespace bellsim
