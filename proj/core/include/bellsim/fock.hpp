#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "bellsim/detector.hpp"
#include "bellsim/optics.hpp"
#include "bellsim/states.hpp"
#include "bellsim/timing.hpp"

namespace bellsim {

/// Thrown when the photon-number cutoff leaves too much probability mass
/// outside the truncated space for the requested tolerance.
class truncation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Photon-number amplitudes of one input arm over its two time bins,
/// truncated at `cutoff` photons per bin. amp is a (cutoff+1)^2 tensor in
/// row-major order, amp[ne * (cutoff+1) + nl].
struct ArmState {
  int cutoff = 0;
  std::vector<std::complex<double>> amp;

  std::complex<double>& at(int ne, int nl) { return amp[std::size_t(ne) * (cutoff + 1) + nl]; }
  const std::complex<double>& at(int ne, int nl) const {
    return amp[std::size_t(ne) * (cutoff + 1) + nl];
  }

  /// Probability mass retained inside the truncation.
  double kept_mass() const;

  static ArmState vacuum(int cutoff);
  /// Expansion of a two-bin coherent state with the given bin amplitudes.
  static ArmState coherent(const TimeBinState& state, int cutoff);
  /// Exact one-photon time-bin qubit (amplitude conventions match prepare()).
  static ArmState single_photon(Basis basis, int bit, int cutoff);
  /// n photons in the single mode defined by the basis state: the n-photon
  /// component of the corresponding phase-randomized coherent pulse.
  static ArmState number_state(Basis basis, int bit, int n, int cutoff);
};

/// Click-pattern distribution from exact photon-number propagation of two
/// arm states through the balanced beam splitter (arm B picks up phase
/// theta), followed by threshold detection with per-detector efficiency and
/// dark counts, and the same dead-time pattern rule as the analytic path.
PatternDistribution fock_pattern_distribution(const ArmState& a, const ArmState& b,
                                              const DetectorConfig& det1,
                                              const DetectorConfig& det2, double theta,
                                              const TimingConfig& timing = {});

/// Convenience wrapper for weak coherent inputs: expands both states at the
/// given cutoff and verifies the truncated tail mass stays below tail_tol.
PatternDistribution fock_pattern_oracle(const TimeBinState& a, const TimeBinState& b,
                                        const DetectorConfig& det1, const DetectorConfig& det2,
                                        double theta, int cutoff,
                                        const TimingConfig& timing = {},
                                        double tail_tol = 1e-9);

}  // namespace bellsim
