#pragma once

#include <array>
#include <cstddef>
#include <utility>

#include "bellsim/detector.hpp"
#include "bellsim/states.hpp"
#include "bellsim/timing.hpp"

namespace bellsim {

/// Fiber link between a station and the analyzer.
struct ChannelConfig {
  double length_km = 0.0;
  double attenuation_db_per_km = 0.2;
  double extra_loss_db = 0.0;

  /// Power transmission t = 10^-(length*att + extra)/10, in (0, 1].
  double transmission() const;
  void validate() const;  // throws std::invalid_argument on violation
};

/// Joint probability of each of the 16 click patterns of one clock cycle.
///
/// Pattern index bit layout (shared with ClickPattern in bsm.hpp):
///   bit 0: detector 1, early bin
///   bit 1: detector 1, late bin
///   bit 2: detector 2, early bin
///   bit 3: detector 2, late bin
struct PatternDistribution {
  std::array<double, 16> p{};

  double& operator[](std::size_t i) { return p[i]; }
  double operator[](std::size_t i) const { return p[i]; }
  double sum() const;
  /// Largest |p[i] - other.p[i]|.
  double max_abs_diff(const PatternDistribution& other) const;
};

/// Scale both amplitudes by sqrt(t); intensities scale by t.
TimeBinState attenuate(const TimeBinState& state, const ChannelConfig& channel);
TimeBinState attenuate(const TimeBinState& state, double transmission);

/// 50/50 beam splitter with relative phase theta on input b, applied per bin:
/// c = (a + b e^{i theta})/sqrt(2), d = (a - b e^{i theta})/sqrt(2).
/// Output c feeds detector 1, output d feeds detector 2.
std::pair<TimeBinState, TimeBinState> beamsplit(const TimeBinState& a, const TimeBinState& b,
                                                double theta);

/// Threshold-detector click probability for phase-randomized coherent light
/// of mean photon number lambda: 1 - (1 - p_dark) e^{-eta lambda}.
/// Throws std::domain_error for lambda < 0 or eta/p_dark outside [0,1].
double click_prob(double lambda, double eta, double p_dark);

/// Zero the early&late coincidence of any detector whose dead-time covers the
/// bin separation, moving that mass to the corresponding early-only pattern.
void apply_deadtime_rule(PatternDistribution& dist, bool det1_blocked, bool det2_blocked);

/// Exact 16-pattern click distribution for coherent inputs at fixed relative
/// phase theta. Bins are independent Bernoulli clicks except that a detector
/// with tau >= bin separation cannot click in both bins of one cycle.
PatternDistribution pattern_distribution(const TimeBinState& a, const TimeBinState& b,
                                         const DetectorConfig& det1, const DetectorConfig& det2,
                                         double theta, const TimingConfig& timing = {});

/// Uniform average of pattern_distribution over theta in [0, 2pi). The grid
/// rule is exact for trigonometric polynomials of degree < n_points.
/// Throws std::domain_error for n_points < 8.
PatternDistribution phase_average(const TimeBinState& a, const TimeBinState& b,
                                  const DetectorConfig& det1, const DetectorConfig& det2,
                                  int n_points = 16, const TimingConfig& timing = {});

}  // namespace bellsim
