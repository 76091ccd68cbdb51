#include "bellsim/optics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bellsim {

double ChannelConfig::transmission() const {
  return std::pow(10.0, -(length_km * attenuation_db_per_km + extra_loss_db) / 10.0);
}

void ChannelConfig::validate() const {
  if (!(length_km >= 0.0) || !(attenuation_db_per_km >= 0.0) || !(extra_loss_db >= 0.0)) {
    throw std::invalid_argument("channel: length, attenuation and extra loss must be >= 0");
  }
}

double PatternDistribution::sum() const {
  double s = 0.0;
  for (double v : p) s += v;
  return s;
}

double PatternDistribution::max_abs_diff(const PatternDistribution& other) const {
  double m = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    m = std::max(m, std::abs(p[i] - other.p[i]));
  }
  return m;
}

TimeBinState attenuate(const TimeBinState& state, const ChannelConfig& channel) {
  return attenuate(state, channel.transmission());
}

TimeBinState attenuate(const TimeBinState& state, double transmission) {
  if (transmission < 0.0 || transmission > 1.0) {
    throw std::domain_error("transmission must be in [0,1]");
  }
  const double scale = std::sqrt(transmission);
  TimeBinState out = state;
  out.amp_early *= scale;
  out.amp_late *= scale;
  return out;
}

std::pair<TimeBinState, TimeBinState> beamsplit(const TimeBinState& a, const TimeBinState& b,
                                                double theta) {
  const std::complex<double> rot = std::polar(1.0, theta);
  const double inv_sqrt2 = std::numbers::sqrt2 / 2.0;
  TimeBinState c, d;
  c.amp_early = (a.amp_early + b.amp_early * rot) * inv_sqrt2;
  c.amp_late = (a.amp_late + b.amp_late * rot) * inv_sqrt2;
  d.amp_early = (a.amp_early - b.amp_early * rot) * inv_sqrt2;
  d.amp_late = (a.amp_late - b.amp_late * rot) * inv_sqrt2;
  return {c, d};
}

double click_prob(double lambda, double eta, double p_dark) {
  if (!(lambda >= 0.0)) {
    throw std::domain_error("click_prob: mean photon number must be >= 0");
  }
  if (!(eta >= 0.0 && eta <= 1.0) || !(p_dark >= 0.0 && p_dark <= 1.0)) {
    throw std::domain_error("click_prob: eta and p_dark must lie in [0,1]");
  }
  return 1.0 - (1.0 - p_dark) * std::exp(-eta * lambda);
}

void apply_deadtime_rule(PatternDistribution& dist, bool det1_blocked, bool det2_blocked) {
  // Bits per optics.hpp: 0 = d1 early, 1 = d1 late, 2 = d2 early, 3 = d2 late.
  if (det1_blocked) {
    for (int idx = 0; idx < 16; ++idx) {
      if ((idx & 0b0011) == 0b0011) {
        dist[idx & ~0b0010] += dist[idx];
        dist[idx] = 0.0;
      }
    }
  }
  if (det2_blocked) {
    for (int idx = 0; idx < 16; ++idx) {
      if ((idx & 0b1100) == 0b1100) {
        dist[idx & ~0b1000] += dist[idx];
        dist[idx] = 0.0;
      }
    }
  }
}

PatternDistribution pattern_distribution(const TimeBinState& a, const TimeBinState& b,
                                         const DetectorConfig& det1, const DetectorConfig& det2,
                                         double theta, const TimingConfig& timing) {
  const auto [c, d] = beamsplit(a, b, theta);
  const double pd1 = dark_click_prob(det1.dark_rate_hz, timing.pulse_width_ns);
  const double pd2 = dark_click_prob(det2.dark_rate_hz, timing.pulse_width_ns);

  // Slot order matches the pattern bit layout.
  const std::array<double, 4> click = {
      click_prob(c.intensity_early(), det1.eta, pd1),
      click_prob(c.intensity_late(), det1.eta, pd1),
      click_prob(d.intensity_early(), det2.eta, pd2),
      click_prob(d.intensity_late(), det2.eta, pd2),
  };

  PatternDistribution dist;
  for (int idx = 0; idx < 16; ++idx) {
    double pr = 1.0;
    for (int s = 0; s < 4; ++s) {
      pr *= (idx >> s & 1) ? click[s] : 1.0 - click[s];
    }
    dist[idx] = pr;
  }
  apply_deadtime_rule(dist, det1.tau_ns >= timing.bin_separation_ns,
                      det2.tau_ns >= timing.bin_separation_ns);
  return dist;
}

PatternDistribution phase_average(const TimeBinState& a, const TimeBinState& b,
                                  const DetectorConfig& det1, const DetectorConfig& det2,
                                  int n_points, const TimingConfig& timing) {
  if (n_points < 8) {
    throw std::domain_error("phase_average: n_points must be >= 8");
  }
  PatternDistribution acc;
  for (int j = 0; j < n_points; ++j) {
    const double theta = 2.0 * std::numbers::pi * j / n_points;
    const PatternDistribution d = pattern_distribution(a, b, det1, det2, theta, timing);
    for (int idx = 0; idx < 16; ++idx) acc[idx] += d[idx];
  }
  for (int idx = 0; idx < 16; ++idx) acc[idx] /= n_points;
  return acc;
}

}  // namespace bellsim
