#include "bellsim/detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace bellsim {

void DetectorConfig::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("detector: eta must lie in [0,1]");
  }
  if (!(dark_rate_hz >= 0.0) || !(tau_ns >= 0.0) || !(pileup_floor_ns >= 0.0)) {
    throw std::invalid_argument("detector: rates and times must be >= 0");
  }
  if (!(load_resistance_ohm >= 50.0)) {
    throw std::invalid_argument("detector: load resistance must be >= 50 ohm (output cable)");
  }
  if (!(kinetic_inductance >= 0.0) || !(kappa >= 0.0)) {
    throw std::invalid_argument("detector: kinetic inductance and kappa must be >= 0");
  }
}

double deadtime_from_physics(double kinetic_inductance, double load_resistance_ohm, double kappa,
                             double pileup_floor_ns) {
  if (!(load_resistance_ohm > 0.0)) {
    throw std::domain_error("deadtime_from_physics: load resistance must be > 0");
  }
  return std::max(kappa * kinetic_inductance / load_resistance_ohm, pileup_floor_ns);
}

std::vector<double> apply_deadtime(const std::vector<double>& timestamps_ns, double tau_ns) {
  if (!std::is_sorted(timestamps_ns.begin(), timestamps_ns.end())) {
    throw std::invalid_argument("apply_deadtime: timestamps must be sorted ascending");
  }
  std::vector<double> kept;
  kept.reserve(timestamps_ns.size());
  double last = -std::numeric_limits<double>::infinity();
  for (double t : timestamps_ns) {
    if (t - last >= tau_ns) {
      kept.push_back(t);
      last = t;
    }
  }
  return kept;
}

double dark_click_prob(double dark_rate_hz, double window_ns) {
  if (!(dark_rate_hz >= 0.0) || !(window_ns >= 0.0)) {
    throw std::domain_error("dark_click_prob: rate and window must be >= 0");
  }
  return -std::expm1(-dark_rate_hz * window_ns * 1e-9);
}

std::uint64_t InterarrivalHistogram::total_counts() const {
  std::uint64_t n = 0;
  for (std::uint64_t c : counts) n += c;
  return n;
}

double InterarrivalHistogram::first_nonzero_bin_ns() const {
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) return static_cast<double>(i) * bin_width_ns;
  }
  return -1.0;
}

void InterarrivalHistogram::write_csv(std::ostream& os) const {
  os << "bin_start_ns,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    os << static_cast<double>(i) * bin_width_ns << ',' << counts[i] << '\n';
  }
}

InterarrivalHistogram interarrival_histogram(double rate_hz, double tau_ns, double duration_s,
                                             double bin_width_ns, std::uint64_t seed) {
  if (!(rate_hz > 0.0)) {
    throw std::domain_error("interarrival_histogram: rate must be > 0");
  }
  if (!(duration_s > 0.0) || !(bin_width_ns > 0.0) || !(tau_ns >= 0.0)) {
    throw std::domain_error("interarrival_histogram: duration, bin width, tau must be positive");
  }

  std::mt19937_64 rng(seed);
  const auto uniform = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  const double rate_per_ns = rate_hz * 1e-9;
  const double duration_ns = duration_s * 1e9;
  std::vector<double> arrivals;
  arrivals.reserve(static_cast<std::size_t>(std::min(rate_hz * duration_s * 1.2 + 16.0, 1e8)));
  double t = 0.0;
  for (;;) {
    t += -std::log1p(-uniform()) / rate_per_ns;
    if (t >= duration_ns) break;
    arrivals.push_back(t);
  }

  const std::vector<double> kept = apply_deadtime(arrivals, tau_ns);

  InterarrivalHistogram hist;
  hist.bin_width_ns = bin_width_ns;
  hist.detections = kept.size();
  hist.low_statistics = kept.size() < 10000;

  static constexpr std::size_t kMaxBins = 1u << 20;
  for (std::size_t i = 1; i < kept.size(); ++i) {
    const double dt = kept[i] - kept[i - 1];
    std::size_t bin = static_cast<std::size_t>(dt / bin_width_ns);
    bin = std::min(bin, kMaxBins - 1);  // overflow clamps into the last bin
    if (hist.counts.size() <= bin) hist.counts.resize(bin + 1, 0);
    ++hist.counts[bin];
  }
  return hist;
}

}  // namespace bellsim
