#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bellsim/counts.hpp"
#include "bellsim/optics.hpp"

namespace bellsim {

/// Click record for one clock cycle: two detectors, two time bins.
struct ClickPattern {
  bool d1_early = false;
  bool d1_late = false;
  bool d2_early = false;
  bool d2_late = false;

  /// Packed index matching PatternDistribution's bit layout.
  int index() const {
    return (d1_early ? 1 : 0) | (d1_late ? 2 : 0) | (d2_early ? 4 : 0) | (d2_late ? 8 : 0);
  }
  static ClickPattern from_index(int idx);

  friend bool operator==(const ClickPattern&, const ClickPattern&) = default;
};

enum class BsmOutcome { PsiMinus, PsiPlus, NoProjection };

const char* outcome_name(BsmOutcome o);

/// Bell-state classification of a click pattern. PsiMinus requires exactly
/// two clicks on different detectors in different bins; PsiPlus exactly two
/// clicks on one detector in both bins. Everything else (0, 1, 3, 4 clicks,
/// or a same-bin coincidence) is NoProjection.
BsmOutcome classify(const ClickPattern& pattern);

/// Total probability mass a pattern distribution assigns to an outcome.
double outcome_probability(const PatternDistribution& dist, BsmOutcome outcome);

/// Maximum success probability of the linear-optics Bell measurement with
/// detector efficiencies eta1, eta2: eta1*eta2/2. Equal detectors give the
/// familiar 50% ceiling at unit efficiency.
double eq1_efficiency(double eta_det_1, double eta_det_2);

/// Efficiency averaged over the three preparation bases, (eta_z + 2*eta_x)/3.
/// The x and y bases are equivalent by symmetry, hence the weight of 2.
double basis_averaged_efficiency(double eta_z, double eta_x);

/// Laser frequency difference that keeps the relative phase error below
/// max_phase_error_deg over one bin separation t0: (deg/360)/t0.
double required_frequency_stability_hz(double t0_ns, double max_phase_error_deg);

/// Per-outcome tallies within one preparation basis.
struct OutcomeStats {
  std::uint64_t projections = 0;
  std::uint64_t erroneous = 0;
  /// erroneous / projections; absent when there are no projections.
  std::optional<double> error_rate;
  /// projections / cycles in this basis; 0 when there are no cycles.
  double efficiency = 0.0;
};

struct BasisReport {
  bool present = false;
  std::uint64_t cycles = 0;
  OutcomeStats psiminus;
  OutcomeStats psiplus;
  std::uint64_t total_projections = 0;
  double total_efficiency = 0.0;  // sum of the two outcome efficiencies
};

/// Tables of raw projection fractions and error rates per basis and outcome.
struct AnalysisReport {
  BasisReport z;
  BasisReport x;
  /// (eta_z + 2*eta_x)/3 over the total efficiencies; absent unless both
  /// bases carry cycles.
  std::optional<double> basis_averaged;
};

/// Tally projection fractions and error rates from accumulated counts.
/// Erroneous projections: in the z basis any projection on identical inputs;
/// in the x basis a psi- on identical inputs or a psi+ on orthogonal inputs.
AnalysisReport analyze_counts(const CountsTable& counts);

std::string render_text(const AnalysisReport& report);
std::string render_json(const AnalysisReport& report);

}  // namespace bellsim
