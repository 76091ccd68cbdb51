#include "bellsim/bsm.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace bellsim {

ClickPattern ClickPattern::from_index(int idx) {
  if (idx < 0 || idx > 15) throw std::out_of_range("pattern index must be in [0,15]");
  ClickPattern p;
  p.d1_early = (idx & 1) != 0;
  p.d1_late = (idx & 2) != 0;
  p.d2_early = (idx & 4) != 0;
  p.d2_late = (idx & 8) != 0;
  return p;
}

const char* outcome_name(BsmOutcome o) {
  switch (o) {
    case BsmOutcome::PsiMinus: return "psi-";
    case BsmOutcome::PsiPlus: return "psi+";
    case BsmOutcome::NoProjection: return "none";
  }
  throw std::logic_error("unreachable");
}

BsmOutcome classify(const ClickPattern& p) {
  const int clicks = int(p.d1_early) + int(p.d1_late) + int(p.d2_early) + int(p.d2_late);
  if (clicks != 2) return BsmOutcome::NoProjection;
  if ((p.d1_early && p.d2_late) || (p.d1_late && p.d2_early)) return BsmOutcome::PsiMinus;
  if ((p.d1_early && p.d1_late) || (p.d2_early && p.d2_late)) return BsmOutcome::PsiPlus;
  return BsmOutcome::NoProjection;  // same-bin coincidence
}

double outcome_probability(const PatternDistribution& dist, BsmOutcome outcome) {
  double total = 0.0;
  for (int idx = 0; idx < 16; ++idx) {
    if (classify(ClickPattern::from_index(idx)) == outcome) total += dist[idx];
  }
  return total;
}

double eq1_efficiency(double eta_det_1, double eta_det_2) {
  if (eta_det_1 < 0.0 || eta_det_1 > 1.0 || eta_det_2 < 0.0 || eta_det_2 > 1.0) {
    throw std::domain_error("detector efficiency must be in [0,1]");
  }
  return 0.5 * eta_det_1 * eta_det_2;
}

double basis_averaged_efficiency(double eta_z, double eta_x) {
  if (eta_z < 0.0 || eta_z > 1.0 || eta_x < 0.0 || eta_x > 1.0) {
    throw std::domain_error("efficiency must be in [0,1]");
  }
  return (eta_z + 2.0 * eta_x) / 3.0;
}

double required_frequency_stability_hz(double t0_ns, double max_phase_error_deg) {
  if (t0_ns <= 0.0) throw std::domain_error("bin separation must be positive");
  if (max_phase_error_deg < 0.0) throw std::domain_error("phase error must be nonnegative");
  return (max_phase_error_deg / 360.0) / (t0_ns * 1e-9);
}

namespace {

void finalize(OutcomeStats& s, std::uint64_t cycles) {
  if (s.projections > 0) {
    s.error_rate = double(s.erroneous) / double(s.projections);
  }
  s.efficiency = cycles > 0 ? double(s.projections) / double(cycles) : 0.0;
}

void finalize(BasisReport& b) {
  finalize(b.psiminus, b.cycles);
  finalize(b.psiplus, b.cycles);
  b.total_projections = b.psiminus.projections + b.psiplus.projections;
  b.total_efficiency = b.psiminus.efficiency + b.psiplus.efficiency;
  b.present = b.cycles > 0;
}

}  // namespace

AnalysisReport analyze_counts(const CountsTable& counts) {
  AnalysisReport report;
  for (const auto& [key, kc] : counts.rows) {
    BasisReport& br = key.basis == Basis::Z ? report.z : report.x;
    br.cycles += kc.n_cycles;
    br.psiminus.projections += kc.n_psiminus;
    br.psiplus.projections += kc.n_psiplus;
    const bool identical = key.bit_a == key.bit_b;
    if (key.basis == Basis::Z) {
      if (identical) {
        br.psiminus.erroneous += kc.n_psiminus;
        br.psiplus.erroneous += kc.n_psiplus;
      }
    } else {
      if (identical) {
        br.psiminus.erroneous += kc.n_psiminus;
      } else {
        br.psiplus.erroneous += kc.n_psiplus;
      }
    }
  }
  finalize(report.z);
  finalize(report.x);
  if (report.z.present && report.x.present) {
    report.basis_averaged =
        basis_averaged_efficiency(std::min(report.z.total_efficiency, 1.0),
                                  std::min(report.x.total_efficiency, 1.0));
  }
  return report;
}

namespace {

std::string format_rate(const std::optional<double>& rate) {
  if (!rate) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(4) << *rate;
  return os.str();
}

std::string format_eff(double eff) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(4) << eff;
  return os.str();
}

void render_basis_text(std::ostringstream& os, const char* name, const BasisReport& b) {
  os << name << " basis";
  if (!b.present) {
    os << ": no cycles\n";
    return;
  }
  os << " (" << b.cycles << " cycles)\n";
  const OutcomeStats* stats[2] = {&b.psiminus, &b.psiplus};
  const char* labels[2] = {"psi-", "psi+"};
  for (int i = 0; i < 2; ++i) {
    os << "  " << labels[i] << "  projections " << std::setw(12) << stats[i]->projections
       << "  fraction " << format_eff(stats[i]->efficiency)
       << "  error rate " << format_rate(stats[i]->error_rate) << '\n';
  }
  os << "  total projections " << b.total_projections << "  fraction "
     << format_eff(b.total_efficiency) << '\n';
}

}  // namespace

std::string render_text(const AnalysisReport& report) {
  std::ostringstream os;
  render_basis_text(os, "z", report.z);
  render_basis_text(os, "x", report.x);
  if (report.basis_averaged) {
    os << "basis-averaged projection fraction (z + 2x)/3: " << format_eff(*report.basis_averaged)
       << '\n';
  }
  return os.str();
}

namespace {

nlohmann::json outcome_json(const OutcomeStats& s) {
  nlohmann::json j = {
      {"projections", s.projections},
      {"erroneous", s.erroneous},
      {"fraction", s.efficiency},
  };
  if (s.error_rate) {
    j["error_rate"] = *s.error_rate;
  } else {
    j["error_rate"] = nullptr;
  }
  return j;
}

nlohmann::json basis_json(const BasisReport& b) {
  return nlohmann::json{
      {"present", b.present},
      {"cycles", b.cycles},
      {"psi_minus", outcome_json(b.psiminus)},
      {"psi_plus", outcome_json(b.psiplus)},
      {"total_projections", b.total_projections},
      {"total_fraction", b.total_efficiency},
  };
}

}  // namespace

std::string render_json(const AnalysisReport& report) {
  nlohmann::json j = {
      {"z", basis_json(report.z)},
      {"x", basis_json(report.x)},
  };
  if (report.basis_averaged) {
    j["basis_averaged_fraction"] = *report.basis_averaged;
  } else {
    j["basis_averaged_fraction"] = nullptr;
  }
  return j.dump(2) + "\n";
}

}  // namespace bellsim
