#include "bellsim/decoy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "bellsim/simplex.hpp"

namespace bellsim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const char* intensity_label(int idx) { return idx == 0 ? "signal" : (idx == 1 ? "decoy" : "vacuum"); }

std::string cell_label(int ia, int ib) {
  return std::string(intensity_label(ia)) + "/" + intensity_label(ib);
}

/// Binomial standard error of an observed fraction, with a 2/cycles floor so
/// low-count cells keep a nonzero statistical allowance. The Gaussian error
/// model undershoots Poisson tails when almost no events land in a cell (a
/// rate of 2/n still yields zero counts 13% of the time), and an extraction
/// window that cannot cover its own counting noise reports spurious
/// inconsistency.
double gain_slack(double q, std::uint64_t cycles, double sigmas) {
  if (sigmas == 0.0 || cycles == 0) return 0.0;
  const double n = double(cycles);
  const double se = std::sqrt(std::max(q * (1.0 - q), 0.0) / n);
  return sigmas * std::max(se, 2.0 / n);
}

}  // namespace

const char* outcome_filter_name(OutcomeFilter f) {
  switch (f) {
    case OutcomeFilter::PsiMinus: return "psi-";
    case OutcomeFilter::PsiPlus: return "psi+";
    case OutcomeFilter::Combined: return "combined";
  }
  throw std::logic_error("unreachable");
}

double poisson_pn(double a, int n) {
  if (a < 0.0) throw std::domain_error("mean photon number must be nonnegative");
  if (n < 0) throw std::domain_error("photon number must be nonnegative");
  if (a == 0.0) return n == 0 ? 1.0 : 0.0;
  return std::exp(-a + n * std::log(a) - std::lgamma(double(n) + 1.0));
}

void DecoyOptions::validate() const {
  if (photon_cutoff < 1 || photon_cutoff > 20) {
    throw std::invalid_argument("photon cutoff must be in [1, 20]");
  }
  if (!(sigmas >= 0.0)) throw std::invalid_argument("sigmas must be nonnegative");
}

GainsTable assemble_gains(const CountsTable& counts, Basis basis, OutcomeFilter outcome) {
  std::set<double> intensities;
  for (const auto& [key, kc] : counts.rows) {
    if (key.basis != basis) continue;
    intensities.insert(key.mu_a);
    intensities.insert(key.mu_b);
  }
  if (intensities.empty()) {
    throw incomplete_data_error(std::string("no ") + basis_name(basis) + "-basis rows in counts");
  }
  if (intensities.size() != 3 || *intensities.begin() != 0.0) {
    throw incomplete_data_error(
        "decoy analysis needs exactly two nonzero intensities plus vacuum; found " +
        std::to_string(intensities.size()) + " distinct value(s)");
  }

  GainsTable gains;
  gains.basis = basis;
  gains.outcome = outcome;
  auto it = intensities.rbegin();
  gains.mu = *it++;
  gains.nu = *it;

  auto intensity_index = [&](double v) { return v == gains.mu ? 0 : (v == gains.nu ? 1 : 2); };

  for (const auto& [key, kc] : counts.rows) {
    if (key.basis != basis) continue;
    GainCell& cell = gains.cell(intensity_index(key.mu_a), intensity_index(key.mu_b));
    cell.cycles += kc.n_cycles;
    const bool identical = key.bit_a == key.bit_b;
    std::uint64_t proj = 0, errs = 0;
    if (outcome != OutcomeFilter::PsiPlus) {
      proj += kc.n_psiminus;
      if (identical) errs += kc.n_psiminus;  // psi- is erroneous on identical inputs in both bases
    }
    if (outcome != OutcomeFilter::PsiMinus) {
      proj += kc.n_psiplus;
      const bool plus_erroneous = basis == Basis::Z ? identical : !identical;
      if (plus_erroneous) errs += kc.n_psiplus;
    }
    cell.projections += proj;
    cell.errors += errs;
  }

  for (int ia = 0; ia < 3; ++ia) {
    for (int ib = 0; ib < 3; ++ib) {
      GainCell& cell = gains.cell(ia, ib);
      if (cell.cycles == 0) {
        throw incomplete_data_error("no cycles recorded for intensity pair " +
                                    cell_label(ia, ib));
      }
      cell.q = double(cell.projections) / double(cell.cycles);
      cell.e = cell.projections > 0 ? double(cell.errors) / double(cell.projections) : 0.0;
      cell.has_data = true;
    }
  }
  return gains;
}

namespace {

/// Photon-number pairs whose largest gain coefficient falls below this are
/// not modeled explicitly; their contribution moves into the truncation tail
/// (adding at most cutoff^2 * threshold to the allowance) instead of
/// producing numerically void LP columns.
constexpr double kKeepThreshold = 1e-10;

struct DecoyProgram {
  lp::LinearProgram prog;
  std::vector<std::string> labels;
  std::vector<std::pair<int, int>> kept;  // modeled (n,m) pairs, index = variable
  int y11 = -1;                           // variable index of Y_11
  int b11 = -1;                           // variable index of B_11 (error block)
};

/// Shared constraint construction. Variables are the modeled yields Y_nm;
/// with_errors appends a mirrored block of error-weighted yields B_nm plus
/// the coupling B_nm <= Y_nm.
///
/// Each measured gain pins one two-sided row. Yields outside the modeled set
/// are unknown but confined to [0,1], so their contribution to a gain lies
/// in [0, tail] with tail = 1 - sum of modeled Poisson weights; widening the
/// lower side by the tail keeps the bound conservative regardless of
/// truncation.
DecoyProgram build_program(const GainsTable& gains, const DecoyOptions& opt, bool with_errors) {
  const int width = opt.photon_cutoff + 1;

  std::array<std::vector<double>, 3> pn;
  for (int idx = 0; idx < 3; ++idx) {
    pn[std::size_t(idx)].resize(std::size_t(width));
    for (int n = 0; n < width; ++n) {
      pn[std::size_t(idx)][std::size_t(n)] = poisson_pn(gains.intensity(idx), n);
    }
  }
  // Largest per-arm weight over the three intensities (vacuum dominates n=0).
  auto arm_max = [&](int n) {
    return std::max({pn[0][std::size_t(n)], pn[1][std::size_t(n)], pn[2][std::size_t(n)]});
  };

  DecoyProgram out;
  for (int n = 0; n < width; ++n) {
    for (int m = 0; m < width; ++m) {
      const bool anchor = n <= 1 && m <= 1;  // always model up to one photon per arm
      if (anchor || arm_max(n) * arm_max(m) >= kKeepThreshold) {
        if (n == 1 && m == 1) out.y11 = int(out.kept.size());
        out.kept.emplace_back(n, m);
      }
    }
  }
  const int yields = int(out.kept.size());
  if (with_errors) out.b11 = yields + out.y11;

  lp::LinearProgram& prog = out.prog;
  prog.num_vars = with_errors ? 2 * yields : yields;
  prog.lower.assign(std::size_t(prog.num_vars), 0.0);
  prog.upper.assign(std::size_t(prog.num_vars), 1.0);

  for (int ia = 0; ia < 3; ++ia) {
    for (int ib = 0; ib < 3; ++ib) {
      const GainCell& cell = gains.cell(ia, ib);
      std::vector<double> weights(std::size_t(yields), 0.0);
      double modeled_mass = 0.0;
      for (int v = 0; v < yields; ++v) {
        const auto [n, m] = out.kept[std::size_t(v)];
        weights[std::size_t(v)] =
            pn[std::size_t(ia)][std::size_t(n)] * pn[std::size_t(ib)][std::size_t(m)];
        modeled_mass += weights[std::size_t(v)];
      }
      const double tail = std::max(1.0 - modeled_mass, 0.0);

      lp::Row row;
      row.coeffs.assign(std::size_t(prog.num_vars), 0.0);
      for (int v = 0; v < yields; ++v) row.coeffs[std::size_t(v)] = weights[std::size_t(v)];
      const double u = gain_slack(cell.q, cell.cycles, opt.sigmas);
      row.lo = cell.q - u - tail;
      row.hi = cell.q + u;
      prog.rows.push_back(row);
      out.labels.push_back("gain " + cell_label(ia, ib));

      if (with_errors) {
        const double eq = double(cell.errors) / double(cell.cycles);
        lp::Row erow;
        erow.coeffs.assign(std::size_t(prog.num_vars), 0.0);
        for (int v = 0; v < yields; ++v) {
          erow.coeffs[std::size_t(yields + v)] = weights[std::size_t(v)];
        }
        const double ue = gain_slack(eq, cell.cycles, opt.sigmas);
        erow.lo = eq - ue - tail;
        erow.hi = eq + ue;
        prog.rows.push_back(erow);
        out.labels.push_back("error gain " + cell_label(ia, ib));
      }
    }
  }

  if (with_errors) {
    for (int v = 0; v < yields; ++v) {
      lp::Row couple;
      couple.coeffs.assign(std::size_t(prog.num_vars), 0.0);
      couple.coeffs[std::size_t(v)] = -1.0;
      couple.coeffs[std::size_t(yields + v)] = 1.0;
      couple.lo = -kInf;
      couple.hi = 0.0;
      prog.rows.push_back(couple);
      const auto [n, m] = out.kept[std::size_t(v)];
      out.labels.push_back("coupling B(" + std::to_string(n) + "," + std::to_string(m) +
                           ") <= Y");
    }
  }
  return out;
}

double run_lp(lp::LinearProgram& prog, const std::vector<std::string>& labels, bool maximize,
              int objective_var, int* iterations) {
  prog.objective.assign(std::size_t(prog.num_vars), 0.0);
  prog.objective[std::size_t(objective_var)] = maximize ? -1.0 : 1.0;
  const lp::Solution sol = lp::solve(prog);
  if (iterations) *iterations = sol.iterations;
  if (sol.status == lp::SolveStatus::Infeasible) {
    std::vector<std::string> violated;
    for (int r : sol.infeasible_rows) violated.push_back(labels[std::size_t(r)]);
    std::string msg = "measured gains admit no photon-number model; violated:";
    for (const auto& v : violated) msg += " [" + v + "]";
    throw infeasible_error(msg, std::move(violated));
  }
  return maximize ? -sol.objective : sol.objective;
}

}  // namespace

double lp_bound_yield(const GainsTable& gains, const DecoyOptions& opt, int* iterations) {
  opt.validate();
  DecoyProgram dp = build_program(gains, opt, /*with_errors=*/false);
  const double y11 = run_lp(dp.prog, dp.labels, /*maximize=*/false, dp.y11, iterations);
  return std::clamp(y11, 0.0, 1.0);
}

double lp_bound_error(const GainsTable& gains, const DecoyOptions& opt, double y11_lower,
                      int* iterations) {
  opt.validate();
  if (!(y11_lower > 0.0)) throw std::domain_error("yield lower bound must be positive");
  DecoyProgram dp = build_program(gains, opt, /*with_errors=*/true);
  const double b11 = run_lp(dp.prog, dp.labels, /*maximize=*/true, dp.b11, iterations);
  return std::clamp(b11 / y11_lower, 0.0, 1.0);
}

DecoyBounds bound(const CountsTable& counts, Basis basis, OutcomeFilter outcome,
                  const DecoyOptions& opt) {
  opt.validate();
  const GainsTable gains = assemble_gains(counts, basis, outcome);

  DecoyBounds bounds;
  bounds.basis = basis;
  bounds.outcome = outcome;
  bounds.mu = gains.mu;
  bounds.nu = gains.nu;
  bounds.y11_lower = lp_bound_yield(gains, opt, &bounds.iterations_yield);
  const double p1 = poisson_pn(gains.mu, 1);
  bounds.q11_lower = p1 * p1 * bounds.y11_lower;

  if (bounds.y11_lower > 0.0) {
    bounds.e11_upper = lp_bound_error(gains, opt, bounds.y11_lower, &bounds.iterations_error);
  } else {
    bounds.e11_upper = 1.0;  // yield bound carries no information
  }
  return bounds;
}

double efficiency_from_q11(double q11, double mu, double t) {
  if (q11 < 0.0) throw std::domain_error("gain must be nonnegative");
  if (mu <= 0.0) throw std::domain_error("signal intensity must be positive");
  if (t <= 0.0 || t > 1.0) throw std::domain_error("transmission must be in (0,1]");
  const double p1 = poisson_pn(mu, 1);
  return q11 / (p1 * p1 * t * t);
}

}  // namespace bellsim
