#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bellsim/counts.hpp"

namespace bellsim {

/// Which projections feed the decoy analysis.
enum class OutcomeFilter { PsiMinus, PsiPlus, Combined };

const char* outcome_filter_name(OutcomeFilter f);

/// Poisson photon-number probability P_n(a) = e^{-a} a^n / n!, with the
/// vacuum limit a = 0 handled exactly.
double poisson_pn(double a, int n);

/// Aggregated gain and error rate for one intensity pair.
struct GainCell {
  std::uint64_t cycles = 0;
  std::uint64_t projections = 0;
  std::uint64_t errors = 0;
  double q = 0.0;  // projections / cycles
  double e = 0.0;  // errors / projections (0 when no projections)
  bool has_data = false;
};

/// 3x3 grid of gains over source intensities {signal mu, decoy nu, vacuum},
/// aggregated over all same-basis state pairs.
struct GainsTable {
  Basis basis = Basis::Z;
  OutcomeFilter outcome = OutcomeFilter::Combined;
  double mu = 0.0;
  double nu = 0.0;
  std::array<GainCell, 9> cells{};

  /// ia, ib index the intensity of arm a and b: 0 = mu, 1 = nu, 2 = vacuum.
  GainCell& cell(int ia, int ib) { return cells[std::size_t(ia) * 3 + ib]; }
  const GainCell& cell(int ia, int ib) const { return cells[std::size_t(ia) * 3 + ib]; }
  double intensity(int idx) const { return idx == 0 ? mu : (idx == 1 ? nu : 0.0); }
};

struct DecoyOptions {
  /// Photon-number cutoff per arm in the LP; contributions beyond it are
  /// covered by a worst-case tail term, keeping the bounds one-sided safe.
  int photon_cutoff = 7;
  /// Width of the statistical slack on each measured gain, in units of the
  /// binomial standard error. Zero treats gains as exact.
  double sigmas = 1.0;

  void validate() const;
};

struct DecoyBounds {
  Basis basis = Basis::Z;
  OutcomeFilter outcome = OutcomeFilter::Combined;
  double mu = 0.0;
  double nu = 0.0;
  double y11_lower = 0.0;  // lower bound on the (1,1)-photon yield
  double e11_upper = 1.0;  // upper bound on the (1,1)-photon error rate
  double q11_lower = 0.0;  // P1(mu)^2 * y11_lower
  int iterations_yield = 0;
  int iterations_error = 0;
};

class incomplete_data_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The measured gains admit no photon-number yield model; carries one label
/// per violated constraint naming the intensity pair it came from.
class infeasible_error : public std::runtime_error {
 public:
  infeasible_error(const std::string& msg, std::vector<std::string> violated)
      : std::runtime_error(msg), violated_(std::move(violated)) {}
  const std::vector<std::string>& violated() const { return violated_; }

 private:
  std::vector<std::string> violated_;
};

/// Aggregate a counts table into the 3x3 intensity grid for one basis and
/// outcome filter. Requires exactly two distinct nonzero intensities plus
/// vacuum, and at least one cycle for every intensity pair.
GainsTable assemble_gains(const CountsTable& counts, Basis basis, OutcomeFilter outcome);

/// Lower bound on Y11 by linear programming over yields Y_nm in [0,1].
double lp_bound_yield(const GainsTable& gains, const DecoyOptions& opt, int* iterations = nullptr);

/// Upper bound on the single-photon error rate: maximizes the error-weighted
/// yield B11 = e11*Y11 over the joint yield/error variable set, then returns
/// min(B11 / y11_lower, 1). Requires y11_lower > 0.
double lp_bound_error(const GainsTable& gains, const DecoyOptions& opt, double y11_lower,
                      int* iterations = nullptr);

/// Full pipeline: assemble gains, bound Y11 from below and e11 from above.
DecoyBounds bound(const CountsTable& counts, Basis basis, OutcomeFilter outcome,
                  const DecoyOptions& opt = {});

/// Single-photon measurement efficiency implied by a single-photon gain:
/// Q11 = P1(mu)^2 t^2 eta, so eta = Q11 / (P1(mu)^2 t^2).
double efficiency_from_q11(double q11, double mu, double t);

}  // namespace bellsim
