#pragma once

#include <stdexcept>
#include <vector>

namespace bellsim::lp {

/// One two-sided linear constraint: lo <= coeffs . x <= hi. Either side may
/// be infinite, but not both.
struct Row {
  std::vector<double> coeffs;
  double lo = 0.0;
  double hi = 0.0;
};

/// Minimize objective . x subject to box bounds on every variable (finite on
/// both sides) and two-sided row constraints.
struct LinearProgram {
  int num_vars = 0;
  std::vector<double> objective;  // empty means all-zero (pure feasibility)
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<Row> rows;

  void validate() const;
};

enum class SolveStatus { Optimal, Infeasible };

struct Solution {
  SolveStatus status = SolveStatus::Optimal;
  double objective = 0.0;
  std::vector<double> x;
  /// When infeasible: indices of rows still violated at the point of minimum
  /// total constraint violation, a concrete certificate of which data the
  /// model cannot reconcile.
  std::vector<int> infeasible_rows;
  int iterations = 0;
};

/// Thrown when pivoting degenerates (singular basis, no blocking step where
/// one must exist, or an iteration budget that only cycling could exhaust).
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deterministic bounded-variable two-phase simplex (Bland's rule, explicit
/// basis inverse with periodic refactorization).
Solution solve(const LinearProgram& lp);

}  // namespace bellsim::lp
