#include "bellsim/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bellsim::lp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-11;

bool finite(double v) { return std::isfinite(v); }

}  // namespace

void LinearProgram::validate() const {
  if (num_vars < 0) throw std::invalid_argument("negative variable count");
  const auto nv = std::size_t(num_vars);
  if (!objective.empty() && objective.size() != nv) {
    throw std::invalid_argument("objective size does not match variable count");
  }
  for (double c : objective) {
    if (!finite(c)) throw std::invalid_argument("objective coefficients must be finite");
  }
  if (lower.size() != nv || upper.size() != nv) {
    throw std::invalid_argument("bound vectors must match variable count");
  }
  for (std::size_t j = 0; j < nv; ++j) {
    if (!finite(lower[j]) || !finite(upper[j])) {
      throw std::invalid_argument("variable bounds must be finite");
    }
    if (lower[j] > upper[j]) throw std::invalid_argument("variable lower bound exceeds upper");
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& row = rows[i];
    if (row.coeffs.size() != nv) {
      throw std::invalid_argument("row " + std::to_string(i) + " has wrong coefficient count");
    }
    for (double a : row.coeffs) {
      if (!finite(a)) throw std::invalid_argument("row coefficients must be finite");
    }
    if (std::isnan(row.lo) || std::isnan(row.hi)) {
      throw std::invalid_argument("row bounds must not be NaN");
    }
    if (row.lo > row.hi) {
      throw std::invalid_argument("row " + std::to_string(i) + " has lo > hi");
    }
    if (row.lo == -kInf && row.hi == kInf) {
      throw std::invalid_argument("row " + std::to_string(i) + " is unbounded on both sides");
    }
  }
}

namespace {

enum class VarState : char { Basic, AtLower, AtUpper };

/// Bounded-variable revised simplex over the equality system  A x - s = 0
/// with slacks s carrying the row bounds. Variables 0..n-1 are structural,
/// n..n+m-1 the slacks. The basis inverse is kept explicitly and rebuilt
/// from scratch after every pivot: at these problem sizes a fresh inversion
/// is cheap, and pricing on an exact inverse is what keeps degenerate decoy
/// programs (slack windows near 1e-10) from drifting into false
/// infeasibility verdicts.
class Solver {
 public:
  explicit Solver(const LinearProgram& lp)
      : n_(lp.num_vars), m_(int(lp.rows.size())), total_(n_ + m_) {
    // Row scaling; equilibrates constraint magnitudes (gains near 1e-4 vs
    // coefficients near 1) without changing the solution.
    scale_.assign(std::size_t(m_), 1.0);
    for (int i = 0; i < m_; ++i) {
      double biggest = 0.0;
      for (double a : lp.rows[std::size_t(i)].coeffs) biggest = std::max(biggest, std::abs(a));
      if (biggest > 0.0) scale_[std::size_t(i)] = 1.0 / biggest;
    }

    cols_.assign(std::size_t(total_) * m_, 0.0);
    for (int j = 0; j < n_; ++j) {
      for (int i = 0; i < m_; ++i) {
        col(j)[i] = lp.rows[std::size_t(i)].coeffs[std::size_t(j)] * scale_[std::size_t(i)];
      }
    }
    for (int i = 0; i < m_; ++i) col(n_ + i)[i] = -1.0;

    // Column scaling: substitute x_j = s_j x'_j so that every structural
    // column has unit max norm. Mixed columns spanning many decades (decoy
    // programs pair O(1) and O(1e-10) Poisson weights) would otherwise admit
    // arbitrarily ill-conditioned bases.
    col_scale_.assign(std::size_t(n_), 1.0);
    for (int j = 0; j < n_; ++j) {
      double biggest = 0.0;
      for (int i = 0; i < m_; ++i) biggest = std::max(biggest, std::abs(col(j)[i]));
      if (biggest > 0.0) {
        col_scale_[std::size_t(j)] = 1.0 / biggest;
        for (int i = 0; i < m_; ++i) col(j)[i] *= col_scale_[std::size_t(j)];
      }
    }

    lo_.resize(std::size_t(total_));
    hi_.resize(std::size_t(total_));
    for (int j = 0; j < n_; ++j) {
      lo_[std::size_t(j)] = lp.lower[std::size_t(j)] / col_scale_[std::size_t(j)];
      hi_[std::size_t(j)] = lp.upper[std::size_t(j)] / col_scale_[std::size_t(j)];
    }
    for (int i = 0; i < m_; ++i) {
      double rlo = lp.rows[std::size_t(i)].lo * scale_[std::size_t(i)];
      double rhi = lp.rows[std::size_t(i)].hi * scale_[std::size_t(i)];
      // Feasibility is only ever decided to within kFeasTol, so a window
      // narrower than that is below the solver's resolution; keeping it
      // exact buys no sharper verdict and forces the ratio test through
      // razor-thin degenerate corners. Flooring the width to the tolerance
      // accepts exactly the points a tolerance-respecting solver would
      // accept anyway.
      if (finite(rlo) && finite(rhi) && rhi - rlo < 2.0 * kFeasTol) {
        const double mid = 0.5 * (rlo + rhi);
        rlo = mid - kFeasTol;
        rhi = mid + kFeasTol;
      }
      lo_[std::size_t(n_ + i)] = rlo;
      hi_[std::size_t(n_ + i)] = rhi;
    }

    cost_.assign(std::size_t(total_), 0.0);
    if (!lp.objective.empty()) {
      for (int j = 0; j < n_; ++j) {
        cost_[std::size_t(j)] = lp.objective[std::size_t(j)] * col_scale_[std::size_t(j)];
      }
    }

    // Initial basis: all slacks basic (B = -I), structurals at lower bound.
    state_.assign(std::size_t(total_), VarState::AtLower);
    basic_.resize(std::size_t(m_));
    basic_pos_.assign(std::size_t(total_), -1);
    for (int i = 0; i < m_; ++i) {
      basic_[std::size_t(i)] = n_ + i;
      basic_pos_[std::size_t(n_ + i)] = i;
      state_[std::size_t(n_ + i)] = VarState::Basic;
    }
    x_.assign(std::size_t(total_), 0.0);
    for (int j = 0; j < n_; ++j) x_[std::size_t(j)] = lo_[std::size_t(j)];
    binv_.assign(std::size_t(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) binv(i)[i] = -1.0;
  }

  Solution run() {
    Solution sol;
    // Interval propagation first: programs built from inconsistent data with
    // zero-width windows force the simplex through extremely degenerate
    // corners, while their infeasibility usually follows from the variable
    // boxes alone in a few tightening sweeps.
    const int bad_row = propagate_infeasible();
    if (bad_row >= 0) {
      sol.status = SolveStatus::Infeasible;
      sol.iterations = 0;
      sol.infeasible_rows.push_back(bad_row);
      return sol;
    }
    if (!optimize(/*phase1=*/true)) {
      sol.status = SolveStatus::Infeasible;
      sol.iterations = iterations_;
      for (int i = 0; i < m_; ++i) {
        const double v = slack_value(i);
        if (v < lo_[std::size_t(n_ + i)] - kFeasTol ||
            v > hi_[std::size_t(n_ + i)] + kFeasTol) {
          sol.infeasible_rows.push_back(i);
        }
      }
      if (sol.infeasible_rows.empty()) {
        throw numerical_error("infeasible program without violated rows");
      }
      return sol;
    }
    optimize(/*phase1=*/false);
    sol.status = SolveStatus::Optimal;
    sol.iterations = iterations_;
    sol.x.resize(std::size_t(n_));
    double obj = 0.0;
    for (int j = 0; j < n_; ++j) {
      const double v = std::clamp(x_[std::size_t(j)], lo_[std::size_t(j)], hi_[std::size_t(j)]);
      sol.x[std::size_t(j)] = v * col_scale_[std::size_t(j)];
      obj += cost_[std::size_t(j)] * v;
    }
    sol.objective = obj;
    return sol;
  }

 private:
  double* col(int j) { return cols_.data() + std::size_t(j) * m_; }
  double* binv(int i) { return binv_.data() + std::size_t(i) * m_; }

  /// Current value of row i's slack (kept current by compute_basics for
  /// basic slacks, pinned to a bound otherwise).
  double slack_value(int i) { return x_[std::size_t(n_ + i)]; }

  void refactorize() {
    // Gauss-Jordan inversion of the basis matrix with partial pivoting.
    std::vector<double> work(std::size_t(m_) * m_, 0.0);
    for (int p = 0; p < m_; ++p) {
      const double* c = col(basic_[std::size_t(p)]);
      for (int i = 0; i < m_; ++i) work[std::size_t(i) * m_ + p] = c[i];
    }
    std::vector<double> inv(std::size_t(m_) * m_, 0.0);
    for (int i = 0; i < m_; ++i) inv[std::size_t(i) * m_ + i] = 1.0;

    for (int c = 0; c < m_; ++c) {
      int piv = c;
      double best = std::abs(work[std::size_t(c) * m_ + c]);
      for (int r = c + 1; r < m_; ++r) {
        const double cand = std::abs(work[std::size_t(r) * m_ + c]);
        if (cand > best) {
          best = cand;
          piv = r;
        }
      }
      if (best < 1e-13) throw numerical_error("singular basis during refactorization");
      if (piv != c) {
        for (int k = 0; k < m_; ++k) {
          std::swap(work[std::size_t(piv) * m_ + k], work[std::size_t(c) * m_ + k]);
          std::swap(inv[std::size_t(piv) * m_ + k], inv[std::size_t(c) * m_ + k]);
        }
      }
      const double d = work[std::size_t(c) * m_ + c];
      for (int k = 0; k < m_; ++k) {
        work[std::size_t(c) * m_ + k] /= d;
        inv[std::size_t(c) * m_ + k] /= d;
      }
      for (int r = 0; r < m_; ++r) {
        if (r == c) continue;
        const double f = work[std::size_t(r) * m_ + c];
        if (f == 0.0) continue;
        for (int k = 0; k < m_; ++k) {
          work[std::size_t(r) * m_ + k] -= f * work[std::size_t(c) * m_ + k];
          inv[std::size_t(r) * m_ + k] -= f * inv[std::size_t(c) * m_ + k];
        }
      }
    }
    binv_ = std::move(inv);
    basis_dirty_ = false;
  }

  /// Interval constraint propagation over the scaled system. Repeatedly
  /// intersects every variable box with the range implied by each row window
  /// and the other boxes. Tightening only ever removes points that no
  /// feasible solution can use, and emptiness is declared only past a margin
  /// far above both the solver feasibility tolerance and the rounding of the
  /// interval sums, so a nonnegative return is a sound certificate of
  /// infeasibility (the returned row is the one whose window could not be
  /// met). Returns -1 when no conflict is found.
  int propagate_infeasible() {
    constexpr double kMargin = 1e-7;   // declared conflicts must exceed this
    constexpr double kPropPivot = 1e-6;  // do not divide by smaller coeffs
    std::vector<double> wlo(lo_.begin(), lo_.begin() + n_);
    std::vector<double> whi(hi_.begin(), hi_.begin() + n_);
    for (int sweep = 0; sweep < 30; ++sweep) {
      bool changed = false;
      for (int i = 0; i < m_; ++i) {
        const double rlo = lo_[std::size_t(n_ + i)];
        const double rhi = hi_[std::size_t(n_ + i)];
        double smin = 0.0;
        double smax = 0.0;
        for (int j = 0; j < n_; ++j) {
          const double a = col(j)[i];
          if (a == 0.0) continue;
          const double p = a * wlo[std::size_t(j)];
          const double q = a * whi[std::size_t(j)];
          smin += std::min(p, q);
          smax += std::max(p, q);
        }
        if (smin > rhi + kMargin || smax < rlo - kMargin) return i;
        for (int j = 0; j < n_; ++j) {
          const double a = col(j)[i];
          if (std::abs(a) < kPropPivot) continue;
          const double p = a * wlo[std::size_t(j)];
          const double q = a * whi[std::size_t(j)];
          const double rest_min = smin - std::min(p, q);
          const double rest_max = smax - std::max(p, q);
          // a * x_j must fit in [rlo - rest_max, rhi - rest_min].
          double tlo = (rlo - rest_max) / a;
          double thi = (rhi - rest_min) / a;
          if (a < 0.0) std::swap(tlo, thi);
          tlo -= kMargin;
          thi += kMargin;
          if (tlo > whi[std::size_t(j)] || thi < wlo[std::size_t(j)]) return i;
          if (finite(tlo) && tlo > wlo[std::size_t(j)] + kMargin) {
            wlo[std::size_t(j)] = tlo;
            changed = true;
          }
          if (finite(thi) && thi < whi[std::size_t(j)] - kMargin) {
            whi[std::size_t(j)] = thi;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    return -1;
  }

  /// Recompute all basic variable values from the nonbasic bounds. With the
  /// zero right-hand side, x_B = -B^{-1} A_N x_N.
  void compute_basics() {
    std::vector<double> rhs(std::size_t(m_), 0.0);
    for (int j = 0; j < total_; ++j) {
      if (state_[std::size_t(j)] == VarState::Basic) continue;
      const double v = x_[std::size_t(j)];
      if (v == 0.0) continue;
      const double* cj = col(j);
      for (int i = 0; i < m_; ++i) rhs[std::size_t(i)] -= cj[i] * v;
    }
    for (int i = 0; i < m_; ++i) {
      double v = 0.0;
      const double* bi = binv(i);
      for (int k = 0; k < m_; ++k) v += bi[k] * rhs[std::size_t(k)];
      x_[std::size_t(basic_[std::size_t(i)])] = v;
    }
  }

  /// One simplex phase. Returns true when phase 1 reaches zero infeasibility
  /// (always true for phase 2, which ends at optimality).
  bool optimize(bool phase1) {
    const int iter_budget = 2000 + 200 * total_;
    int iters_this_phase = 0;
    // Merit-based stall detection: when the phase objective (total violation
    // in phase 1, cost in phase 2) stops improving for a while, switch to
    // Bland's rule for the remainder of the phase. Step-length heuristics
    // fail here because sub-tolerance slack windows allow endless 1e-10
    // steps that look like progress.
    stalled_ = false;
    double best_merit = kInf;
    int last_progress = 0;

    while (true) {
      if (++iters_this_phase > iter_budget) {
        throw numerical_error("simplex iteration budget exhausted");
      }
      if (basis_dirty_) refactorize();
      compute_basics();

      // Phase-1 costs live on infeasible basics: +1 above the upper bound,
      // -1 below the lower bound. Phase 2 uses the user objective.
      std::vector<double> d(std::size_t(m_), 0.0);
      double merit = 0.0;
      bool any_infeasible = false;
      if (phase1) {
        for (int i = 0; i < m_; ++i) {
          const int bj = basic_[std::size_t(i)];
          const double v = x_[std::size_t(bj)];
          if (v < lo_[std::size_t(bj)] - kFeasTol) {
            d[std::size_t(i)] = -1.0;
            merit += lo_[std::size_t(bj)] - v;
            any_infeasible = true;
          } else if (v > hi_[std::size_t(bj)] + kFeasTol) {
            d[std::size_t(i)] = 1.0;
            merit += v - hi_[std::size_t(bj)];
            any_infeasible = true;
          }
        }
        if (!any_infeasible) return true;
      } else {
        for (int i = 0; i < m_; ++i) {
          d[std::size_t(i)] = cost_[std::size_t(basic_[std::size_t(i)])];
        }
        for (int j = 0; j < total_; ++j) merit += cost_[std::size_t(j)] * x_[std::size_t(j)];
      }
      if (merit < best_merit - 1e-12 - 1e-9 * std::abs(best_merit)) {
        best_merit = merit;
        last_progress = iters_this_phase;
      } else if (!stalled_ && iters_this_phase - last_progress > 100 + m_) {
        stalled_ = true;
      }

      // y = d^T B^{-1}
      std::vector<double> y(std::size_t(m_), 0.0);
      for (int i = 0; i < m_; ++i) {
        const double di = d[std::size_t(i)];
        if (di == 0.0) continue;
        const double* bi = binv(i);
        for (int k = 0; k < m_; ++k) y[std::size_t(k)] += di * bi[k];
      }

      // Bland's rule: first improvable nonbasic by variable index.
      int entering = -1;
      double dir = 0.0;
      for (int j = 0; j < total_; ++j) {
        const VarState st = state_[std::size_t(j)];
        if (st == VarState::Basic) continue;
        if (lo_[std::size_t(j)] == hi_[std::size_t(j)]) continue;  // fixed, cannot move
        const double* cj = col(j);
        double yaj = 0.0;
        for (int i = 0; i < m_; ++i) yaj += y[std::size_t(i)] * cj[i];
        const double reduced = (phase1 ? 0.0 : cost_[std::size_t(j)]) - yaj;
        if (st == VarState::AtLower && reduced < -kCostTol) {
          entering = j;
          dir = 1.0;
          break;
        }
        if (st == VarState::AtUpper && reduced > kCostTol) {
          entering = j;
          dir = -1.0;
          break;
        }
      }
      if (entering < 0) {
        // No improving direction: phase-1 optimum with leftover infeasibility
        // means the program is infeasible; phase-2 optimum is the answer.
        return !phase1;
      }

      // w = B^{-1} A_entering; basics move by -dir * w per unit step.
      std::vector<double> w(std::size_t(m_), 0.0);
      {
        const double* ce = col(entering);
        for (int i = 0; i < m_; ++i) {
          double v = 0.0;
          const double* bi = binv(i);
          for (int k = 0; k < m_; ++k) v += bi[k] * ce[k];
          w[std::size_t(i)] = v;
        }
      }

      // Two-pass ratio test. Feasible basics block at the bound they
      // approach; in phase 1 an infeasible basic blocks where it regains
      // feasibility and never blocks while moving further out (that
      // worsening is already priced into the reduced cost). Pass 1 finds the
      // largest step compatible with every blocker overshooting its bound by
      // at most kFeasTol; pass 2 picks the largest-magnitude pivot among the
      // blockers whose exact stop fits in that relaxed step. Index-based
      // selection alone forces near-zero pivots on degenerate programs and
      // drives the basis singular.
      const double span = hi_[std::size_t(entering)] - lo_[std::size_t(entering)];
      double t_relaxed = kInf;
      std::vector<double> t_exact(std::size_t(m_), kInf);
      std::vector<VarState> t_target(std::size_t(m_), VarState::AtLower);
      for (int i = 0; i < m_; ++i) {
        const double delta = -dir * w[std::size_t(i)];  // basic i velocity
        if (std::abs(delta) <= kPivotTol) continue;
        const int bj = basic_[std::size_t(i)];
        const double v = x_[std::size_t(bj)];
        const double lo = lo_[std::size_t(bj)];
        const double hi = hi_[std::size_t(bj)];
        const bool below = v < lo - kFeasTol;
        const bool above = v > hi + kFeasTol;
        double bound = kInf;
        VarState target = VarState::AtLower;
        if (delta > 0.0) {
          if (below) {
            bound = lo;
            target = VarState::AtLower;
          } else if (!above && finite(hi)) {
            bound = hi;
            target = VarState::AtUpper;
          }
        } else {
          if (above) {
            bound = hi;
            target = VarState::AtUpper;
          } else if (!below && finite(lo)) {
            bound = lo;
            target = VarState::AtLower;
          }
        }
        if (!finite(bound)) continue;
        const double t = std::max((bound - v) / delta, 0.0);
        t_exact[std::size_t(i)] = t;
        t_target[std::size_t(i)] = target;
        t_relaxed = std::min(t_relaxed, t + kFeasTol / std::abs(delta));
      }

      double t_best = kInf;
      int leaving_pos = -1;
      if (stalled_) {
        // After a long degenerate streak fall back to Bland's smallest-index
        // rule over the exact minimum-ratio set, which cannot cycle when
        // paired with the Bland entering rule. Pivots far below the working
        // scale are excluded first: a single 1e-10 pivot leaves the next
        // refactorization singular, which is worse than bending the textbook
        // rule (the iteration budget still backstops any residual cycling).
        double t_min = kInf;
        for (int i = 0; i < m_; ++i) t_min = std::min(t_min, t_exact[std::size_t(i)]);
        if (finite(t_min)) {
          constexpr double kHealthyPivot = 1e-6;
          double best_mag = 0.0;
          for (int i = 0; i < m_; ++i) {
            if (t_exact[std::size_t(i)] > t_min) continue;
            const double mag = std::abs(w[std::size_t(i)]);
            const bool healthy = mag >= kHealthyPivot;
            const bool chosen_healthy =
                leaving_pos >= 0 &&
                std::abs(w[std::size_t(leaving_pos)]) >= kHealthyPivot;
            bool take = false;
            if (leaving_pos < 0) {
              take = true;
            } else if (healthy != chosen_healthy) {
              take = healthy;
            } else if (healthy) {
              take = basic_[std::size_t(i)] < basic_[std::size_t(leaving_pos)];
            } else {
              take = mag > best_mag;
            }
            if (take) {
              leaving_pos = i;
              t_best = t_exact[std::size_t(i)];
              best_mag = mag;
            }
          }
        }
      } else {
        double best_pivot = 0.0;
        for (int i = 0; i < m_; ++i) {
          if (t_exact[std::size_t(i)] > t_relaxed) continue;
          const double mag = std::abs(w[std::size_t(i)]);
          if (mag > best_pivot) {
            best_pivot = mag;
            leaving_pos = i;
            t_best = t_exact[std::size_t(i)];
          }
        }
      }

      if (leaving_pos < 0 && !finite(span)) {
        // The objective is bounded by the variable boxes, so a ray can only
        // appear through numerical breakdown.
        throw numerical_error("unblocked simplex direction");
      }

      ++iterations_;
      if (leaving_pos < 0 || span <= t_best) {
        // Bound flip: entering runs to its opposite bound, basis unchanged.
        // A flip across a tiny span is no more progress than a degenerate
        // pivot, so it must feed the stall detector rather than reset it.
        x_[std::size_t(entering)] =
            dir > 0 ? hi_[std::size_t(entering)] : lo_[std::size_t(entering)];
        state_[std::size_t(entering)] =
            dir > 0 ? VarState::AtUpper : VarState::AtLower;
        continue;
      }

      const VarState leaving_state = t_target[std::size_t(leaving_pos)];
      const int leaving_var = basic_[std::size_t(leaving_pos)];
      x_[std::size_t(entering)] += dir * t_best;
      x_[std::size_t(leaving_var)] = leaving_state == VarState::AtLower
                                         ? lo_[std::size_t(leaving_var)]
                                         : hi_[std::size_t(leaving_var)];
      state_[std::size_t(leaving_var)] = leaving_state;
      basic_pos_[std::size_t(leaving_var)] = -1;
      state_[std::size_t(entering)] = VarState::Basic;
      basic_[std::size_t(leaving_pos)] = entering;
      basic_pos_[std::size_t(entering)] = leaving_pos;
      basis_dirty_ = true;
    }
  }

  int n_, m_, total_;
  std::vector<double> scale_;
  std::vector<double> col_scale_;
  std::vector<double> cols_;  // column-major (total_ columns of height m_)
  std::vector<double> lo_, hi_, cost_, x_;
  std::vector<VarState> state_;
  std::vector<int> basic_;      // variable index per basis position
  std::vector<int> basic_pos_;  // inverse map, -1 when nonbasic
  std::vector<double> binv_;
  int iterations_ = 0;
  bool basis_dirty_ = true;  // force initial build
  bool stalled_ = false;
};

}  // namespace

Solution solve(const LinearProgram& lp) {
  lp.validate();
  if (lp.num_vars == 0 && lp.rows.empty()) {
    return Solution{};
  }
  Solver solver(lp);
  return solver.run();
}

}  // namespace bellsim::lp
