#include "bellsim/fock.hpp"

#include <cmath>

namespace bellsim {

namespace {

constexpr int kMaxCutoff = 30;  // keeps factorials comfortably inside double range

void check_cutoff(int cutoff) {
  if (cutoff < 1) throw std::domain_error("photon-number cutoff must be at least 1");
  if (cutoff > kMaxCutoff) {
    throw std::domain_error("photon-number cutoff above " + std::to_string(kMaxCutoff) +
                            " is not supported");
  }
}

std::vector<double> factorials(int n_max) {
  std::vector<double> f(std::size_t(n_max) + 1, 1.0);
  for (int n = 1; n <= n_max; ++n) f[n] = f[n - 1] * n;
  return f;
}

/// Real part of the balanced beam-splitter matrix element: amplitude for p
/// photons in output 1 (and n+m-p in output 2) given n photons in input a
/// and m in input b. The phase on input b is handled by rotating the arm
/// amplitudes, so these coefficients are real:
///   R(p|n,m) = 2^{-(n+m)/2} sqrt(p!(n+m-p)!/(n!m!))
///              sum_k C(n,p-k) C(m,k) (-1)^{m-k}
struct SplitterTable {
  int cutoff;
  // index [n][m] -> vector over p of length n+m+1
  std::vector<std::vector<double>> coeff;

  explicit SplitterTable(int c) : cutoff(c) {
    const auto fact = factorials(2 * c);
    auto binom = [&](int n, int k) -> double {
      if (k < 0 || k > n) return 0.0;
      return fact[n] / (fact[k] * fact[n - k]);
    };
    coeff.resize(std::size_t(c + 1) * (c + 1));
    for (int n = 0; n <= c; ++n) {
      for (int m = 0; m <= c; ++m) {
        auto& row = coeff[std::size_t(n) * (c + 1) + m];
        row.resize(std::size_t(n) + m + 1);
        const double norm = std::pow(0.5, 0.5 * (n + m));
        for (int p = 0; p <= n + m; ++p) {
          double s = 0.0;
          for (int k = std::max(0, p - n); k <= std::min(m, p); ++k) {
            const double sign = ((m - k) % 2 == 0) ? 1.0 : -1.0;
            s += binom(n, p - k) * binom(m, k) * sign;
          }
          row[std::size_t(p)] =
              norm * std::sqrt(fact[p] * fact[n + m - p] / (fact[n] * fact[m])) * s;
        }
      }
    }
  }

  const std::vector<double>& at(int n, int m) const {
    return coeff[std::size_t(n) * (cutoff + 1) + m];
  }
};

}  // namespace

double ArmState::kept_mass() const {
  double mass = 0.0;
  for (const auto& a : amp) mass += std::norm(a);
  return mass;
}

ArmState ArmState::vacuum(int cutoff) {
  check_cutoff(cutoff);
  ArmState s;
  s.cutoff = cutoff;
  s.amp.assign(std::size_t(cutoff + 1) * (cutoff + 1), {0.0, 0.0});
  s.at(0, 0) = 1.0;
  return s;
}

ArmState ArmState::coherent(const TimeBinState& state, int cutoff) {
  check_cutoff(cutoff);
  ArmState s;
  s.cutoff = cutoff;
  s.amp.assign(std::size_t(cutoff + 1) * (cutoff + 1), {0.0, 0.0});

  const auto fact = factorials(cutoff);
  auto expansion = [&](std::complex<double> alpha) {
    std::vector<std::complex<double>> c(std::size_t(cutoff) + 1);
    const double weight = std::exp(-0.5 * std::norm(alpha));
    std::complex<double> power = 1.0;
    for (int n = 0; n <= cutoff; ++n) {
      c[std::size_t(n)] = weight * power / std::sqrt(fact[n]);
      power *= alpha;
    }
    return c;
  };

  const auto ce = expansion(state.amp_early);
  const auto cl = expansion(state.amp_late);
  for (int ne = 0; ne <= cutoff; ++ne) {
    for (int nl = 0; nl <= cutoff; ++nl) {
      s.at(ne, nl) = ce[std::size_t(ne)] * cl[std::size_t(nl)];
    }
  }
  return s;
}

ArmState ArmState::single_photon(Basis basis, int bit, int cutoff) {
  return number_state(basis, bit, 1, cutoff);
}

ArmState ArmState::number_state(Basis basis, int bit, int n, int cutoff) {
  check_cutoff(cutoff);
  if (bit != 0 && bit != 1) throw std::invalid_argument("state bit must be 0 or 1");
  if (n < 0 || n > cutoff) throw std::domain_error("photon number must be in [0, cutoff]");
  ArmState s;
  s.cutoff = cutoff;
  s.amp.assign(std::size_t(cutoff + 1) * (cutoff + 1), {0.0, 0.0});
  if (basis == Basis::Z) {
    if (bit == 0) {
      s.at(n, 0) = 1.0;
    } else {
      s.at(0, n) = 1.0;
    }
  } else {
    // (a_e^dag +/- a_l^dag)^n / sqrt(2^n n!) |0>: binomial spread over bins.
    const auto fact = factorials(n);
    const double norm = std::pow(0.5, 0.5 * n);
    const double sign = bit == 0 ? 1.0 : -1.0;
    for (int k = 0; k <= n; ++k) {
      const double binom = fact[n] / (fact[k] * fact[n - k]);
      s.at(k, n - k) = norm * std::sqrt(binom) * std::pow(sign, n - k);
    }
  }
  return s;
}

PatternDistribution fock_pattern_distribution(const ArmState& a, const ArmState& b,
                                              const DetectorConfig& det1,
                                              const DetectorConfig& det2, double theta,
                                              const TimingConfig& timing) {
  if (a.cutoff != b.cutoff) throw std::invalid_argument("arm cutoffs must match");
  det1.validate();
  det2.validate();
  timing.validate();
  const int c = a.cutoff;
  check_cutoff(c);

  // Every photon entering arm b picks up the relative phase theta, so the
  // splitter coefficients stay real.
  ArmState b_rot = b;
  for (int ne = 0; ne <= c; ++ne) {
    const std::complex<double> phase_e = std::polar(1.0, theta * ne);
    for (int nl = 0; nl <= c; ++nl) {
      b_rot.at(ne, nl) *= phase_e * std::polar(1.0, theta * nl);
    }
  }

  const SplitterTable split(c);

  // Joint output amplitudes over photon numbers per detector slot:
  // index [p1e][p2e][p1l][p2l], each in [0, 2c].
  const int dim = 2 * c + 1;
  std::vector<std::complex<double>> joint(std::size_t(dim) * dim * dim * dim, {0.0, 0.0});
  auto joint_index = [dim](int p1e, int p2e, int p1l, int p2l) {
    return ((std::size_t(p1e) * dim + p2e) * dim + p1l) * dim + p2l;
  };

  for (int na_e = 0; na_e <= c; ++na_e) {
    for (int na_l = 0; na_l <= c; ++na_l) {
      const std::complex<double> amp_a = a.at(na_e, na_l);
      if (amp_a == std::complex<double>{}) continue;
      for (int nb_e = 0; nb_e <= c; ++nb_e) {
        for (int nb_l = 0; nb_l <= c; ++nb_l) {
          const std::complex<double> amp_in = amp_a * b_rot.at(nb_e, nb_l);
          if (amp_in == std::complex<double>{}) continue;
          const auto& split_e = split.at(na_e, nb_e);
          const auto& split_l = split.at(na_l, nb_l);
          const int tot_e = na_e + nb_e;
          const int tot_l = na_l + nb_l;
          for (int p1e = 0; p1e <= tot_e; ++p1e) {
            const std::complex<double> amp_e = amp_in * split_e[std::size_t(p1e)];
            for (int p1l = 0; p1l <= tot_l; ++p1l) {
              joint[joint_index(p1e, tot_e - p1e, p1l, tot_l - p1l)] +=
                  amp_e * split_l[std::size_t(p1l)];
            }
          }
        }
      }
    }
  }

  // Threshold detection: a slot with n photons on a detector with efficiency
  // eta misses all of them with probability (1-eta)^n; dark counts fill the
  // pulse window independently.
  const double pd1 = dark_click_prob(det1.dark_rate_hz, timing.pulse_width_ns);
  const double pd2 = dark_click_prob(det2.dark_rate_hz, timing.pulse_width_ns);
  std::vector<double> miss1(std::size_t(dim), 0.0);
  std::vector<double> miss2(std::size_t(dim), 0.0);
  for (int n = 0; n < dim; ++n) {
    miss1[std::size_t(n)] = (1.0 - pd1) * std::pow(1.0 - det1.eta, n);
    miss2[std::size_t(n)] = (1.0 - pd2) * std::pow(1.0 - det2.eta, n);
  }

  PatternDistribution dist;
  for (int p1e = 0; p1e < dim; ++p1e) {
    for (int p2e = 0; p2e < dim; ++p2e) {
      for (int p1l = 0; p1l < dim; ++p1l) {
        for (int p2l = 0; p2l < dim; ++p2l) {
          const double prob = std::norm(joint[joint_index(p1e, p2e, p1l, p2l)]);
          if (prob == 0.0) continue;
          const double no1e = miss1[std::size_t(p1e)];
          const double no1l = miss1[std::size_t(p1l)];
          const double no2e = miss2[std::size_t(p2e)];
          const double no2l = miss2[std::size_t(p2l)];
          for (int pattern = 0; pattern < 16; ++pattern) {
            const double f1e = (pattern & 1) ? 1.0 - no1e : no1e;
            const double f1l = (pattern & 2) ? 1.0 - no1l : no1l;
            const double f2e = (pattern & 4) ? 1.0 - no2e : no2e;
            const double f2l = (pattern & 8) ? 1.0 - no2l : no2l;
            dist.p[std::size_t(pattern)] += prob * f1e * f1l * f2e * f2l;
          }
        }
      }
    }
  }

  const bool det1_blocked = det1.tau_ns >= timing.bin_separation_ns;
  const bool det2_blocked = det2.tau_ns >= timing.bin_separation_ns;
  if (det1_blocked || det2_blocked) {
    apply_deadtime_rule(dist, det1_blocked, det2_blocked);
  }
  return dist;
}

PatternDistribution fock_pattern_oracle(const TimeBinState& a, const TimeBinState& b,
                                        const DetectorConfig& det1, const DetectorConfig& det2,
                                        double theta, int cutoff, const TimingConfig& timing,
                                        double tail_tol) {
  check_cutoff(cutoff);
  const ArmState fa = ArmState::coherent(a, cutoff);
  const ArmState fb = ArmState::coherent(b, cutoff);
  const double tail = 1.0 - fa.kept_mass() * fb.kept_mass();
  if (tail > tail_tol) {
    throw truncation_error("cutoff " + std::to_string(cutoff) + " leaves tail mass " +
                           std::to_string(tail) + " above tolerance");
  }
  return fock_pattern_distribution(fa, fb, det1, det2, theta, timing);
}

}  // namespace bellsim
