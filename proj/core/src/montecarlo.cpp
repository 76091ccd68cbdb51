#include "bellsim/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "bellsim/bsm.hpp"
#include "bellsim/config.hpp"
#include "bellsim/version.hpp"

namespace bellsim {

namespace {

/// Phase resolution of the random mode's precomputed click tables. Midpoint
/// sampling over this many bins is a quadrature of the same family as
/// phase_average; its bias is far below counting noise at any feasible run
/// length.
constexpr int kPhaseBins = 1024;

/// xoshiro256++ (Blackman/Vigna): the cycle loop draws several uniforms per
/// cycle and a heavier generator dominates the whole simulation, so the
/// standard engines are not an option here. State is filled from a SplitMix64
/// stream per the reference seeding recipe.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (std::uint64_t& s : s_) {
      z += 0x9E3779B97F4A7C15ULL;
      std::uint64_t t = z;
      t = (t ^ (t >> 30)) * 0xBF58476D1CE4E5B9ULL;
      t = (t ^ (t >> 27)) * 0x94D049BB133111EBULL;
      s = t ^ (t >> 31);
    }
  }

  std::uint64_t operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
};

double uniform01(Xoshiro256pp& eng) {
  return double(eng() >> 11) * 0x1.0p-53;
}

/// Walker alias sampler: one uniform picks a slot and decides between the
/// slot's own entry and its alias.
struct AliasTable {
  std::vector<double> prob;
  std::vector<int> alias;

  void build(const std::vector<double>& weights) {
    const int k = int(weights.size());
    prob.assign(std::size_t(k), 0.0);
    alias.assign(std::size_t(k), 0);
    double total = 0.0;
    for (double w : weights) total += w;
    std::vector<double> scaled(weights.size());
    for (int i = 0; i < k; ++i) scaled[std::size_t(i)] = weights[std::size_t(i)] / total * k;
    std::vector<int> small, large;
    for (int i = 0; i < k; ++i) (scaled[std::size_t(i)] < 1.0 ? small : large).push_back(i);
    while (!small.empty() && !large.empty()) {
      const int s = small.back();
      const int l = large.back();
      small.pop_back();
      prob[std::size_t(s)] = scaled[std::size_t(s)];
      alias[std::size_t(s)] = l;
      scaled[std::size_t(l)] -= 1.0 - scaled[std::size_t(s)];
      if (scaled[std::size_t(l)] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (int i : large) prob[std::size_t(i)] = 1.0;
    for (int i : small) prob[std::size_t(i)] = 1.0;  // numeric leftovers
  }

  int sample(double u) const {
    const double pos = u * double(prob.size());
    int i = int(pos);
    if (i >= int(prob.size())) i = int(prob.size()) - 1;
    return pos - i < prob[std::size_t(i)] ? i : alias[std::size_t(i)];
  }
};

/// Click probabilities for every (schedule entry, phase bin, detector/bin)
/// combination, laid out entry-major for sequential access within a cycle.
struct ClickTables {
  int n_bins = 1;
  std::vector<double> p;  // [entry][bin][4], slots d1e, d1l, d2e, d2l

  const double* at(int entry, int bin) const {
    return &p[(std::size_t(entry) * std::size_t(n_bins) + std::size_t(bin)) * 4];
  }
};

TimeBinState arm_state(const ScheduleEntry& e, int side, const RunConfig& cfg) {
  const int bit = side == 0 ? e.bit_a : e.bit_b;
  const double mu = side == 0 ? e.mu_a : e.mu_b;
  const SourceConfig& src = cfg.sources[std::size_t(side)];
  TimeBinState s = prepare(e.basis, bit, mu);
  s = apply_extinction(s, src.extinction_db, mu);
  if (e.basis == Basis::X && bit == 1) {
    s = apply_prep_phase_error(s, src.prep_phase_error_rad);
  }
  return attenuate(s, cfg.channels[std::size_t(side)]);
}

ClickTables build_click_tables(const std::vector<ScheduleEntry>& schedule, const RunConfig& cfg) {
  ClickTables tables;
  tables.n_bins = cfg.phase_mode == PhaseMode::RandomPerCycle ? kPhaseBins : 1;
  tables.p.resize(schedule.size() * std::size_t(tables.n_bins) * 4);
  const double pd1 = dark_click_prob(cfg.detectors[0].dark_rate_hz, cfg.timing.pulse_width_ns);
  const double pd2 = dark_click_prob(cfg.detectors[1].dark_rate_hz, cfg.timing.pulse_width_ns);
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const TimeBinState sa = arm_state(schedule[k], 0, cfg);
    const TimeBinState sb = arm_state(schedule[k], 1, cfg);
    for (int b = 0; b < tables.n_bins; ++b) {
      const double theta = cfg.phase_mode == PhaseMode::RandomPerCycle
                               ? 2.0 * std::numbers::pi * (b + 0.5) / kPhaseBins
                               : cfg.fixed_theta;
      const auto [c, d] = beamsplit(sa, sb, theta);
      double* slot = &tables.p[(k * std::size_t(tables.n_bins) + std::size_t(b)) * 4];
      slot[0] = click_prob(c.intensity_early(), cfg.detectors[0].eta, pd1);
      slot[1] = click_prob(c.intensity_late(), cfg.detectors[0].eta, pd1);
      slot[2] = click_prob(d.intensity_early(), cfg.detectors[1].eta, pd2);
      slot[3] = click_prob(d.intensity_late(), cfg.detectors[1].eta, pd2);
    }
  }
  return tables;
}

using PatternAccumulator = std::vector<std::array<std::uint64_t, 16>>;

void simulate_block(std::uint64_t master_seed, std::uint64_t block_index,
                    std::uint64_t block_cycles, const RunConfig& cfg, const AliasTable& alias,
                    const ClickTables& tables, PatternAccumulator& acc) {
  Xoshiro256pp eng(substream_seed(master_seed, block_index));
  const bool random_phase = cfg.phase_mode == PhaseMode::RandomPerCycle;
  const double period = cfg.timing.period_ns();
  const double t0 = cfg.timing.bin_separation_ns;
  const double tau1 = cfg.detectors[0].tau_ns;
  const double tau2 = cfg.detectors[1].tau_ns;
  // Recovery state; a click is accepted only strictly after last + tau, so a
  // dead-time covering the bin gap exactly still suppresses the late click.
  double last1 = -std::numeric_limits<double>::infinity();
  double last2 = last1;
  for (std::uint64_t i = 0; i < block_cycles; ++i) {
    const int entry = alias.sample(uniform01(eng));
    int bin = 0;
    if (random_phase) {
      bin = int(uniform01(eng) * kPhaseBins);
    }
    const double* p = tables.at(entry, bin);
    const bool c1e = uniform01(eng) < p[0];
    const bool c1l = uniform01(eng) < p[1];
    const bool c2e = uniform01(eng) < p[2];
    const bool c2l = uniform01(eng) < p[3];
    const double t_early = double(i) * period;
    const double t_late = t_early + t0;
    int idx = 0;
    if (c1e && t_early - last1 > tau1) {
      last1 = t_early;
      idx |= 1;
    }
    if (c1l && t_late - last1 > tau1) {
      last1 = t_late;
      idx |= 2;
    }
    if (c2e && t_early - last2 > tau2) {
      last2 = t_early;
      idx |= 4;
    }
    if (c2l && t_late - last2 > tau2) {
      last2 = t_late;
      idx |= 8;
    }
    ++acc[std::size_t(entry)][std::size_t(idx)];
  }
}

}  // namespace

void RunConfig::validate() const {
  if (cycles == 0) throw std::invalid_argument("run config: cycles must be > 0");
  if (threads < 1) throw std::invalid_argument("run config: threads must be >= 1");
  if (phase_mode == PhaseMode::Fixed && !std::isfinite(fixed_theta)) {
    throw std::invalid_argument("run config: fixed_theta must be finite");
  }
  sources[0].validate();
  sources[1].validate();
  channels[0].validate();
  channels[1].validate();
  detectors[0].validate();
  detectors[1].validate();
  timing.validate();
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const ScheduleEntry& e = schedule[i];
    const std::string where = "run config: schedule entry " + std::to_string(i);
    if (e.bit_a != 0 && e.bit_a != 1) throw std::invalid_argument(where + ": bit_a must be 0 or 1");
    if (e.bit_b != 0 && e.bit_b != 1) throw std::invalid_argument(where + ": bit_b must be 0 or 1");
    if (!(e.mu_a >= 0.0) || !std::isfinite(e.mu_a)) {
      throw std::invalid_argument(where + ": mu_a must be finite and >= 0");
    }
    if (!(e.mu_b >= 0.0) || !std::isfinite(e.mu_b)) {
      throw std::invalid_argument(where + ": mu_b must be finite and >= 0");
    }
    if (!(e.weight > 0.0) || !std::isfinite(e.weight)) {
      throw std::invalid_argument(where + ": weight must be finite and > 0");
    }
  }
}

std::vector<ScheduleEntry> default_schedule(const SourceConfig& alice, const SourceConfig& bob) {
  std::vector<ScheduleEntry> schedule;
  schedule.reserve(8 * alice.intensities.size() * bob.intensities.size());
  for (Basis basis : {Basis::Z, Basis::X}) {
    for (int bit_a = 0; bit_a < 2; ++bit_a) {
      for (int bit_b = 0; bit_b < 2; ++bit_b) {
        for (double mu_a : alice.intensities) {
          for (double mu_b : bob.intensities) {
            schedule.push_back({basis, bit_a, bit_b, mu_a, mu_b, 1.0});
          }
        }
      }
    }
  }
  return schedule;
}

std::uint64_t substream_seed(std::uint64_t master_seed, std::uint64_t block_index) {
  std::uint64_t z = master_seed + 0x9E3779B97F4A7C15ULL * (block_index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

CountsTable run(const RunConfig& config) {
  config.validate();
  const std::vector<ScheduleEntry> schedule =
      config.schedule.empty() ? default_schedule(config.sources[0], config.sources[1])
                              : config.schedule;
  if (schedule.empty()) {
    throw std::invalid_argument("run config: schedule resolves to no entries");
  }

  AliasTable alias;
  {
    std::vector<double> weights;
    weights.reserve(schedule.size());
    for (const ScheduleEntry& e : schedule) weights.push_back(e.weight);
    alias.build(weights);
  }
  const ClickTables tables = build_click_tables(schedule, config);

  const std::uint64_t n_blocks = (config.cycles + kBlockCycles - 1) / kBlockCycles;
  const int n_threads = int(std::min<std::uint64_t>(std::uint64_t(config.threads), n_blocks));
  std::vector<PatternAccumulator> accs(
      std::size_t(std::max(n_threads, 1)),
      PatternAccumulator(schedule.size(), std::array<std::uint64_t, 16>{}));

  auto work = [&](int thread_index) {
    for (std::uint64_t b = std::uint64_t(thread_index); b < n_blocks;
         b += std::uint64_t(n_threads)) {
      const std::uint64_t begin = b * kBlockCycles;
      const std::uint64_t count = std::min<std::uint64_t>(kBlockCycles, config.cycles - begin);
      simulate_block(config.seed, b, count, config, alias, tables,
                     accs[std::size_t(thread_index)]);
    }
  };
  if (n_threads <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work, t);
    for (std::thread& t : pool) t.join();
  }

  std::array<BsmOutcome, 16> outcome_of;
  for (int idx = 0; idx < 16; ++idx) {
    outcome_of[std::size_t(idx)] = classify(ClickPattern::from_index(idx));
  }

  CountsTable out;
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    const ScheduleEntry& e = schedule[k];
    KeyCounts& kc = out.rows[{e.basis, e.bit_a, e.bit_b, e.mu_a, e.mu_b}];
    for (int idx = 0; idx < 16; ++idx) {
      std::uint64_t total = 0;
      for (const PatternAccumulator& acc : accs) total += acc[k][std::size_t(idx)];
      kc.patterns[std::size_t(idx)] += total;
    }
  }
  for (auto& [key, kc] : out.rows) {
    kc.n_cycles = 0;
    kc.n_psiminus = 0;
    kc.n_psiplus = 0;
    for (int idx = 0; idx < 16; ++idx) {
      kc.n_cycles += kc.patterns[std::size_t(idx)];
      if (outcome_of[std::size_t(idx)] == BsmOutcome::PsiMinus) {
        kc.n_psiminus += kc.patterns[std::size_t(idx)];
      } else if (outcome_of[std::size_t(idx)] == BsmOutcome::PsiPlus) {
        kc.n_psiplus += kc.patterns[std::size_t(idx)];
      }
    }
  }

  out.meta.version = kVersion;
  out.meta.seeds = {config.seed};
  out.meta.total_cycles = config.cycles;
  out.meta.config_digest = config_digest(config);
  out.meta.config_json = canonical_config_json(config);
  return out;
}

}  // namespace bellsim
