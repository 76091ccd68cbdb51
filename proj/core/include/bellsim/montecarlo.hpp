#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bellsim/counts.hpp"
#include "bellsim/detector.hpp"
#include "bellsim/optics.hpp"
#include "bellsim/states.hpp"
#include "bellsim/timing.hpp"

namespace bellsim {

/// One line of the measurement schedule: a same-basis state pair with its
/// intensity pair, drawn with probability weight / (sum of weights).
struct ScheduleEntry {
  Basis basis = Basis::Z;
  int bit_a = 0;
  int bit_b = 0;
  double mu_a = 0.0;
  double mu_b = 0.0;
  double weight = 1.0;
};

/// Relative optical phase between the two arms: redrawn uniformly every clock
/// cycle (independent lasers) or held at a fixed value (locked sources).
enum class PhaseMode { RandomPerCycle, Fixed };

/// Full description of one simulation run.
struct RunConfig {
  std::uint64_t cycles = 10'000'000;
  std::uint64_t seed = 1;
  int threads = 1;
  PhaseMode phase_mode = PhaseMode::RandomPerCycle;
  double fixed_theta = 0.0;
  std::array<SourceConfig, 2> sources{};    // [0] = Alice, [1] = Bob
  std::array<ChannelConfig, 2> channels{};
  std::array<DetectorConfig, 2> detectors{};
  TimingConfig timing{};
  std::vector<ScheduleEntry> schedule;      // empty -> default_schedule at validate time

  void validate() const;  // throws std::invalid_argument naming the bad field
};

/// Uniform schedule over all same-basis state pairs and all intensity pairs
/// from the two sources' ladders: 2 bases x 4 bit pairs x |I_a|*|I_b| entries,
/// weight 1 each.
std::vector<ScheduleEntry> default_schedule(const SourceConfig& alice, const SourceConfig& bob);

/// Canonical substream derivation: the run is split into fixed-size blocks of
/// kBlockCycles cycles, and block i is simulated with an independent engine
/// seeded by substream_seed(master_seed, i). Results are therefore identical
/// for any thread count.
inline constexpr std::uint64_t kBlockCycles = 1u << 20;

/// SplitMix64 finalizer over master + golden-ratio stride; decorrelates
/// per-block engine seeds even for adjacent master seeds.
std::uint64_t substream_seed(std::uint64_t master_seed, std::uint64_t block_index);

/// Simulate config.cycles clock cycles of the full chain: schedule draw,
/// phase draw, state preparation with extinction and preparation phase error,
/// channel attenuation, beam splitter, per-bin Bernoulli clicks (including
/// dark counts over the pulse-width window), non-paralyzable dead-time across
/// cycles, Bell-state classification. Deterministic for a fixed config.
///
/// Dead-time state persists across the cycles of one block and resets at
/// block boundaries, which is what makes blocks independent. A click landing
/// exactly at the end of a dead window counts as suppressed, so a dead-time
/// equal to the bin separation already excludes same-detector double clicks,
/// matching the analytic pattern model.
CountsTable run(const RunConfig& config);

}  // namespace bellsim
