#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "bellsim/states.hpp"

namespace bellsim {

/// One schedule setting: same-basis state pair plus the intensity pair.
struct CountsKey {
  Basis basis = Basis::Z;
  int bit_a = 0;
  int bit_b = 0;
  double mu_a = 0.0;
  double mu_b = 0.0;

  friend bool operator==(const CountsKey&, const CountsKey&) = default;
  friend bool operator<(const CountsKey& l, const CountsKey& r) {
    return std::tie(l.basis, l.bit_a, l.bit_b, l.mu_a, l.mu_b) <
           std::tie(r.basis, r.bit_a, r.bit_b, r.mu_a, r.mu_b);
  }
};

struct KeyCounts {
  std::uint64_t n_cycles = 0;
  std::uint64_t n_psiminus = 0;
  std::uint64_t n_psiplus = 0;
  /// Raw 16-pattern histogram (bit layout of optics.hpp); kept for
  /// diagnostics, serialized only in the JSON form.
  std::array<std::uint64_t, 16> patterns{};

  friend bool operator==(const KeyCounts&, const KeyCounts&) = default;
};

struct RunMetadata {
  std::string version;
  std::string config_digest;           // hash of the canonical config (seed/cycles excluded)
  std::vector<std::uint64_t> seeds;
  std::uint64_t total_cycles = 0;
  std::string config_json;             // canonical config the run used, if known

  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

/// Accumulated outcome counts of a simulation run.
struct CountsTable {
  std::map<CountsKey, KeyCounts> rows;
  RunMetadata meta;

  friend bool operator==(const CountsTable&, const CountsTable&) = default;

  /// Exact column format: basis,state_a,state_b,mu_a,mu_b,n_cycles,n_psiminus,n_psiplus
  void write_csv(std::ostream& os) const;
  /// Parse the CSV form; throws parse_error naming the offending line.
  static CountsTable read_csv(std::istream& is);

  /// JSON with metadata header and per-key pattern histograms.
  std::string to_json_string() const;
  static CountsTable from_json_string(const std::string& text);
};

class parse_error : public std::runtime_error {
 public:
  parse_error(const std::string& msg, std::size_t line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class merge_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Keywise sum of two tables from the same configuration (digests must match;
/// seeds and cycle counts may differ). Associative and commutative.
CountsTable merge(const CountsTable& a, const CountsTable& b);

}  // namespace bellsim
