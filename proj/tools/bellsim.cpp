#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bellsim/bsm.hpp"
#include "bellsim/config.hpp"
#include "bellsim/counts.hpp"
#include "bellsim/decoy.hpp"
#include "bellsim/detector.hpp"
#include "bellsim/fock.hpp"
#include "bellsim/montecarlo.hpp"
#include "bellsim/simplex.hpp"
#include "bellsim/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bellsim;

namespace {

// Exit codes: 0 success, 2 configuration error, 3 data/feasibility error,
// 4 internal numerical failure.
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

class cli_config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw cli_config_error("cannot read file: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// BELLSIM_OUT_DIR redirects relative output paths; physics parameters are
/// never taken from the environment.
fs::path resolve_out(const std::string& requested) {
  fs::path path(requested);
  const char* dir = std::getenv("BELLSIM_OUT_DIR");
  if (dir != nullptr && *dir != '\0' && path.is_relative()) return fs::path(dir) / path;
  return path;
}

/// Write via a temporary and rename, so a failed run never leaves a partial
/// output behind.
void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + tmp.string());
    os << content;
    os.flush();
    if (!os) {
      os.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw std::runtime_error("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, path);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const fs::path& stem, const std::string& command,
                    const std::string& config_digest, const std::vector<std::uint64_t>& seeds,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  json manifest = {{"tool_version", kVersion}, {"command", command},
                   {"config_digest", config_digest}, {"seeds", seeds},
                   {"created_utc", utc_timestamp()}, {"inputs", inputs},
                   {"outputs", outputs}};
  fs::path path = stem;
  path += ".manifest.json";
  write_file_atomic(path, manifest.dump(2) + "\n");
}

/// Accepts plain integers and scientific notation that lands on an integer
/// ("2.5e7"), so shell-friendly cycle counts round-trip exactly.
std::uint64_t parse_count(const std::string& text, const std::string& flag) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || !(v >= 0.0) || v != std::floor(v) || v > 9007199254740992.0) {
      throw std::invalid_argument("not an integer");
    }
    return std::uint64_t(v);
  } catch (const std::exception&) {
    throw cli_config_error(flag + ": expected a nonnegative integer, got '" + text + "'");
  }
}

CountsTable load_counts(const fs::path& path) {
  const std::string text = read_file(path);
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    return CountsTable::from_json_string(text);
  }
  std::istringstream is(text);
  return CountsTable::read_csv(is);
}

/// Geometric-mean arm transmission from a run's recorded configuration, used
/// to convert yield bounds into analyzer efficiencies.
double recorded_transmission(const CountsTable& counts) {
  if (counts.meta.config_json.empty()) return 0.0;
  const RunConfig cfg = run_config_from_json(counts.meta.config_json);
  return std::sqrt(cfg.channels[0].transmission() * cfg.channels[1].transmission());
}

struct SimulateArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string seed_text;
  std::string cycles_text;
  int threads = 0;
  std::string out = "counts";
  std::string format = "both";
};

int cmd_simulate(const SimulateArgs& args, const std::string& command) {
  RunConfig cfg =
      args.config_path.empty() ? default_run_config() : run_config_from_json(read_file(args.config_path));
  for (const std::string& assignment : args.overrides) apply_override(cfg, assignment);
  if (!args.seed_text.empty()) cfg.seed = parse_count(args.seed_text, "--seed");
  if (!args.cycles_text.empty()) cfg.cycles = parse_count(args.cycles_text, "--cycles");
  if (args.threads > 0) cfg.threads = args.threads;
  cfg.validate();

  const auto t0 = std::chrono::steady_clock::now();
  const CountsTable counts = run(cfg);
  const auto t1 = std::chrono::steady_clock::now();
  const double secs = std::chrono::duration<double>(t1 - t0).count();

  std::printf("simulated %.3e cycles in %.2f s (%.1f Mcycles/s), seed %llu, digest %s\n",
              double(cfg.cycles), secs, double(cfg.cycles) / secs / 1e6,
              static_cast<unsigned long long>(cfg.seed), counts.meta.config_digest.c_str());
  std::printf("%-5s %-7s %-7s %-6s %-6s %12s %10s %10s\n", "basis", "state_a", "state_b", "mu_a",
              "mu_b", "cycles", "psiminus", "psiplus");
  for (const auto& [key, kc] : counts.rows) {
    std::printf("%-5s %-7c %-7c %-6g %-6g %12llu %10llu %10llu\n", basis_name(key.basis),
                state_char(key.basis, key.bit_a), state_char(key.basis, key.bit_b), key.mu_a,
                key.mu_b, static_cast<unsigned long long>(kc.n_cycles),
                static_cast<unsigned long long>(kc.n_psiminus),
                static_cast<unsigned long long>(kc.n_psiplus));
  }

  const fs::path stem = resolve_out(args.out);
  std::vector<std::string> outputs;
  if (args.format == "both" || args.format == "csv") {
    std::ostringstream csv;
    counts.write_csv(csv);
    fs::path path = stem;
    path += ".csv";
    write_file_atomic(path, csv.str());
    outputs.push_back(path.string());
  }
  if (args.format == "both" || args.format == "json") {
    fs::path path = stem;
    path += ".json";
    write_file_atomic(path, counts.to_json_string());
    outputs.push_back(path.string());
  }
  write_manifest(stem, command, counts.meta.config_digest, counts.meta.seeds,
                 args.config_path.empty() ? std::vector<std::string>{}
                                          : std::vector<std::string>{args.config_path},
                 outputs);
  for (const std::string& o : outputs) std::printf("wrote %s\n", o.c_str());
  return 0;
}

struct AnalyzeArgs {
  std::string counts_path;
  std::string out;
};

int cmd_analyze(const AnalyzeArgs& args, const std::string& command) {
  const CountsTable counts = load_counts(args.counts_path);
  const AnalysisReport report = analyze_counts(counts);
  std::fputs(render_text(report).c_str(), stdout);

  if (!counts.meta.config_json.empty()) {
    const RunConfig cfg = run_config_from_json(counts.meta.config_json);
    std::printf("detector-limited efficiency eta1*eta2/2: %.4f\n",
                eq1_efficiency(cfg.detectors[0].eta, cfg.detectors[1].eta));
  }
  if (report.basis_averaged) {
    std::printf("basis-averaged efficiency (z + 2x)/3: %.4f\n", *report.basis_averaged);
  }

  if (!args.out.empty()) {
    const fs::path stem = resolve_out(args.out);
    fs::path path = stem;
    path += ".json";
    write_file_atomic(path, render_json(report));
    write_manifest(stem, command, counts.meta.config_digest, counts.meta.seeds,
                   {args.counts_path}, {path.string()});
    std::printf("wrote %s\n", path.string().c_str());
  }
  return 0;
}

struct DecoyArgs {
  std::string counts_path;
  int cutoff = 7;
  double sigmas = 1.0;
  std::string basis = "both";
  std::string outcome = "all";
  std::string out;
};

int cmd_decoy(const DecoyArgs& args, const std::string& command) {
  const CountsTable counts = load_counts(args.counts_path);
  DecoyOptions opt;
  opt.photon_cutoff = args.cutoff;
  opt.sigmas = args.sigmas;
  opt.validate();

  std::vector<Basis> bases;
  if (args.basis == "both") {
    bases = {Basis::Z, Basis::X};
  } else if (args.basis == "z") {
    bases = {Basis::Z};
  } else if (args.basis == "x") {
    bases = {Basis::X};
  } else {
    throw cli_config_error("--basis: expected z, x or both");
  }
  std::vector<OutcomeFilter> filters;
  if (args.outcome == "all") {
    filters = {OutcomeFilter::PsiMinus, OutcomeFilter::PsiPlus, OutcomeFilter::Combined};
  } else if (args.outcome == "psiminus") {
    filters = {OutcomeFilter::PsiMinus};
  } else if (args.outcome == "psiplus") {
    filters = {OutcomeFilter::PsiPlus};
  } else if (args.outcome == "combined") {
    filters = {OutcomeFilter::Combined};
  } else {
    throw cli_config_error("--outcome: expected psiminus, psiplus, combined or all");
  }

  const double t = recorded_transmission(counts);
  json results = json::array();
  std::printf("LP decoy bound (cutoff %d, sigmas %g)\n", args.cutoff, args.sigmas);
  std::printf("%-5s %-8s %12s %12s %12s %10s\n", "basis", "outcome", "Y11_lower", "e11_upper",
              "Q11_lower", "eta_bsm");
  for (Basis basis : bases) {
    for (OutcomeFilter filter : filters) {
      const DecoyBounds b = bound(counts, basis, filter, opt);
      json row = {{"basis", basis_name(basis)},
                  {"outcome", outcome_filter_name(filter)},
                  {"y11_lower", b.y11_lower},
                  {"e11_upper", b.e11_upper},
                  {"q11_lower", b.q11_lower},
                  {"mu", b.mu},
                  {"nu", b.nu}};
      if (t > 0.0) row["eta_bsm"] = efficiency_from_q11(b.q11_lower, b.mu, t);
      results.push_back(row);
      std::printf("%-5s %-8s %12.6e %12.6f %12.6e", basis_name(basis),
                  outcome_filter_name(filter), b.y11_lower, b.e11_upper, b.q11_lower);
      if (t > 0.0) {
        std::printf(" %10.4f\n", efficiency_from_q11(b.q11_lower, b.mu, t));
      } else {
        std::printf(" %10s\n", "n/a");
      }
    }
  }

  if (!args.out.empty()) {
    json doc = {{"label", "LP decoy bound"},
                {"cutoff", args.cutoff},
                {"sigmas", args.sigmas},
                {"results", results}};
    const fs::path stem = resolve_out(args.out);
    fs::path path = stem;
    path += ".json";
    write_file_atomic(path, doc.dump(2) + "\n");
    write_manifest(stem, command, counts.meta.config_digest, counts.meta.seeds,
                   {args.counts_path}, {path.string()});
    std::printf("wrote %s\n", path.string().c_str());
  }
  return 0;
}

struct DeadtimeArgs {
  double rate_hz = 0.0;
  double tau_ns = 0.0;
  double duration_s = 0.0;
  double bin_width_ns = 1.0;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_deadtime(const DeadtimeArgs& args, const std::string& command) {
  const InterarrivalHistogram hist =
      interarrival_histogram(args.rate_hz, args.tau_ns, args.duration_s, args.bin_width_ns,
                             args.seed);
  if (hist.low_statistics) {
    std::fprintf(stderr,
                 "warning: only %llu detections survived; increase --duration for a stable "
                 "histogram\n",
                 static_cast<unsigned long long>(hist.detections));
  }
  std::printf("detections %llu, first nonzero bin %.1f ns\n",
              static_cast<unsigned long long>(hist.detections), hist.first_nonzero_bin_ns());
  std::ostringstream csv;
  hist.write_csv(csv);
  if (args.out.empty()) {
    std::fputs(csv.str().c_str(), stdout);
  } else {
    const fs::path stem = resolve_out(args.out);
    fs::path path = stem;
    path += ".csv";
    write_file_atomic(path, csv.str());
    write_manifest(stem, command, "", {args.seed}, {}, {path.string()});
    std::printf("wrote %s\n", path.string().c_str());
  }
  return 0;
}

/// Paper-parameter arm state for the oracle scenarios.
TimeBinState oracle_arm(Basis basis, int bit, double mu) {
  TimeBinState s = prepare(basis, bit, mu);
  s = apply_extinction(s, 50.0, mu);
  return attenuate(s, std::pow(10.0, -0.4));
}

int scenario_single_photon_ideal() {
  DetectorConfig ideal;  // eta 1, no darks, no dead-time
  const TimingConfig timing;
  std::printf("single photons, ideal detectors:\n");
  double basis_total = 0.0;
  for (Basis basis : {Basis::Z, Basis::X}) {
    double total = 0.0;
    for (int ba = 0; ba < 2; ++ba) {
      for (int bb = 0; bb < 2; ++bb) {
        const ArmState a = ArmState::single_photon(basis, ba, 2);
        const ArmState b = ArmState::single_photon(basis, bb, 2);
        const PatternDistribution dist = fock_pattern_distribution(a, b, ideal, ideal, 0.0, timing);
        const double pm = outcome_probability(dist, BsmOutcome::PsiMinus);
        const double pp = outcome_probability(dist, BsmOutcome::PsiPlus);
        std::printf("  |%c%c>  psi- %.6f  psi+ %.6f\n", state_char(basis, ba),
                    state_char(basis, bb), pm, pp);
        total += (pm + pp) / 4.0;
      }
    }
    std::printf("  %s basis projection probability %.9f\n", basis_name(basis), total);
    basis_total += basis == Basis::Z ? total / 3.0 : 2.0 * total / 3.0;
  }
  std::printf("basis-averaged projection probability %.9f (ceiling 0.5)\n", basis_total);
  const bool pass = std::abs(basis_total - 0.5) < 1e-9;
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : kExitData;
}

int scenario_weak_coherent(Basis basis, int cutoff) {
  DetectorConfig d1{0.775, 10.0, 30.0, 0.0, 50.0, 0.0, 1.0};
  DetectorConfig d2{0.762, 10.0, 40.0, 0.0, 50.0, 0.0, 1.0};
  const TimingConfig timing;
  const TimeBinState a = oracle_arm(basis, 0, 0.11);
  const TimeBinState b = oracle_arm(basis, 1, 0.11);
  double worst = 0.0;
  for (double theta : {0.0, 0.7, 1.9, 3.1, 4.4, 5.8}) {
    const PatternDistribution analytic = pattern_distribution(a, b, d1, d2, theta, timing);
    const PatternDistribution oracle =
        fock_pattern_oracle(a, b, d1, d2, theta, cutoff, timing);
    worst = std::max(worst, analytic.max_abs_diff(oracle));
  }
  std::printf("%s-basis weak coherent pulses, cutoff %d: max |analytic - oracle| = %.3e\n",
              basis_name(basis), cutoff, worst);
  const bool pass = worst < 1e-6;
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : kExitData;
}

int scenario_random_sweep(int cutoff) {
  std::mt19937_64 eng(2024);
  auto uniform = [&](double lo, double hi) {
    return lo + (hi - lo) * (double(eng() >> 11) * 0x1.0p-53);
  };
  const TimingConfig timing;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Basis basis = eng() % 2 == 0 ? Basis::Z : Basis::X;
    TimeBinState a = prepare(basis, int(eng() % 2), uniform(0.0, 0.3));
    TimeBinState b = prepare(basis, int(eng() % 2), uniform(0.0, 0.3));
    a = attenuate(a, uniform(0.2, 1.0));
    b = attenuate(b, uniform(0.2, 1.0));
    DetectorConfig d1{uniform(0.3, 1.0), uniform(0.0, 100.0), 30.0, 0.0, 50.0, 0.0, 1.0};
    DetectorConfig d2{uniform(0.3, 1.0), uniform(0.0, 100.0), 40.0, 0.0, 50.0, 0.0, 1.0};
    const double theta = uniform(0.0, 2.0 * std::numbers::pi);
    const PatternDistribution analytic = pattern_distribution(a, b, d1, d2, theta, timing);
    const PatternDistribution oracle = fock_pattern_oracle(a, b, d1, d2, theta, cutoff, timing);
    worst = std::max(worst, analytic.max_abs_diff(oracle));
  }
  std::printf("100 random weak-coherent scenarios, cutoff %d: max |analytic - oracle| = %.3e\n",
              cutoff, worst);
  const bool pass = worst < 1e-6;
  std::printf("%s\n", pass ? "PASS" : "FAIL");
  return pass ? 0 : kExitData;
}

int cmd_oracle(const std::string& scenario, int cutoff) {
  const std::vector<std::string> known = {"single-photon-ideal", "weak-coherent-z-basis",
                                          "weak-coherent-x-basis", "random-sweep"};
  if (scenario.empty()) {
    std::printf("available scenarios:\n");
    for (const std::string& s : known) std::printf("  %s\n", s.c_str());
    return 0;
  }
  if (scenario == "single-photon-ideal") return scenario_single_photon_ideal();
  if (scenario == "weak-coherent-z-basis") return scenario_weak_coherent(Basis::Z, cutoff);
  if (scenario == "weak-coherent-x-basis") return scenario_weak_coherent(Basis::X, cutoff);
  if (scenario == "random-sweep") return scenario_random_sweep(cutoff);
  std::fprintf(stderr, "unknown scenario '%s'; available:\n", scenario.c_str());
  for (const std::string& s : known) std::fprintf(stderr, "  %s\n", s.c_str());
  return kExitConfig;
}

std::string joined_command(int argc, char** argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i > 0) cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bell-state measurement simulator and decoy-state analysis toolkit"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Run the Monte-Carlo simulator");
  simulate->add_option("--config", sim.config_path, "JSON run configuration");
  simulate->add_option("--set", sim.overrides, "Override a config field, e.g. detectors.0.tau_ns=100");
  simulate->add_option("--seed", sim.seed_text, "Random seed");
  simulate->add_option("--cycles", sim.cycles_text, "Clock cycles to simulate (accepts 1e6)");
  simulate->add_option("--threads", sim.threads, "Worker threads");
  simulate->add_option("--out", sim.out, "Output stem (writes .csv/.json/.manifest.json)");
  simulate->add_option("--format", sim.format, "csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}));

  AnalyzeArgs ana;
  CLI::App* analyze = app.add_subcommand("analyze", "Error rates and efficiencies from counts");
  analyze->add_option("counts", ana.counts_path, "Counts file (.csv or .json)")->required();
  analyze->add_option("--out", ana.out, "Output stem for the JSON report");

  DecoyArgs dec;
  CLI::App* decoy = app.add_subcommand("decoy", "Single-photon bounds from intensity-resolved counts");
  decoy->add_option("counts", dec.counts_path, "Counts file (.csv or .json)")->required();
  decoy->add_option("--cutoff", dec.cutoff, "Photon-number cutoff");
  decoy->add_option("--sigmas", dec.sigmas, "Statistical slack in standard errors");
  decoy->add_option("--basis", dec.basis, "z, x or both")
      ->check(CLI::IsMember({"z", "x", "both"}));
  decoy->add_option("--outcome", dec.outcome, "psiminus, psiplus, combined or all")
      ->check(CLI::IsMember({"psiminus", "psiplus", "combined", "all"}));
  decoy->add_option("--out", dec.out, "Output stem for the JSON bounds");

  DeadtimeArgs dt;
  CLI::App* deadtime = app.add_subcommand("deadtime", "Inter-arrival histogram under dead-time");
  deadtime->add_option("--rate", dt.rate_hz, "Poisson detection rate in Hz")->required();
  deadtime->add_option("--tau", dt.tau_ns, "Dead-time in ns")->required();
  deadtime->add_option("--duration", dt.duration_s, "Simulated duration in seconds")->required();
  deadtime->add_option("--bin-width", dt.bin_width_ns, "Histogram bin width in ns");
  deadtime->add_option("--seed", dt.seed, "Random seed");
  deadtime->add_option("--out", dt.out, "Output stem for the CSV histogram");

  std::string oracle_scenario;
  int oracle_cutoff = 10;
  CLI::App* oracle = app.add_subcommand("oracle", "Analytic model vs photon-number oracle");
  oracle->add_option("scenario", oracle_scenario, "Scenario name (omit to list)");
  oracle->add_option("--cutoff", oracle_cutoff, "Photon-number cutoff for the oracle");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  const std::string command = joined_command(argc, argv);
  try {
    if (simulate->parsed()) return cmd_simulate(sim, command);
    if (analyze->parsed()) return cmd_analyze(ana, command);
    if (decoy->parsed()) return cmd_decoy(dec, command);
    if (deadtime->parsed()) return cmd_deadtime(dt, command);
    if (oracle->parsed()) return cmd_oracle(oracle_scenario, oracle_cutoff);
  } catch (const infeasible_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    std::fprintf(stderr,
                 "hint: the measured gains are mutually inconsistent at this confidence level; "
                 "rerun with a larger --sigmas to widen the statistical windows\n");
    return kExitData;
  } catch (const lp::numerical_error& e) {
    std::fprintf(stderr, "error: numerical failure in the bound solver: %s\n", e.what());
    std::fprintf(stderr,
                 "hint: rerun with a larger --sigmas; wider statistical windows avoid the "
                 "degenerate geometry\n");
    return kExitNumerical;
  } catch (const truncation_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const parse_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const incomplete_data_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const merge_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  } catch (const config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const cli_config_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return 0;
}
