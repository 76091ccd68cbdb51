#include "bellsim/counts.hpp"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace bellsim {

namespace {

using nlohmann::json;

// mu values are serialized with enough digits to round-trip exactly.
std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

double parse_double_field(const std::string& field, std::size_t line) {
  try {
    std::size_t pos = 0;
    double v = std::stod(field, &pos);
    if (pos != field.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw parse_error("bad numeric field '" + field + "'", line);
  }
}

std::uint64_t parse_u64_field(const std::string& field, std::size_t line) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw parse_error("bad count field '" + field + "'", line);
  }
  return v;
}

}  // namespace

void CountsTable::write_csv(std::ostream& os) const {
  os << "basis,state_a,state_b,mu_a,mu_b,n_cycles,n_psiminus,n_psiplus\n";
  for (const auto& [key, kc] : rows) {
    os << basis_name(key.basis) << ','
       << state_char(key.basis, key.bit_a) << ','
       << state_char(key.basis, key.bit_b) << ','
       << format_double(key.mu_a) << ','
       << format_double(key.mu_b) << ','
       << kc.n_cycles << ','
       << kc.n_psiminus << ','
       << kc.n_psiplus << '\n';
  }
}

CountsTable CountsTable::read_csv(std::istream& is) {
  CountsTable table;
  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(is, line)) throw parse_error("empty input", 1);
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "basis,state_a,state_b,mu_a,mu_b,n_cycles,n_psiminus,n_psiplus") {
    throw parse_error("unexpected header '" + line + "'", lineno);
  }

  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 8) {
      throw parse_error("expected 8 fields, got " + std::to_string(fields.size()), lineno);
    }

    CountsKey key;
    if (fields[0] == "z") {
      key.basis = Basis::Z;
    } else if (fields[0] == "x") {
      key.basis = Basis::X;
    } else {
      throw parse_error("unknown basis '" + fields[0] + "'", lineno);
    }

    auto parse_bit = [&](const std::string& f) -> int {
      if (key.basis == Basis::Z) {
        if (f == "e") return 0;
        if (f == "l") return 1;
      } else {
        if (f == "+") return 0;
        if (f == "-") return 1;
      }
      throw parse_error("unknown state label '" + f + "' for basis " +
                            std::string(basis_name(key.basis)),
                        lineno);
    };
    key.bit_a = parse_bit(fields[1]);
    key.bit_b = parse_bit(fields[2]);
    key.mu_a = parse_double_field(fields[3], lineno);
    key.mu_b = parse_double_field(fields[4], lineno);

    KeyCounts kc;
    kc.n_cycles = parse_u64_field(fields[5], lineno);
    kc.n_psiminus = parse_u64_field(fields[6], lineno);
    kc.n_psiplus = parse_u64_field(fields[7], lineno);
    if (kc.n_psiminus + kc.n_psiplus > kc.n_cycles) {
      throw parse_error("projection counts exceed cycle count", lineno);
    }

    auto [it, inserted] = table.rows.emplace(key, kc);
    if (!inserted) throw parse_error("duplicate key", lineno);
    (void)it;
  }
  return table;
}

std::string CountsTable::to_json_string() const {
  json j;
  j["meta"] = {
      {"version", meta.version},
      {"config_digest", meta.config_digest},
      {"seeds", meta.seeds},
      {"total_cycles", meta.total_cycles},
  };
  if (!meta.config_json.empty()) {
    j["meta"]["config"] = json::parse(meta.config_json);
  }
  j["rows"] = json::array();
  for (const auto& [key, kc] : rows) {
    json row = {
        {"basis", basis_name(key.basis)},
        {"state_a", std::string(1, state_char(key.basis, key.bit_a))},
        {"state_b", std::string(1, state_char(key.basis, key.bit_b))},
        {"mu_a", key.mu_a},
        {"mu_b", key.mu_b},
        {"n_cycles", kc.n_cycles},
        {"n_psiminus", kc.n_psiminus},
        {"n_psiplus", kc.n_psiplus},
        {"patterns", kc.patterns},
    };
    j["rows"].push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

CountsTable CountsTable::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw parse_error(std::string("invalid JSON: ") + e.what(), 0);
  }
  try {
    CountsTable table;
    const auto& m = j.at("meta");
    table.meta.version = m.at("version").get<std::string>();
    table.meta.config_digest = m.at("config_digest").get<std::string>();
    table.meta.seeds = m.at("seeds").get<std::vector<std::uint64_t>>();
    table.meta.total_cycles = m.at("total_cycles").get<std::uint64_t>();
    if (m.contains("config")) table.meta.config_json = m.at("config").dump();

    for (const auto& row : j.at("rows")) {
      CountsKey key;
      const auto basis = row.at("basis").get<std::string>();
      if (basis == "z") {
        key.basis = Basis::Z;
      } else if (basis == "x") {
        key.basis = Basis::X;
      } else {
        throw parse_error("unknown basis '" + basis + "'", 0);
      }
      auto parse_bit = [&](const std::string& f) -> int {
        if (key.basis == Basis::Z) {
          if (f == "e") return 0;
          if (f == "l") return 1;
        } else {
          if (f == "+") return 0;
          if (f == "-") return 1;
        }
        throw parse_error("unknown state label '" + f + "'", 0);
      };
      key.bit_a = parse_bit(row.at("state_a").get<std::string>());
      key.bit_b = parse_bit(row.at("state_b").get<std::string>());
      key.mu_a = row.at("mu_a").get<double>();
      key.mu_b = row.at("mu_b").get<double>();

      KeyCounts kc;
      kc.n_cycles = row.at("n_cycles").get<std::uint64_t>();
      kc.n_psiminus = row.at("n_psiminus").get<std::uint64_t>();
      kc.n_psiplus = row.at("n_psiplus").get<std::uint64_t>();
      if (row.contains("patterns")) {
        const auto& pats = row.at("patterns");
        if (pats.size() != 16) throw parse_error("pattern histogram must have 16 entries", 0);
        for (std::size_t i = 0; i < 16; ++i) kc.patterns[i] = pats[i].get<std::uint64_t>();
      }
      if (!table.rows.emplace(key, kc).second) throw parse_error("duplicate key", 0);
    }
    return table;
  } catch (const json::exception& e) {
    throw parse_error(std::string("bad counts document: ") + e.what(), 0);
  }
}

CountsTable merge(const CountsTable& a, const CountsTable& b) {
  if (!a.meta.config_digest.empty() && !b.meta.config_digest.empty() &&
      a.meta.config_digest != b.meta.config_digest) {
    throw merge_error("cannot merge counts from different configurations (digest " +
                      a.meta.config_digest + " vs " + b.meta.config_digest + ")");
  }
  CountsTable out = a;
  if (out.meta.config_digest.empty()) out.meta.config_digest = b.meta.config_digest;
  if (out.meta.version.empty()) out.meta.version = b.meta.version;
  if (out.meta.config_json.empty()) out.meta.config_json = b.meta.config_json;
  out.meta.seeds.insert(out.meta.seeds.end(), b.meta.seeds.begin(), b.meta.seeds.end());
  out.meta.total_cycles += b.meta.total_cycles;
  for (const auto& [key, kc] : b.rows) {
    auto& dst = out.rows[key];
    dst.n_cycles += kc.n_cycles;
    dst.n_psiminus += kc.n_psiminus;
    dst.n_psiplus += kc.n_psiplus;
    for (std::size_t i = 0; i < 16; ++i) dst.patterns[i] += kc.patterns[i];
  }
  return out;
}

}  // namespace bellsim
