#pragma once

// Run configuration and bit-stable table output for the command-line front end.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "neumann/error.hpp"
#include "neumann/model.hpp"

namespace neumann {

#ifndef NEUMANN_VERSION
#define NEUMANN_VERSION "0.0.0"
#endif

inline constexpr const char* kVersion = NEUMANN_VERSION;
inline constexpr int kSchemaVersion = 1;

/// Round-trip exact text for a double: 17 significant digits.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// 64-bit FNV-1a hash as 16 hex digits.
inline std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// A table cell: either a number (written with 17 digits) or text.
struct Cell {
  std::optional<double> number;
  std::string text;

  Cell(double v) : number(v) {}
  Cell(int v) : number(static_cast<double>(v)) {}
  Cell(std::string s) : text(std::move(s)) {}
  Cell(const char* s) : text(s) {}

  std::string csv() const { return number ? format_double(*number) : text; }
};

struct Table {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void meta(std::string key, std::string value) { metadata.emplace_back(std::move(key), std::move(value)); }

  void add(std::vector<Cell> row) {
    if (row.size() != columns.size())
      throw std::logic_error("table row has " + std::to_string(row.size()) + " cells for " +
                             std::to_string(columns.size()) + " columns");
    rows.push_back(std::move(row));
  }
};

enum class Format { csv, json };

inline void write_csv(std::ostream& os, const Table& t) {
  for (const auto& [k, v] : t.metadata) os << "# " << k << ": " << v << '\n';
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << t.columns[c];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << row[c].csv();
    os << '\n';
  }
}

/// JSON with numbers written as 17-digit literals; non-finite values become null.
inline void write_json(std::ostream& os, const Table& t) {
  auto str = [](const std::string& s) { return nlohmann::json(s).dump(); };
  auto num = [](double v) { return std::isfinite(v) ? format_double(v) : std::string("null"); };
  os << "{\n  \"metadata\": {";
  for (std::size_t k = 0; k < t.metadata.size(); ++k)
    os << (k ? ", " : "") << str(t.metadata[k].first) << ": " << str(t.metadata[k].second);
  os << "},\n  \"columns\": [";
  for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? ", " : "") << str(t.columns[c]);
  os << "],\n  \"rows\": [";
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    os << (r ? ",\n    [" : "\n    [");
    for (std::size_t c = 0; c < t.rows[r].size(); ++c) {
      const Cell& cell = t.rows[r][c];
      os << (c ? ", " : "") << (cell.number ? num(*cell.number) : str(cell.text));
    }
    os << ']';
  }
  os << (t.rows.empty() ? "]\n}\n" : "\n  ]\n}\n");
}

inline void write_table(const std::string& path, const Table& t, Format f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  if (f == Format::csv)
    write_csv(os, t);
  else
    write_json(os, t);
  if (!os) throw std::runtime_error("write to " + path + " failed");
}

/// Integration controls of a run.
struct IntegrationConfig {
  double t_end = 10.0;
  double dt = 1e-2;
  double rtol = 1e-10;
  bool adaptive = true;
  int record_every = 1;
};

/// Experiment parameters shared by the atlas and action commands.
struct ExperimentConfig {
  std::vector<double> h;
  std::vector<std::vector<double>> j;
  std::vector<double> w;
  std::vector<double> rho;
  int samples = 100;
  int pairs = 100;
  int grid = 20;
};

struct RunConfig {
  std::vector<double> b;
  std::vector<int> m;
  std::optional<std::vector<double>> x, y;
  std::optional<std::vector<double>> xi, eta, w;
  IntegrationConfig integration;
  ExperimentConfig experiment;
  std::uint64_t seed = 1;
  std::string canonical;  // normalised JSON text, the input of the config hash

  SpectrumSpec spectrum() const { return validate_spectrum(b, m); }
  bool has_phase_point() const { return x.has_value(); }
  bool has_reduced_point() const { return xi.has_value(); }
  std::string hash() const { return fnv1a_hex(canonical); }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
  std::set<std::string> ok(known.begin(), known.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(where + "." + it.key() + ": unknown field");
}

inline const json& object_at(const json& parent, const std::string& key, const std::string& where) {
  const json& v = parent.at(key);
  if (!v.is_object()) throw ConfigError(where + "." + key + ": expected an object");
  return v;
}

inline double number_at(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + ": expected a number, got " + v.dump());
  return v.get<double>();
}

inline int int_at(const json& v, const std::string& where, int min_value) {
  if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer, got " + v.dump());
  const auto n = v.get<long long>();
  if (n < min_value || n > 1'000'000'000) throw ConfigError(where + ": value " + v.dump() + " out of range");
  return static_cast<int>(n);
}

inline std::vector<double> numbers_at(const json& v, const std::string& where) {
  if (!v.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); ++k) out.push_back(number_at(v[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

inline std::vector<double> numbers_or_scalar(const json& v, const std::string& where) {
  return v.is_array() ? numbers_at(v, where) : std::vector<double>{number_at(v, where)};
}

} // namespace detail

/// Parses and validates a configuration document. Every failure is a
/// ConfigError naming the offending field.
inline RunConfig parse_config(const nlohmann::json& doc) {
  using detail::json;
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  detail::reject_unknown(doc, "config",
                         {"schema_version", "spectrum", "initial", "integration", "experiment", "seed", "comment"});
  if (!doc.contains("schema_version")) throw ConfigError("config.schema_version: missing");
  const int version = detail::int_at(doc["schema_version"], "config.schema_version", 0);
  if (version != kSchemaVersion)
    throw ConfigError("config.schema_version: " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  if (!doc.contains("spectrum")) throw ConfigError("config.spectrum: missing");

  RunConfig cfg;
  const json& spec = detail::object_at(doc, "spectrum", "config");
  detail::reject_unknown(spec, "config.spectrum", {"b", "m"});
  if (!spec.contains("b")) throw ConfigError("config.spectrum.b: missing");
  cfg.b = detail::numbers_at(spec["b"], "config.spectrum.b");
  if (spec.contains("m")) {
    if (!spec["m"].is_array()) throw ConfigError("config.spectrum.m: expected an array of integers");
    for (std::size_t k = 0; k < spec["m"].size(); ++k)
      cfg.m.push_back(detail::int_at(spec["m"][k], "config.spectrum.m[" + std::to_string(k) + "]", 1));
  } else {
    cfg.m.assign(cfg.b.size(), 1);
  }
  try {
    (void)cfg.spectrum();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config.") + e.what());
  }
  const SpectrumSpec s = cfg.spectrum();

  if (doc.contains("initial")) {
    const json& ini = detail::object_at(doc, "initial", "config");
    detail::reject_unknown(ini, "config.initial", {"x", "y", "xi", "eta", "w"});
    auto read = [&](const char* key, Eigen::Index n) {
      std::optional<std::vector<double>> out;
      if (!ini.contains(key)) return out;
      out = detail::numbers_at(ini[key], std::string("config.initial.") + key);
      if (static_cast<Eigen::Index>(out->size()) != n)
        throw ConfigError(std::string("config.initial.") + key + ": expected " + std::to_string(n) + " entries, got " +
                          std::to_string(out->size()));
      return out;
    };
    cfg.x = read("x", s.dimension());
    cfg.y = read("y", s.dimension());
    cfg.xi = read("xi", s.block_count());
    cfg.eta = read("eta", s.block_count());
    cfg.w = read("w", s.block_count());
    if (cfg.x.has_value() != cfg.y.has_value()) throw ConfigError("config.initial: x and y must be given together");
    if (cfg.xi.has_value() != cfg.eta.has_value())
      throw ConfigError("config.initial: xi and eta must be given together");
    if (cfg.x && cfg.xi) throw ConfigError("config.initial: give either (x, y) or (xi, eta, w), not both");
    if (cfg.xi && !cfg.w) cfg.w = std::vector<double>(static_cast<std::size_t>(s.block_count()), 0.0);
  }

  if (doc.contains("integration")) {
    const json& in = detail::object_at(doc, "integration", "config");
    detail::reject_unknown(in, "config.integration", {"t_end", "dt", "rtol", "adaptive", "record_every"});
    IntegrationConfig& ic = cfg.integration;
    if (in.contains("t_end")) ic.t_end = detail::number_at(in["t_end"], "config.integration.t_end");
    if (in.contains("dt")) ic.dt = detail::number_at(in["dt"], "config.integration.dt");
    if (in.contains("rtol")) ic.rtol = detail::number_at(in["rtol"], "config.integration.rtol");
    if (in.contains("record_every"))
      ic.record_every = detail::int_at(in["record_every"], "config.integration.record_every", 1);
    if (in.contains("adaptive")) {
      if (!in["adaptive"].is_boolean()) throw ConfigError("config.integration.adaptive: expected true or false");
      ic.adaptive = in["adaptive"].get<bool>();
    }
    if (!(ic.t_end > 0.0)) throw ConfigError("config.integration.t_end: must be positive");
    if (!(ic.dt > 0.0)) throw ConfigError("config.integration.dt: must be positive");
    if (!(ic.rtol > 0.0)) throw ConfigError("config.integration.rtol: must be positive");
  }

  if (doc.contains("experiment")) {
    const json& ex = detail::object_at(doc, "experiment", "config");
    detail::reject_unknown(ex, "config.experiment", {"h", "j", "w", "rho", "samples", "pairs", "grid"});
    ExperimentConfig& ec = cfg.experiment;
    if (ex.contains("h")) ec.h = detail::numbers_or_scalar(ex["h"], "config.experiment.h");
    if (ex.contains("j")) {
      const json& j = ex["j"];
      if (!j.is_array() || j.empty()) throw ConfigError("config.experiment.j: expected a nonempty array");
      if (j[0].is_array()) {
        for (std::size_t k = 0; k < j.size(); ++k)
          ec.j.push_back(detail::numbers_at(j[k], "config.experiment.j[" + std::to_string(k) + "]"));
      } else {
        ec.j.push_back(detail::numbers_at(j, "config.experiment.j"));
      }
      for (std::size_t k = 0; k < ec.j.size(); ++k)
        if (static_cast<int>(ec.j[k].size()) != s.block_count())
          throw ConfigError("config.experiment.j[" + std::to_string(k) + "]: expected " +
                            std::to_string(s.block_count()) + " entries");
    }
    if (ex.contains("w")) {
      ec.w = detail::numbers_at(ex["w"], "config.experiment.w");
      if (static_cast<int>(ec.w.size()) != s.block_count())
        throw ConfigError("config.experiment.w: expected " + std::to_string(s.block_count()) + " entries");
    }
    if (ex.contains("rho")) {
      ec.rho = detail::numbers_at(ex["rho"], "config.experiment.rho");
      if (static_cast<int>(ec.rho.size()) != s.ell())
        throw ConfigError("config.experiment.rho: expected " + std::to_string(s.ell()) + " entries");
    }
    if (ex.contains("samples")) ec.samples = detail::int_at(ex["samples"], "config.experiment.samples", 2);
    if (ex.contains("pairs")) ec.pairs = detail::int_at(ex["pairs"], "config.experiment.pairs", 0);
    if (ex.contains("grid")) ec.grid = detail::int_at(ex["grid"], "config.experiment.grid", 1);
  }

  if (doc.contains("seed")) {
    const json& sd = doc["seed"];
    if (!sd.is_number_unsigned()) throw ConfigError("config.seed: expected a nonnegative integer");
    cfg.seed = sd.get<std::uint64_t>();
  }
  cfg.canonical = doc.dump();
  return cfg;
}

inline RunConfig parse_config_text(const std::string& text, const std::string& origin = "config") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return parse_config(doc);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot read config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

} // namespace neumann
