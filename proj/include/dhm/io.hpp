#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dhm/grid.hpp"
#include "dhm/solver.hpp"
#include "dhm/target.hpp"

namespace dhm {

using Json = nlohmann::ordered_json;

/// Malformed or inconsistent configuration; the message names the offending key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DomainConfig {
  int dim = 1;
  std::vector<int> nodes{64};
  std::vector<double> periods{2 * std::numbers::pi};
  SpinStructure spin;
};

struct TargetConfig {
  std::string kind = "sphere";
  int sphere_dim = 2;
  double major = 2.0;
  double minor = 1.0;
};

struct InitConfig {
  std::string kind = "random";  // geodesic_example | random | file
  std::uint64_t seed = 1;
  double amplitude = 0.1;
  double spinor_amplitude = 0.1;
  int kmax = 2;
  std::vector<double> base;  // empty: target default
  int speed = 1;
  std::vector<cd> chi;  // empty: unit first component
  std::string path;
};

struct DiagnosticsConfig {
  bool energy_momentum = true;
  bool hopf = true;
  bool weitzenboeck = true;
  bool bochner = true;
  bool conformal = true;
  double conformal_amplitude = 0.3;  // lambda = exp(a sin x cos y)
};

struct ToleranceConfig {
  double residual = 1e-10;  // analytic configurations
  double solve = 1e-8;      // solver output
  double energy = 1e-9;
  double conservation = 1e-6;
  double identity = 1e-8;
  double conformal = 1e-10;
  double spectrum = 1e-10;
  double vanishing = 1e-6;
};

struct SweepConfig {
  std::vector<double> levels{1e-4, 1e-3, 1e-2};
  double assert_below = 1e-2;  // rows with larger eps are recorded only
  int kmax = 2;
};

struct NonlinearDiracConfig {
  int mode_index = 0;
  double amplitude = 1.0;
};

struct ExperimentConfig {
  DomainConfig domain;
  TargetConfig target;
  InitConfig init;
  SolverOptions solver;
  DiagnosticsConfig diagnostics;
  ToleranceConfig tolerances;
  SweepConfig sweep;
  NonlinearDiracConfig nonlinear_dirac;
  int spectrum_count = 16;
  std::string output_dir;
};

namespace detail {

inline void require_keys(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw ConfigError(path + ": unknown key '" + it.key() + "'");
}

template <class V>
void read(const Json& j, const char* key, V& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path + "." + key + ": wrong type");
  }
}

inline double parse_twist(const Json& v, const std::string& path) {
  if (v.is_string()) {
    if (v == "periodic") return 0.0;
    if (v == "antiperiodic") return 0.5;
  } else if (v.is_number()) {
    return v.get<double>();
  }
  throw ConfigError(path + ": spin must be 'periodic', 'antiperiodic', 0 or 0.5");
}

inline Json spin_json(const SpinStructure& s, int dim) {
  Json a = Json::array();
  for (int i = 0; i < dim; ++i) a.push_back(s.twist[i] == 0.0 ? "periodic" : "antiperiodic");
  return a;
}

}  // namespace detail

inline DomainConfig parse_domain(const Json& j, const std::string& path = "domain") {
  detail::require_keys(j, path, {"dim", "nodes", "periods", "spin"});
  DomainConfig d;
  detail::read(j, "dim", d.dim, path);
  if (d.dim != 1 && d.dim != 2) throw ConfigError(path + ".dim: must be 1 or 2, got " + std::to_string(d.dim));
  d.nodes.assign(d.dim, 64);
  d.periods.assign(d.dim, 2 * std::numbers::pi);
  detail::read(j, "nodes", d.nodes, path);
  detail::read(j, "periods", d.periods, path);
  if (int(d.nodes.size()) != d.dim) throw ConfigError(path + ".nodes: need one entry per dimension");
  if (int(d.periods.size()) != d.dim) throw ConfigError(path + ".periods: need one entry per dimension");
  if (j.contains("spin")) {
    const Json& s = j.at("spin");
    if (s.is_array()) {
      if (int(s.size()) != d.dim) throw ConfigError(path + ".spin: need one entry per dimension");
      for (int a = 0; a < d.dim; ++a) d.spin.twist[a] = detail::parse_twist(s[a], path + ".spin");
    } else {
      const double t = detail::parse_twist(s, path + ".spin");
      for (int a = 0; a < d.dim; ++a) d.spin.twist[a] = t;
    }
  }
  return d;
}

inline TargetConfig parse_target(const Json& j, const std::string& path = "target") {
  detail::require_keys(j, path, {"kind", "params"});
  TargetConfig t;
  detail::read(j, "kind", t.kind, path);
  const Json params = j.value("params", Json::object());
  if (t.kind == "sphere") {
    detail::require_keys(params, path + ".params", {"dim"});
    detail::read(params, "dim", t.sphere_dim, path + ".params");
  } else if (t.kind == "torus") {
    detail::require_keys(params, path + ".params", {"major", "minor"});
    detail::read(params, "major", t.major, path + ".params");
    detail::read(params, "minor", t.minor, path + ".params");
  } else {
    throw ConfigError(path + ".kind: unknown target '" + t.kind + "'");
  }
  return t;
}

inline SolverOptions parse_solver(const Json& j, const std::string& path = "solver") {
  detail::require_keys(j, path,
                       {"max_iter", "tol_residual", "step0", "backtrack", "seed", "mode", "max_backtracks",
                        "gmres_restart", "gmres_max_iter", "gmres_rtol", "fd_step"});
  SolverOptions o;
  detail::read(j, "max_iter", o.max_iter, path);
  detail::read(j, "tol_residual", o.tol_residual, path);
  detail::read(j, "step0", o.step0, path);
  detail::read(j, "backtrack", o.backtrack, path);
  detail::read(j, "seed", o.seed, path);
  detail::read(j, "max_backtracks", o.max_backtracks, path);
  detail::read(j, "gmres_restart", o.gmres_restart, path);
  detail::read(j, "gmres_max_iter", o.gmres_max_iter, path);
  detail::read(j, "gmres_rtol", o.gmres_rtol, path);
  detail::read(j, "fd_step", o.fd_step, path);
  std::string mode = "coupled_least_squares";
  detail::read(j, "mode", mode, path);
  if (mode == "coupled_least_squares")
    o.mode = SolverMode::coupled_least_squares;
  else if (mode == "nonlinear_dirac_continuation")
    o.mode = SolverMode::nonlinear_dirac_continuation;
  else
    throw ConfigError(path + ".mode: unknown mode '" + mode + "'");
  try {
    o.validate();
  } catch (const DomainError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return o;
}

inline InitConfig parse_init(const Json& j, const std::string& path = "init") {
  detail::require_keys(j, path,
                       {"kind", "seed", "amplitude", "spinor_amplitude", "kmax", "base", "speed", "chi", "path"});
  InitConfig c;
  detail::read(j, "kind", c.kind, path);
  if (c.kind != "geodesic_example" && c.kind != "random" && c.kind != "file")
    throw ConfigError(path + ".kind: must be geodesic_example, random or file");
  detail::read(j, "seed", c.seed, path);
  detail::read(j, "amplitude", c.amplitude, path);
  detail::read(j, "spinor_amplitude", c.spinor_amplitude, path);
  detail::read(j, "kmax", c.kmax, path);
  detail::read(j, "base", c.base, path);
  detail::read(j, "speed", c.speed, path);
  detail::read(j, "path", c.path, path);
  if (j.contains("chi")) {
    std::vector<std::array<double, 2>> raw;
    detail::read(j, "chi", raw, path);
    for (const auto& z : raw) c.chi.emplace_back(z[0], z[1]);
  }
  if (c.kmax < 0) throw ConfigError(path + ".kmax: must be non-negative");
  if (c.kind == "file" && c.path.empty()) throw ConfigError(path + ".path: required for kind 'file'");
  return c;
}

inline ExperimentConfig parse_config(const Json& j) {
  detail::require_keys(j, "config",
                       {"domain", "target", "init", "solver", "diagnostics", "tolerances", "sweep",
                        "nonlinear_dirac", "spectrum", "output"});
  ExperimentConfig c;
  if (j.contains("domain")) c.domain = parse_domain(j["domain"]);
  if (j.contains("target")) c.target = parse_target(j["target"]);
  if (j.contains("init")) c.init = parse_init(j["init"]);
  if (j.contains("solver")) c.solver = parse_solver(j["solver"]);
  if (j.contains("diagnostics")) {
    const Json& d = j["diagnostics"];
    detail::require_keys(d, "diagnostics",
                         {"energy_momentum", "hopf", "weitzenboeck", "bochner", "conformal", "conformal_amplitude"});
    detail::read(d, "energy_momentum", c.diagnostics.energy_momentum, "diagnostics");
    detail::read(d, "hopf", c.diagnostics.hopf, "diagnostics");
    detail::read(d, "weitzenboeck", c.diagnostics.weitzenboeck, "diagnostics");
    detail::read(d, "bochner", c.diagnostics.bochner, "diagnostics");
    detail::read(d, "conformal", c.diagnostics.conformal, "diagnostics");
    detail::read(d, "conformal_amplitude", c.diagnostics.conformal_amplitude, "diagnostics");
  }
  if (j.contains("tolerances")) {
    const Json& t = j["tolerances"];
    detail::require_keys(t, "tolerances",
                         {"residual", "solve", "energy", "conservation", "identity", "conformal", "spectrum",
                          "vanishing"});
    auto& o = c.tolerances;
    for (auto [k, v] : {std::pair{"residual", &o.residual}, {"solve", &o.solve}, {"energy", &o.energy},
                        {"conservation", &o.conservation}, {"identity", &o.identity}, {"conformal", &o.conformal},
                        {"spectrum", &o.spectrum}, {"vanishing", &o.vanishing}}) {
      detail::read(t, k, *v, "tolerances");
      if (!(*v > 0)) throw ConfigError(std::string("tolerances.") + k + ": must be positive");
    }
  }
  if (j.contains("sweep")) {
    const Json& s = j["sweep"];
    detail::require_keys(s, "sweep", {"levels", "assert_below", "kmax"});
    detail::read(s, "levels", c.sweep.levels, "sweep");
    detail::read(s, "assert_below", c.sweep.assert_below, "sweep");
    detail::read(s, "kmax", c.sweep.kmax, "sweep");
    for (double e : c.sweep.levels)
      if (!(e >= 0)) throw ConfigError("sweep.levels: levels must be non-negative");
  }
  if (j.contains("nonlinear_dirac")) {
    const Json& s = j["nonlinear_dirac"];
    detail::require_keys(s, "nonlinear_dirac", {"mode_index", "amplitude"});
    detail::read(s, "mode_index", c.nonlinear_dirac.mode_index, "nonlinear_dirac");
    detail::read(s, "amplitude", c.nonlinear_dirac.amplitude, "nonlinear_dirac");
  }
  if (j.contains("spectrum")) {
    detail::require_keys(j["spectrum"], "spectrum", {"count"});
    detail::read(j["spectrum"], "count", c.spectrum_count, "spectrum");
    if (c.spectrum_count < 1) throw ConfigError("spectrum.count: must be positive");
  }
  if (j.contains("output")) {
    detail::require_keys(j["output"], "output", {"dir"});
    detail::read(j["output"], "dir", c.output_dir, "output");
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file " + file.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j);
}

/// DHC_SEED replaces both the initial-data seed and the solver seed.
inline void apply_seed_override(ExperimentConfig& c, const char* env) {
  if (!env || !*env) return;
  try {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(env, &used);
    if (used != std::strlen(env)) throw std::invalid_argument("trailing characters");
    c.init.seed = c.solver.seed = s;
  } catch (const std::exception&) {
    throw ConfigError(std::string("DHC_SEED: not an unsigned integer: ") + env);
  }
}

inline DomainGrid make_grid(const DomainConfig& d) {
  try {
    return make_grid(d.dim, d.nodes, d.periods, d.spin);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("domain: ") + e.what());
  }
}

inline EmbeddedTarget make_target(const TargetConfig& t) {
  try {
    if (t.kind == "sphere") return Sphere(t.sphere_dim);
    return TorusOfRevolution(t.major, t.minor);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("target: ") + e.what());
  }
}

inline Json to_json(const DomainConfig& d) {
  return Json{{"dim", d.dim}, {"nodes", d.nodes}, {"periods", d.periods}, {"spin", detail::spin_json(d.spin, d.dim)}};
}

inline Json to_json(const TargetConfig& t) {
  if (t.kind == "sphere") return Json{{"kind", "sphere"}, {"params", {{"dim", t.sphere_dim}}}};
  return Json{{"kind", "torus"}, {"params", {{"major", t.major}, {"minor", t.minor}}}};
}

/// A reported number together with the threshold it was compared against.
/// Unasserted values carry null tolerance and pass fields.
struct Report {
  Json body = Json::object();
  bool pass = true;
  std::vector<std::string> failures;

  static Json value(double v) {
    return Json{{"value", std::isfinite(v) ? Json(v) : Json(nullptr)}, {"tolerance", nullptr}, {"pass", nullptr}};
  }

  /// |v| < tol, with `name` recorded on failure.
  Json check(const std::string& name, double v, double tol) {
    const bool ok = std::isfinite(v) && std::abs(v) < tol;
    if (!ok) {
      pass = false;
      failures.push_back(name);
    }
    return Json{{"value", std::isfinite(v) ? Json(v) : Json(nullptr)}, {"tolerance", tol}, {"pass", ok}};
  }

  /// |v - expected| < tol.
  Json check_near(const std::string& name, double v, double expected, double tol) {
    Json j = check(name, v - expected, tol);
    j["error"] = j["value"];
    j["value"] = v;
    j["expected"] = expected;
    return j;
  }

  Json check_flag(const std::string& name, bool ok) {
    if (!ok) {
      pass = false;
      failures.push_back(name);
    }
    return Json{{"value", ok}, {"tolerance", nullptr}, {"pass", ok}};
  }
};

struct Series {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::string format_number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(const std::filesystem::path& file, const Series& s) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  for (std::size_t i = 0; i < s.header.size(); ++i) out << (i ? "," : "") << s.header[i];
  out << "\n";
  for (const auto& row : s.rows) {
    if (row.size() != s.header.size()) throw std::logic_error("csv row width differs from header in " + s.name);
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << "\n";
  }
}

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (std::size_t pos; (pos = line.find(',', start)) != std::string::npos; start = pos + 1)
      cells.push_back(line.substr(start, pos - start));
    cells.push_back(line.substr(start));
    rows.push_back(std::move(cells));
  }
  return rows;
}

/// Map and vector spinor with the descriptors needed to rebuild the grid and target.
struct FieldSnapshot {
  DomainConfig domain;
  TargetConfig target;
  RealField phi;
  SpinorField psi;
};

namespace detail {

inline void write_le_doubles(std::ofstream& out, const double* data, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(data[i]);
    unsigned char b[8];
    for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
    out.write(reinterpret_cast<const char*>(b), 8);
  }
}

inline std::vector<double> read_le_doubles(const std::filesystem::path& file, std::size_t count) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error(file.string() + ": truncated field file");
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= std::uint64_t(b[k]) << (8 * k);
    v[i] = std::bit_cast<double>(bits);
  }
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error(file.string() + ": trailing bytes");
  return v;
}

inline Json sidecar(const FieldSnapshot& s, const std::string& name, const char* dtype, Eigen::Index cols) {
  return Json{{"name", name},
              {"dtype", dtype},
              {"byte_order", "little"},
              {"layout", "node-major"},
              {"rows", s.phi.rows()},
              {"cols", cols},
              {"domain", to_json(s.domain)},
              {"target", to_json(s.target)}};
}

inline void write_json(const std::filesystem::path& file, const Json& j) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << "\n";
}

inline Json read_json(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

}  // namespace detail

/// Writes phi.bin/phi.json and psi.bin/psi.json into `dir`. Rows are nodes
/// (r = i0 + n0 i1); psi stores (re, im) pairs with column i * s + sigma.
inline void write_snapshot(const std::filesystem::path& dir, const FieldSnapshot& s) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "phi.bin", std::ios::binary);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = s.phi;
    detail::write_le_doubles(out, rm.data(), std::size_t(rm.size()));
  }
  {
    std::ofstream out(dir / "psi.bin", std::ios::binary);
    const Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = s.psi;
    detail::write_le_doubles(out, reinterpret_cast<const double*>(rm.data()), 2 * std::size_t(rm.size()));
  }
  detail::write_json(dir / "phi.json", detail::sidecar(s, "phi", "float64", s.phi.cols()));
  detail::write_json(dir / "psi.json", detail::sidecar(s, "psi", "complex128", s.psi.cols()));
}

inline FieldSnapshot read_snapshot(const std::filesystem::path& dir) {
  const Json pj = detail::read_json(dir / "phi.json");
  const Json sj = detail::read_json(dir / "psi.json");
  FieldSnapshot s;
  s.domain = parse_domain(pj.at("domain"), "phi.json.domain");
  s.target = parse_target(pj.at("target"), "phi.json.target");
  if (sj.at("domain") != pj.at("domain") || sj.at("target") != pj.at("target"))
    throw ConfigError(dir.string() + ": phi and psi sidecars describe different configurations");
  if (pj.value("byte_order", "") != "little" || sj.value("byte_order", "") != "little")
    throw ConfigError(dir.string() + ": only little-endian field files are supported");
  const Eigen::Index n = pj.at("rows").get<Eigen::Index>(), q = pj.at("cols").get<Eigen::Index>();
  const Eigen::Index sq = sj.at("cols").get<Eigen::Index>();
  if (sj.at("rows").get<Eigen::Index>() != n) throw ConfigError(dir.string() + ": row counts differ");
  const std::vector<double> pv = detail::read_le_doubles(dir / "phi.bin", std::size_t(n * q));
  const std::vector<double> sv = detail::read_le_doubles(dir / "psi.bin", std::size_t(2 * n * sq));
  s.phi = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(pv.data(), n, q);
  s.psi = Eigen::Map<const Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      reinterpret_cast<const cd*>(sv.data()), n, sq);
  return s;
}

}  // namespace dhm
