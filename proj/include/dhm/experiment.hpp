#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dhm/diagnostics.hpp"
#include "dhm/io.hpp"

namespace dhm {

struct RunResult {
  Report report;
  std::vector<Series> series;
  std::optional<FieldSnapshot> fields;

  int exit_code() const { return report.pass ? 0 : 1; }
};

/// Grid, target and initial fields resolved from a config (or a snapshot).
struct RunInputs {
  DomainConfig domain;
  TargetConfig target_config;
  DomainGrid grid;
  EmbeddedTarget target;
  RealField phi;
  SpinorField psi;
};

inline Vec default_base_point(const EmbeddedTarget& t) {
  return std::visit(
      [](const auto& tt) -> Vec {
        using T = std::decay_t<decltype(tt)>;
        if constexpr (std::is_same_v<T, Sphere>) {
          return Vec::Unit(tt.ambient_dim(), tt.ambient_dim() - 1);
        } else {
          return tt.embed(0.0, 0.0);
        }
      },
      t);
}

inline Vec base_point(const ExperimentConfig& c, const EmbeddedTarget& t) {
  if (c.init.base.empty()) return default_base_point(t);
  const int q = std::visit([](const auto& tt) { return tt.ambient_dim(); }, t);
  if (int(c.init.base.size()) != q) throw ConfigError("init.base: need one entry per ambient coordinate");
  Vec b(q);
  for (int i = 0; i < q; ++i) b(i) = c.init.base[i];
  std::visit([&](const auto& tt) { require_on_manifold(tt, b); }, t);
  return b;
}

inline RunInputs make_setup(const ExperimentConfig& c, const std::filesystem::path& input = {}) {
  const bool from_file = !input.empty() || c.init.kind == "file";
  if (from_file) {
    FieldSnapshot s = read_snapshot(input.empty() ? std::filesystem::path(c.init.path) : input);
    RunInputs out{s.domain, s.target, make_grid(s.domain), make_target(s.target), std::move(s.phi), std::move(s.psi)};
    std::visit(
        [&](const auto& t) {
          detail::check_fields(t, out.grid, out.phi, &out.psi);
          for (int r = 0; r < out.grid.size(); ++r) require_on_manifold(t, vec_at(out.phi, r));
        },
        out.target);
    return out;
  }
  RunInputs out{c.domain, c.target, make_grid(c.domain), make_target(c.target), {}, {}};
  if (c.init.kind == "geodesic_example") {
    const auto* sphere = std::get_if<Sphere>(&out.target);
    if (!sphere || out.grid.dim() != 1)
      throw ConfigError("init.kind geodesic_example: needs a sphere target on a one-dimensional domain");
    Eigen::VectorXcd chi = Eigen::VectorXcd::Zero(out.grid.spinor_rank());
    if (c.init.chi.empty()) {
      chi(0) = 1.0;
    } else {
      if (int(c.init.chi.size()) != out.grid.spinor_rank())
        throw ConfigError("init.chi: need one complex entry per spinor component");
      for (int a = 0; a < chi.size(); ++a) chi(a) = c.init.chi[a];
    }
    try {
      std::tie(out.phi, out.psi) = make_geodesic_example(*sphere, out.grid, c.init.speed, chi);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("init: ") + e.what());
    }
    return out;
  }
  const Vec base = base_point(c, out.target);
  std::mt19937_64 rng(c.init.seed);
  std::visit(
      [&](const auto& t) {
        out.phi = random_map(t, out.grid, base, c.init.amplitude, c.init.kmax, rng);
        out.psi = random_tangent_spinor(t, out.grid, out.phi, c.init.spinor_amplitude, c.init.kmax, rng);
      },
      out.target);
  return out;
}

namespace detail {

inline Json header(const std::string& command, const RunInputs& s) {
  return Json{{"command", command}, {"domain", to_json(s.domain)}, {"target", to_json(s.target_config)}};
}

inline double expected_geodesic_energy(const ExperimentConfig& c) {
  return std::numbers::pi * c.init.speed * c.init.speed * 2 * std::numbers::pi / c.domain.periods[0];
}

template <TargetGeometry T>
Json residual_block(Report& rep, const T& t, const RunInputs& s, const RealField& phi, const SpinorField& psi,
                    double tol) {
  const DomainGrid& g = s.grid;
  const RealField rp = el_residual_phi(t, g, phi, psi);
  const SpinorField rs = el_residual_psi(t, g, phi, psi);
  const SpinorField rx = el_residual_psi_extrinsic(t, g, phi, psi);
  return Json{{"phi_inf", rep.check("residual.phi_inf", norm_inf(rp), tol)},
              {"psi_inf", rep.check("residual.psi_inf", norm_inf(rs), tol)},
              {"phi_l2", Report::value(norm_l2(g, rp))},
              {"psi_l2", Report::value(norm_l2(g, rs))},
              {"psi_extrinsic_inf", Report::value(norm_inf(rx))}};
}

inline Json energy_json(const EnergyBreakdown& e) {
  return Json{{"dirichlet", Report::value(e.dirichlet)},
              {"dirac", Report::value(e.dirac)},
              {"curvature", Report::value(e.curvature)},
              {"total", Report::value(e.total)},
              {"imag_leak", Report::value(e.imag_leak)}};
}

}  // namespace detail

inline RunResult run_energy(const ExperimentConfig& c) {
  RunResult res;
  const RunInputs s = make_setup(c);
  res.report.body = detail::header("energy", s);
  std::visit(
      [&](const auto& t) {
        const EnergyBreakdown e = energy(t, s.grid, s.phi, s.psi);
        Json ej = detail::energy_json(e);
        if (c.init.kind == "geodesic_example")
          ej["total"] = res.report.check_near("energy.total", e.total, detail::expected_geodesic_energy(c),
                                              c.tolerances.energy);
        res.report.body["energy"] = ej;
      },
      s.target);
  return res;
}

inline RunResult run_residual(const ExperimentConfig& c) {
  RunResult res;
  const RunInputs s = make_setup(c);
  res.report.body = detail::header("residual", s);
  std::visit(
      [&](const auto& t) {
        res.report.body["residuals"] = detail::residual_block(res.report, t, s, s.phi, s.psi, c.tolerances.residual);
        res.report.body["energy"] = detail::energy_json(energy(t, s.grid, s.phi, s.psi));
      },
      s.target);
  return res;
}

/// The explicit circle solution; `speed` overrides init.speed when given.
inline RunResult run_example(ExperimentConfig c, std::optional<int> speed) {
  if (speed) c.init.speed = *speed;
  c.init.kind = "geodesic_example";
  if (c.domain.dim != 1) throw ConfigError("example: the explicit solution lives on a one-dimensional domain");
  RunResult res;
  const RunInputs s = make_setup(c);
  res.report.body = detail::header("example", s);
  res.report.body["speed"] = c.init.speed;
  const Sphere& t = std::get<Sphere>(s.target);
  const EnergyBreakdown e = energy(t, s.grid, s.phi, s.psi);
  Json ej = detail::energy_json(e);
  ej["total"] =
      res.report.check_near("energy.total", e.total, detail::expected_geodesic_energy(c), c.tolerances.energy);
  res.report.body["energy"] = ej;
  res.report.body["residuals"] = detail::residual_block(res.report, t, s, s.phi, s.psi, c.tolerances.residual);
  res.fields = FieldSnapshot{s.domain, s.target_config, s.phi, s.psi};
  return res;
}

inline RunResult run_solve(const ExperimentConfig& c) {
  RunResult res;
  const RunInputs s = make_setup(c);
  res.report.body = detail::header("solve", s);
  Report& rep = res.report;
  std::visit(
      [&](const auto& t) {
        if (c.solver.mode == SolverMode::coupled_least_squares) {
          const SolveResult r = solve(t, s.grid, s.phi, s.psi, c.solver);
          rep.body["solver"] = Json{{"mode", "coupled_least_squares"},
                                    {"iterations", r.report.iterations},
                                    {"converged", rep.check_flag("solver.converged", r.report.converged)},
                                    {"message", r.report.message},
                                    {"residual_phi", rep.check("solver.residual_phi", r.report.residual_phi,
                                                                c.tolerances.solve)},
                                    {"residual_psi", rep.check("solver.residual_psi", r.report.residual_psi,
                                                                c.tolerances.solve)}};
          bool monotone = true;
          for (std::size_t i = 1; i < r.report.residual_trace.size(); ++i)
            monotone = monotone && r.report.residual_trace[i] <= r.report.residual_trace[i - 1];
          rep.body["solver"]["monotone_trace"] = rep.check_flag("solver.monotone_trace", monotone);
          rep.body["energy"] = detail::energy_json(energy(t, s.grid, r.phi, r.psi));
          Series tr{"solver_trace", {"iteration", "residual", "energy", "krylov_iterations"}, {}};
          for (std::size_t i = 0; i < r.report.residual_trace.size(); ++i)
            tr.rows.push_back({double(i), r.report.residual_trace[i],
                               i < r.report.energy_trace.size() ? r.report.energy_trace[i] : std::nan(""),
                               i < r.report.krylov_trace.size() ? double(r.report.krylov_trace[i]) : 0.0});
          res.series.push_back(std::move(tr));
          res.fields = FieldSnapshot{s.domain, s.target_config, r.phi, r.psi};
        } else {
          const Vec base = base_point(c, s.target);
          const NonlinearDiracBranch br = solve_nonlinear_dirac(t, s.grid, base, c.nonlinear_dirac.mode_index,
                                                                c.nonlinear_dirac.amplitude, c.solver);
          bool all_converged = true;
          for (const auto& p : br.points) all_converged = all_converged && p.converged;
          Json sj{{"mode", "nonlinear_dirac_continuation"},
                  {"seed_eigenvalue", br.seed_eigenvalue},
                  {"points", br.points.size()},
                  {"steps_converged", rep.check_flag("branch.steps_converged", all_converged)},
                  {"found_solution", br.found_solution},
                  {"message", br.message}};
          if (br.found_solution) {
            sj["solution"] = Json{{"amplitude", Report::value(br.solution.amplitude)},
                                  {"residual", rep.check("branch.solution_residual", br.solution.residual,
                                                         c.tolerances.solve)},
                                  {"curvature_energy", Report::value(br.solution.curvature_energy)}};
          }
          rep.body["solver"] = sj;
          Series bs{"branch",
                    {"amplitude", "lambda", "augmented_residual", "residual", "curvature_energy", "converged"},
                    {}};
          for (const auto& p : br.points)
            bs.rows.push_back({p.amplitude, p.lambda, p.augmented_residual, p.residual, p.curvature_energy,
                               p.converged ? 1.0 : 0.0});
          res.series.push_back(std::move(bs));
          res.fields =
              FieldSnapshot{s.domain, s.target_config, br.phi, br.found_solution ? br.solution_psi : br.last_psi};
        }
      },
      s.target);
  return res;
}

/// Flat Dirac eigenvalues from the lattice: each wavevector contributes -kappa in
/// dimension 1 and +-|kappa| in dimension 2.
inline std::vector<double> analytic_dirac_spectrum(const DomainGrid& g) {
  std::vector<double> ev;
  const int n1 = g.dim() == 2 ? g.nodes(1) : 1;
  for (int b1 = 0; b1 < n1; ++b1)
    for (int b0 = 0; b0 < g.nodes(0); ++b0) {
      const int b[2] = {b0, b1};
      double k2 = 0.0, k0 = 0.0;
      bool skip = false;
      for (int a = 0; a < g.dim(); ++a) {
        const int k = g.mode_index(a, b[a]);
        const double tw = g.spin().twist[a];
        if (tw == 0.0 && 2 * std::abs(k) == g.nodes(a)) skip = true;
        const double kappa = 2 * std::numbers::pi * (k + tw) / g.period(a);
        k2 += kappa * kappa;
        if (a == 0) k0 = kappa;
      }
      if (skip) continue;
      if (g.dim() == 1) {
        ev.push_back(-k0);
      } else {
        ev.push_back(std::sqrt(k2));
        ev.push_back(-std::sqrt(k2));
      }
    }
  auto key = [](double x) { return std::llround(x * 1e9); };
  std::stable_sort(ev.begin(), ev.end(), [&](double a, double b) {
    if (key(std::abs(a)) != key(std::abs(b))) return key(std::abs(a)) < key(std::abs(b));
    return key(a) > key(b);
  });
  return ev;
}

inline RunResult run_spectrum(const ExperimentConfig& c) {
  RunResult res;
  const DomainGrid g = make_grid(c.domain);
  res.report.body = Json{{"command", "spectrum"}, {"domain", to_json(c.domain)}};
  const std::vector<double> exact = analytic_dirac_spectrum(g);
  const std::size_t count = std::min<std::size_t>(c.spectrum_count, exact.size());
  const std::vector<double> num = dirac_spectrum(g, count);
  Series s{"eigenvalues", {"index", "numeric", "analytic"}, {}};
  double worst = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    worst = std::max(worst, std::abs(num[i] - exact[i]));
    s.rows.push_back({double(i), num[i], exact[i]});
  }
  int zeros = 0;
  for (const DiracMode& m : dirac_modes(g)) zeros += std::abs(m.eigenvalue) < 1e-12;
  const int expected_zeros = g.spin().trivial(g.dim()) ? g.spinor_rank() : 0;
  res.report.body["count"] = count;
  res.report.body["max_error"] = res.report.check("spectrum.max_error", worst, c.tolerances.spectrum);
  res.report.body["zero_modes"] = Json{{"value", zeros},
                                       {"expected", expected_zeros},
                                       {"pass", res.report.check_flag("spectrum.zero_modes", zeros == expected_zeros)["pass"]}};
  res.report.body["smallest_nonzero"] = Report::value(
      [&] {
        for (double e : exact)
          if (std::abs(e) > 1e-12) return std::abs(e);
        return 0.0;
      }());
  res.series.push_back(std::move(s));
  return res;
}

inline Eigen::VectorXd conformal_factor(const DomainGrid& g, double amplitude) {
  Eigen::VectorXd l(g.size());
  for (int r = 0; r < g.size(); ++r)
    l(r) = std::exp(amplitude * std::sin(g.coordinate(r, 0)) * std::cos(g.coordinate(r, 1)));
  return l;
}

/// Identity residuals at the configured fields; conservation laws and Bochner are
/// asserted only where the Euler-Lagrange residuals are below tolerances.solve.
inline RunResult run_diagnostics(const ExperimentConfig& c, const std::filesystem::path& input = {}) {
  RunResult res;
  const RunInputs s = make_setup(c, input);
  Report& rep = res.report;
  rep.body = detail::header("diagnostics", s);
  const DomainGrid& g = s.grid;
  const DiagnosticsConfig& d = c.diagnostics;
  const ToleranceConfig& tol = c.tolerances;
  std::visit(
      [&](const auto& t) {
        const double rphi = norm_l2(g, el_residual_phi(t, g, s.phi, s.psi));
        const double rpsi = norm_l2(g, el_residual_psi(t, g, s.phi, s.psi));
        const bool critical = rphi < tol.solve && rpsi < tol.solve;
        rep.body["residuals"] = Json{{"phi_l2", Report::value(rphi)}, {"psi_l2", Report::value(rpsi)}};
        rep.body["critical"] = critical;
        rep.body["energy"] = detail::energy_json(energy(t, g, s.phi, s.psi));
        if (d.weitzenboeck) {
          const IdentityResidual w = weitzenboeck_residual(t, g, s.phi, s.psi);
          rep.body["weitzenboeck"] = Json{{"relative", rep.check("weitzenboeck", w.relative(), tol.identity)},
                                          {"absolute", Report::value(w.residual)}};
        }
        if (d.bochner) {
          const BochnerResidual b = bochner_residual(t, g, s.phi, s.psi);
          const Json rel = rpsi < tol.solve ? rep.check("bochner", b.relative(), tol.identity)
                                            : Report::value(b.relative());
          rep.body["bochner"] = Json{{"relative", rel},
                                     {"absolute", Report::value(b.residual)},
                                     {"plus_sign_absolute", Report::value(b.residual_plus_sign)}};
        }
        if (d.energy_momentum) {
          const EnergyMomentum em = energy_momentum(t, g, s.phi, s.psi);
          auto entry = [&](const char* name, double v, bool assert_it) {
            return assert_it ? rep.check(std::string("energy_momentum.") + name, v, tol.conservation)
                             : Report::value(v);
          };
          rep.body["energy_momentum"] = Json{{"trace", entry("trace", em.trace_norm, critical && g.dim() == 2)},
                                             {"antisymmetry", entry("antisymmetry", em.antisym_norm, critical)},
                                             {"divergence", entry("divergence", em.div_norm, critical)},
                                             {"imag_leak", Report::value(em.imag_leak)}};
        }
        if (d.hopf && g.dim() == 2) {
          const HopfField h = hopf_differential(g, t, s.phi, s.psi);
          rep.body["hopf"] = Json{
              {"dbar", critical ? rep.check("hopf.dbar", h.dbar_norm, tol.conservation) : Report::value(h.dbar_norm)},
              {"dbar_literal", Report::value(h.dbar_norm_literal)}};
        }
        if (d.conformal && g.dim() == 2) {
          const Eigen::VectorXd two = Eigen::VectorXd::Constant(g.size(), 2.0);
          rep.body["conformal"] = Json{
              {"constant_2", rep.check("conformal.constant", conformal_check(t, g, s.phi, s.psi, two), tol.conformal)},
              {"smooth", rep.check("conformal.smooth",
                                   conformal_check(t, g, s.phi, s.psi, conformal_factor(g, d.conformal_amplitude)),
                                   tol.conformal)},
              {"amplitude", d.conformal_amplitude}};
        }
      },
      s.target);
  return res;
}

/// Rows with eps <= sweep.assert_below are asserted: with no harmonic spinors both
/// norms must vanish; on the sphere dphi must vanish and psi solve its equation.
inline RunResult run_sweep(const ExperimentConfig& c, const std::optional<std::vector<double>>& levels) {
  RunResult res;
  const DomainGrid g = make_grid(c.domain);
  const EmbeddedTarget target = make_target(c.target);
  const std::vector<double> lv = levels ? *levels : c.sweep.levels;
  for (double e : lv)
    if (!(e >= 0)) throw ConfigError("sweep: levels must be non-negative");
  Report& rep = res.report;
  rep.body = Json{{"command", "sweep"}, {"domain", to_json(c.domain)}, {"target", to_json(c.target)}};
  const bool no_zero_modes = !g.spin().trivial(g.dim());
  const bool sphere = std::holds_alternative<Sphere>(target);
  rep.body["regime"] = no_zero_modes ? "no harmonic spinors" : (sphere ? "constant curvature" : "unasserted");
  const Vec base = base_point(c, target);
  std::vector<SweepRow> rows;
  std::visit([&](const auto& t) { rows = vanishing_sweep(t, g, lv, c.solver, base, c.sweep.kmax); }, target);
  Series s{"sweep",
           {"epsilon", "initial_dirichlet", "initial_quartic", "final_dphi", "final_psi", "residual_phi",
            "residual_psi", "iterations", "converged"},
           {}};
  Json jr = Json::array();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const SweepRow& r = rows[k];
    s.rows.push_back({r.epsilon, r.initial_dirichlet, r.initial_quartic, r.final_dphi, r.final_psi, r.residual_phi,
                      r.residual_psi, double(r.iterations), r.converged ? 1.0 : 0.0});
    const bool asserted = r.epsilon <= c.sweep.assert_below && (no_zero_modes || sphere);
    const std::string tag = "sweep[" + std::to_string(k) + "].";
    Json row{{"epsilon", r.epsilon}, {"asserted", asserted}, {"iterations", r.iterations}, {"message", r.message}};
    if (asserted) {
      row["converged"] = rep.check_flag(tag + "converged", r.converged);
      row["final_dphi"] = rep.check(tag + "final_dphi", r.final_dphi, c.tolerances.vanishing);
      if (no_zero_modes)
        row["final_psi"] = rep.check(tag + "final_psi", r.final_psi, c.tolerances.vanishing);
      else
        row["final_psi"] = Report::value(r.final_psi);
      row["residual_psi"] = rep.check(tag + "residual_psi", r.residual_psi, c.tolerances.solve);
    } else {
      row["converged"] = r.converged;
      row["final_dphi"] = Report::value(r.final_dphi);
      row["final_psi"] = Report::value(r.final_psi);
      row["residual_psi"] = Report::value(r.residual_psi);
    }
    jr.push_back(row);
  }
  rep.body["rows"] = jr;
  res.series.push_back(std::move(s));
  return res;
}

inline void write_outputs(const std::filesystem::path& dir, const RunResult& r) {
  std::filesystem::create_directories(dir);
  Json body = r.report.body;
  body["pass"] = r.report.pass;
  body["failures"] = r.report.failures;
  detail::write_json(dir / "report.json", body);
  if (!r.series.empty()) {
    std::filesystem::create_directories(dir / "series");
    for (const Series& s : r.series) write_csv(dir / "series" / (s.name + ".csv"), s);
  }
  if (r.fields) write_snapshot(dir / "fields", *r.fields);
}

}  // namespace dhm
