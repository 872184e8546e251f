#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "dhm/energy.hpp"
#include "dhm/gmres.hpp"

namespace dhm {

enum class SolverMode { coupled_least_squares, nonlinear_dirac_continuation };

struct SolverOptions {
  int max_iter = 100;
  double tol_residual = 1e-10;
  double step0 = 1.0;
  double backtrack = 0.5;
  std::uint64_t seed = 1;
  SolverMode mode = SolverMode::coupled_least_squares;
  int max_backtracks = 40;
  int gmres_restart = 80;
  int gmres_max_iter = 400;
  double gmres_rtol = 1e-6;
  double fd_step = 1e-6;

  void validate() const {
    if (!(tol_residual > 0)) throw DomainError("tol_residual must be positive");
    if (!(backtrack > 0 && backtrack < 1)) throw DomainError("backtracking factor must lie in (0,1)");
    if (!(step0 > 0)) throw DomainError("step0 must be positive");
    if (max_iter < 0) throw DomainError("max_iter must be non-negative");
  }
};

struct SolveReport {
  int iterations = 0;
  double residual_phi = 0.0;
  double residual_psi = 0.0;
  std::vector<double> energy_trace;
  std::vector<double> residual_trace;
  std::vector<int> krylov_trace;
  bool converged = false;
  std::string message;
};

/// Newton-Krylov least-squares iteration on a packed state. The merit function is
/// half the squared Euclidean norm of the residual; steps come from GMRES on a
/// central-difference Jacobian and are accepted only if the merit decreases.
struct NewtonProblem {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> residual;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> retract;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> project;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> precondition;
  std::function<double(const Eigen::VectorXd&)> residual_norm;  // reported norm of a residual vector
  std::function<void(const Eigen::VectorXd&)> on_accept;
};

struct NewtonResult {
  Eigen::VectorXd x;
  Eigen::VectorXd r;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

inline NewtonResult newton_krylov(const NewtonProblem& pb, Eigen::VectorXd x, const SolverOptions& opt,
                                  std::vector<double>* trace = nullptr, std::vector<int>* krylov = nullptr) {
  NewtonResult out;
  Eigen::VectorXd r = pb.residual(x);
  double merit = 0.5 * r.squaredNorm();
  if (trace) trace->push_back(pb.residual_norm(r));
  if (pb.on_accept) pb.on_accept(x);
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    if (pb.residual_norm(r) < opt.tol_residual) {
      out.converged = true;
      break;
    }
    const double xs = 1.0 + x.norm() / std::sqrt(double(std::max<Eigen::Index>(x.size(), 1)));
    auto A = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
      const double vn = v.norm();
      if (vn == 0.0) return Eigen::VectorXd::Zero(v.size());
      const double eps = opt.fd_step * xs * std::sqrt(double(v.size())) / vn;
      const Eigen::VectorXd rp = pb.residual(pb.retract(x, eps * v));
      const Eigen::VectorXd rm = pb.residual(pb.retract(x, -eps * v));
      return pb.project(x, (rp - rm) / (2 * eps));
    };
    auto M = [&](const Eigen::VectorXd& v) { return pb.precondition(x, v); };
    const GmresResult gm = gmres(A, M, -r, opt.gmres_rtol, opt.gmres_restart, opt.gmres_max_iter);
    if (krylov) krylov->push_back(gm.iterations);
    const Eigen::VectorXd d = pb.project(x, gm.x);
    double alpha = opt.step0;
    bool accepted = false;
    for (int b = 0; b < opt.max_backtracks; ++b, alpha *= opt.backtrack) {
      Eigen::VectorXd xn;
      try {
        xn = pb.retract(x, alpha * d);
      } catch (const SingularProjection&) {
        continue;
      }
      const Eigen::VectorXd rn = pb.residual(xn);
      const double mn = 0.5 * rn.squaredNorm();
      if (std::isfinite(mn) && mn < (1.0 - 1e-4 * alpha) * merit) {
        x = std::move(xn);
        r = rn;
        merit = mn;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.message = "line search failed to decrease the residual";
      break;
    }
    if (trace) trace->push_back(pb.residual_norm(r));
    if (pb.on_accept) pb.on_accept(x);
  }
  if (!out.converged && pb.residual_norm(r) < opt.tol_residual) out.converged = true;
  if (!out.converged && out.message.empty()) out.message = "maximum iterations reached";
  out.iterations = it;
  out.x = std::move(x);
  out.r = std::move(r);
  return out;
}

namespace detail {

struct Packing {
  Eigen::Index n, q, sq;
  Eigen::Index size() const { return n * q + 2 * n * sq; }

  Eigen::VectorXd pack(const RealField& phi, const SpinorField& psi) const {
    Eigen::VectorXd x(size());
    x.head(n * q) = Eigen::Map<const Eigen::VectorXd>(phi.data(), n * q);
    const Eigen::MatrixXd re = psi.real(), im = psi.imag();
    x.segment(n * q, n * sq) = Eigen::Map<const Eigen::VectorXd>(re.data(), n * sq);
    x.tail(n * sq) = Eigen::Map<const Eigen::VectorXd>(im.data(), n * sq);
    return x;
  }
  RealField phi(const Eigen::VectorXd& x) const { return Eigen::Map<const Eigen::MatrixXd>(x.data(), n, q); }
  SpinorField psi(const Eigen::VectorXd& x) const {
    const Eigen::Map<const Eigen::MatrixXd> re(x.data() + n * q, n, sq), im(x.data() + n * q + n * sq, n, sq);
    SpinorField out(n, sq);
    out.real() = re;
    out.imag() = im;
    return out;
  }
};

/// (Delta - 1)^{-1} on real fields.
inline RealField inverse_shifted_laplacian(const DomainGrid& g, const RealField& f) {
  const int dim = g.dim();
  return apply_scalar_symbol(g, Eigen::MatrixXcd(f.cast<cd>()),
                             [&](int b0, int b1) {
                               double k2 = std::pow(g.wavenumbers(0, false)[b0], 2);
                               if (dim == 2) k2 += std::pow(g.wavenumbers(1, false)[b1], 2);
                               return cd(-1.0 / (k2 + 1.0), 0.0);
                             })
      .real();
}

/// (flat Dirac + i)^{-1} = (flat Dirac - i) / (1 + |kappa|^2); invertible on zero modes.
inline SpinorField regularized_dirac_inverse(const DomainGrid& g, const SpinorField& f) {
  return apply_spinor_symbol(g, f, [&](int b0, int b1) {
    double k2 = std::pow(g.wavenumbers(0, true)[b0], 2);
    if (g.dim() == 2) k2 += std::pow(g.wavenumbers(1, true)[b1], 2);
    const Eigen::MatrixXcd d = dirac_symbol(g, b0, b1);
    return Eigen::MatrixXcd((d - kI * Eigen::MatrixXcd::Identity(d.rows(), d.cols())) / (1.0 + k2));
  });
}

}  // namespace detail

struct SolveResult {
  RealField phi;
  SpinorField psi;
  SolveReport report;
};

/// Drives both residuals to zero by a globalized Newton-Krylov iteration on the
/// least-squares merit 1/2 |res_phi|^2 + 1/2 |res_psi|^2 with projection retraction.
template <TargetGeometry T>
SolveResult solve(const T& t, const DomainGrid& g, const RealField& phi0, const SpinorField& psi0,
                  const SolverOptions& opt) {
  opt.validate();
  detail::check_fields(t, g, phi0, &psi0);
  const detail::Packing pk{g.size(), t.ambient_dim(), Eigen::Index(g.spinor_rank()) * t.ambient_dim()};
  const double w = g.cell_volume();
  SolveResult res;

  NewtonProblem pb;
  pb.residual = [&](const Eigen::VectorXd& x) {
    const RealField phi = pk.phi(x);
    const SpinorField psi = pk.psi(x);
    return pk.pack(el_residual_phi(t, g, phi, psi), el_residual_psi(t, g, phi, psi));
  };
  pb.retract = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    auto [phi, psi] = constrain(t, g, pk.phi(x + v), pk.psi(x + v));
    return pk.pack(phi, psi);
  };
  pb.project = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    const RealField phi = pk.phi(x);
    return pk.pack(project_vector(t, g, phi, pk.phi(v)), project_spinor(t, g, phi, pk.psi(v)));
  };
  pb.precondition = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    const RealField phi = pk.phi(x);
    const RealField a = detail::inverse_shifted_laplacian(g, project_vector(t, g, phi, pk.phi(v)));
    const SpinorField b = detail::regularized_dirac_inverse(g, project_spinor(t, g, phi, pk.psi(v)));
    return pk.pack(project_vector(t, g, phi, a), project_spinor(t, g, phi, b));
  };
  pb.residual_norm = [&](const Eigen::VectorXd& r) { return std::sqrt(w) * r.norm(); };
  pb.on_accept = [&](const Eigen::VectorXd& x) {
    res.report.energy_trace.push_back(energy(t, g, pk.phi(x), pk.psi(x)).total);
  };

  auto [phi, psi] = constrain(t, g, phi0, psi0);
  const NewtonResult nr =
      newton_krylov(pb, pk.pack(phi, psi), opt, &res.report.residual_trace, &res.report.krylov_trace);
  res.phi = pk.phi(nr.x);
  res.psi = pk.psi(nr.x);
  res.report.iterations = nr.iterations;
  res.report.converged = nr.converged;
  res.report.message = nr.converged ? "converged" : nr.message;
  res.report.residual_phi = norm_l2(g, el_residual_phi(t, g, res.phi, res.psi));
  res.report.residual_psi = norm_l2(g, el_residual_psi(t, g, res.phi, res.psi));
  return res;
}

/// Great circle phi(t) = (cos(2 pi m t / L), sin(2 pi m t / L), 0, ...) with psi = i chi (x) phi'.
inline std::pair<RealField, SpinorField> make_geodesic_example(const Sphere& t, const DomainGrid& g, int speed,
                                                               const Eigen::VectorXcd& chi) {
  if (g.dim() != 1) throw DomainError("the geodesic example lives on a circle");
  const int s = g.spinor_rank();
  if (chi.size() != s) throw DomainError("chi must have one entry per spinor component");
  if (!g.spin().trivial(1) && chi.norm() != 0.0)
    throw DomainError("a constant spinor only exists for the trivial spin structure");
  const int q = t.ambient_dim();
  const double w = 2.0 * std::numbers::pi * speed / g.period(0);
  RealField phi = RealField::Zero(g.size(), q);
  SpinorField psi = SpinorField::Zero(g.size(), s * q);
  for (int r = 0; r < g.size(); ++r) {
    const double x = g.coordinate(r, 0);
    phi(r, 0) = std::cos(w * x);
    phi(r, 1) = std::sin(w * x);
    const double d0 = -w * std::sin(w * x), d1 = w * std::cos(w * x);
    for (int a = 0; a < s; ++a) {
      psi(r, 0 * s + a) = kI * chi(a) * d0;
      psi(r, 1 * s + a) = kI * chi(a) * d1;
    }
  }
  return {std::move(phi), std::move(psi)};
}

struct BranchPoint {
  double amplitude = 0.0;
  double lambda = 0.0;              // multiplier of the normalized problem
  double augmented_residual = 0.0;  // |Dirac psi - F psi - lambda psi|
  double residual = 0.0;            // |Dirac psi - F psi|
  double curvature_energy = 0.0;
  bool converged = false;
};

struct NonlinearDiracBranch {
  std::vector<BranchPoint> points;
  bool found_solution = false;  // a zero of lambda was located and polished
  BranchPoint solution;
  SpinorField solution_psi;
  SpinorField last_psi;
  RealField phi;  // the constant map at the base point
  double seed_eigenvalue = 0.0;
  std::string message;
};

/// Eigenspinor seed for mode `mode_index` of the flat Dirac operator, one leg per
/// tangent direction up to the spinor rank; leg b uses the wavevector (-1)^b kappa.
template <TargetGeometry T>
SpinorField dirac_mode_seed(const T& t, const DomainGrid& g, const Vec& base, int mode_index, double* eigenvalue) {
  const auto modes = dirac_modes(g);
  if (mode_index < 0 || mode_index >= int(modes.size())) throw DomainError("mode_index out of range");
  const DiracMode& m = modes[mode_index];
  if (eigenvalue) *eigenvalue = m.eigenvalue;
  const int s = g.spinor_rank(), q = t.ambient_dim();
  const Mat frame = t.tangent_frame(base);
  const int legs = std::min<int>(s, frame.cols());
  SpinorField psi = SpinorField::Zero(g.size(), s * q);
  for (int b = 0; b < legs; ++b) {
    int bins[2] = {m.bin0, m.bin1};
    if (b % 2 == 1)
      for (int a = 0; a < g.dim(); ++a) {
        const int k = g.mode_index(a, bins[a]);
        const int kr = -k - int(std::lround(2 * g.spin().twist[a]));
        bins[a] = (kr % g.nodes(a) + g.nodes(a)) % g.nodes(a);
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dirac_symbol(g, bins[0], bins[1]));
    Eigen::Index j = 0;
    (es.eigenvalues().array() - m.eigenvalue).abs().minCoeff(&j);
    const Eigen::VectorXcd u = es.eigenvectors().col(j);
    for (int r = 0; r < g.size(); ++r) {
      double phase = 0.0;
      for (int a = 0; a < g.dim(); ++a)
        phase += 2.0 * std::numbers::pi * g.mode_index(a, bins[a]) * g.coordinate(r, a) / g.period(a);
      const cd e = std::exp(kI * phase);
      for (int i = 0; i < q; ++i)
        for (int sg = 0; sg < s; ++sg) psi(r, i * s + sg) += e * u(sg) * frame(i, b);
    }
  }
  return psi;
}

/// Continuation of the normalized problem Dirac psi - F(psi) psi = lambda psi, |psi| = a,
/// in 16 equal amplitude steps from the seed eigenvalue. A sign change of lambda is
/// located by secant iteration and polished on the plain equation.
template <TargetGeometry T>
NonlinearDiracBranch solve_nonlinear_dirac(const T& t, const DomainGrid& g, const Vec& base_point, int mode_index,
                                           double amplitude, const SolverOptions& opt_in) {
  SolverOptions opt = opt_in;
  opt.validate();
  require_on_manifold(t, base_point);
  if (!(amplitude >= 0)) throw DomainError("continuation amplitude must be non-negative");
  constexpr int kSteps = 16;
  const int q = t.ambient_dim(), s = g.spinor_rank();
  const Eigen::Index n = g.size(), sq = Eigen::Index(s) * q;
  const double w = g.cell_volume();
  NonlinearDiracBranch br;
  br.phi = RealField(n, q);
  for (Eigen::Index r = 0; r < n; ++r) br.phi.row(r) = base_point.transpose();
  if (amplitude == 0.0) {
    dirac_mode_seed(t, g, base_point, mode_index, &br.seed_eigenvalue);
    br.solution_psi = br.last_psi = SpinorField::Zero(n, sq);
    br.solution.converged = br.found_solution = true;
    br.message = "trivial solution at zero amplitude";
    return br;
  }
  const RealField& phi = br.phi;
  const detail::Packing pk{n, 0, sq};

  SpinorField psi = dirac_mode_seed(t, g, base_point, mode_index, &br.seed_eigenvalue);
  double lambda = br.seed_eigenvalue;

  auto plain_residual = [&](const SpinorField& p) { return el_residual_psi(t, g, phi, p); };
  auto curvature_energy = [&](const SpinorField& p) {
    return -integrate(g, curvature_quadratic_field(t, g, phi, p)) / 12.0;
  };

  auto solve_augmented = [&](double a, SpinorField& p, double& lam) {
    NewtonProblem pb;
    pb.residual = [&](const Eigen::VectorXd& x) {
      const SpinorField ps = pk.psi(x);
      const double l = x(x.size() - 1);
      Eigen::VectorXd r(x.size());
      r.head(x.size() - 1) = pk.pack(RealField(n, 0), SpinorField(plain_residual(ps) - l * ps));
      r(x.size() - 1) = (ps.squaredNorm() * w - a * a) / (2 * a);
      return r;
    };
    pb.retract = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
      Eigen::VectorXd y = x + v;
      const SpinorField ps = project_spinor(t, g, phi, pk.psi(y));
      y.head(y.size() - 1) = pk.pack(RealField(n, 0), ps);
      return y;
    };
    pb.project = [&](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
      Eigen::VectorXd y = v;
      y.head(v.size() - 1) = pk.pack(RealField(n, 0), project_spinor(t, g, phi, pk.psi(v)));
      return y;
    };
    pb.precondition = [&](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
      Eigen::VectorXd y = v;
      y.head(v.size() - 1) =
          pk.pack(RealField(n, 0), project_spinor(t, g, phi, detail::regularized_dirac_inverse(g, pk.psi(v))));
      return y;
    };
    pb.residual_norm = [&](const Eigen::VectorXd& r) {
      return std::sqrt(w * r.head(r.size() - 1).squaredNorm() + r(r.size() - 1) * r(r.size() - 1));
    };
    Eigen::VectorXd x(pk.size() + 1);
    x.head(pk.size()) = pk.pack(RealField(n, 0), p);
    x(pk.size()) = lam;
    const NewtonResult nr = newton_krylov(pb, x, opt);
    p = pk.psi(nr.x);
    lam = nr.x(nr.x.size() - 1);
    BranchPoint bp;
    bp.amplitude = a;
    bp.lambda = lam;
    bp.augmented_residual = pb.residual_norm(nr.r);
    bp.residual = norm_l2(g, plain_residual(p));
    bp.curvature_energy = curvature_energy(p);
    bp.converged = nr.converged;
    return bp;
  };

  auto scale_to = [&](SpinorField& p, double a) {
    const double nn = std::sqrt(p.squaredNorm() * w);
    if (nn > 0) p *= a / nn;
  };

  double prev_a = 0.0, prev_lambda = lambda;
  SpinorField prev_psi;
  for (int k = 1; k <= kSteps; ++k) {
    const double a = amplitude * k / kSteps;
    scale_to(psi, a);
    SpinorField trial = psi;
    double lam = lambda;
    const BranchPoint bp = solve_augmented(a, trial, lam);
    br.points.push_back(bp);
    if (!bp.converged) {
      br.message = "Newton divergence at amplitude " + std::to_string(a);
      break;
    }
    if (!br.found_solution && k > 1 && prev_lambda * lam < 0) {
      // secant on the amplitude for lambda(a) = 0
      double a0 = prev_a, l0 = prev_lambda, a1 = a, l1 = lam;
      SpinorField p1 = trial;
      for (int it = 0; it < 40 && std::abs(l1) > 1e-12; ++it) {
        const double an = a1 - l1 * (a1 - a0) / (l1 - l0);
        SpinorField pn = p1;
        scale_to(pn, an);
        double ln = l1;
        const BranchPoint sp = solve_augmented(an, pn, ln);
        if (!sp.converged) break;
        a0 = a1;
        l0 = l1;
        a1 = an;
        l1 = ln;
        p1 = pn;
      }
      NewtonProblem pb;
      pb.residual = [&](const Eigen::VectorXd& x) {
        return pk.pack(RealField(n, 0), plain_residual(pk.psi(x)));
      };
      pb.retract = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
        return pk.pack(RealField(n, 0), project_spinor(t, g, phi, pk.psi(x + v)));
      };
      pb.project = [&](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
        return pk.pack(RealField(n, 0), project_spinor(t, g, phi, pk.psi(v)));
      };
      pb.precondition = [&](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
        return pk.pack(RealField(n, 0), project_spinor(t, g, phi, detail::regularized_dirac_inverse(g, pk.psi(v))));
      };
      pb.residual_norm = [&](const Eigen::VectorXd& r) { return std::sqrt(w) * r.norm(); };
      const NewtonResult nr = newton_krylov(pb, pk.pack(RealField(n, 0), p1), opt);
      br.solution_psi = pk.psi(nr.x);
      br.solution.amplitude = std::sqrt(br.solution_psi.squaredNorm() * w);
      br.solution.lambda = 0.0;
      br.solution.residual = norm_l2(g, plain_residual(br.solution_psi));
      br.solution.augmented_residual = br.solution.residual;
      br.solution.curvature_energy = curvature_energy(br.solution_psi);
      br.solution.converged = nr.converged;
      br.found_solution = nr.converged;
    }
    prev_a = a;
    prev_lambda = lam;
    psi = trial;
    lambda = lam;
  }
  br.last_psi = psi;
  if (br.message.empty())
    br.message = br.found_solution ? "located a solution of the nonlinear Dirac equation"
                                   : "no sign change of the multiplier along the branch";
  return br;
}

}  // namespace dhm
