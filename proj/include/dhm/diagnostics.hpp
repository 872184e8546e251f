#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "dhm/energy.hpp"
#include "dhm/solver.hpp"

namespace dhm {

/// Real part of T_ab, one column per (a, b) pair at index a * dim + b.
struct EnergyMomentum {
  int dim = 0;
  Eigen::MatrixXd T;
  double imag_leak = 0.0;
  double trace_norm = 0.0;
  double antisym_norm = 0.0;
  double div_norm = 0.0;

  Eigen::VectorXd component(int a, int b) const { return T.col(a * dim + b); }
};

struct HopfField {
  Eigen::VectorXcd T;          // (T11 - T22)/2 - i (T12 + T21)/2 from the tensor
  double dbar_norm = 0.0;
  Eigen::VectorXcd T_literal;  // pointwise display with the -Q/3 coefficient
  double dbar_norm_literal = 0.0;
};

struct IdentityResidual {
  double residual = 0.0;
  double scale = 0.0;
  double relative() const { return residual / (1.0 + scale); }
};

struct BochnerResidual : IdentityResidual {
  double residual_plus_sign = 0.0;  // same identity with +|F|^2
};

struct SweepRow {
  double epsilon = 0.0;
  double initial_dirichlet = 0.0;  // int |dphi|^2
  double initial_quartic = 0.0;    // int |psi|^4
  double final_dphi = 0.0;         // L2 norm of dphi
  double final_psi = 0.0;          // L2 norm of psi
  double residual_phi = 0.0;
  double residual_psi = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

inline double dirichlet_norm(const DomainGrid& g, const RealField& phi) {
  const Differential d = differential(g, phi);
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a) s += d[a].squaredNorm();
  return std::sqrt(s * g.cell_volume());
}

inline double quartic_integral(const DomainGrid& g, const SpinorField& psi) {
  return integrate(g, pointwise_sq(psi).array().square().matrix());
}

namespace detail {

inline Eigen::VectorXd pointwise_inner_re(const SpinorField& a, const SpinorField& b, double* leak) {
  const Eigen::VectorXcd v = a.conjugate().cwiseProduct(b).rowwise().sum();
  if (leak) *leak = std::max(*leak, v.imag().cwiseAbs().maxCoeff());
  return v.real();
}

inline Eigen::VectorXcd pointwise_inner(const SpinorField& a, const SpinorField& b) {
  return a.conjugate().cwiseProduct(b).rowwise().sum();
}

inline double l2(const DomainGrid& g, const Eigen::VectorXd& f) { return std::sqrt(f.squaredNorm() * g.cell_volume()); }

}  // namespace detail

template <TargetGeometry T>
EnergyMomentum energy_momentum(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi) {
  detail::check_fields(t, g, phi, &psi);
  const int dim = g.dim();
  EnergyMomentum em;
  em.dim = dim;
  em.T = Eigen::MatrixXd::Zero(g.size(), dim * dim);
  const Differential d = differential(g, phi);
  std::array<SpinorField, 2> nab;
  for (int b = 0; b < dim; ++b) nab[b] = twisted_covariant_derivative(t, g, phi, psi, b);
  const Eigen::VectorXd q = curvature_quadratic_field(t, g, phi, psi);
  Eigen::VectorXd dsq = Eigen::VectorXd::Zero(g.size());
  for (int a = 0; a < dim; ++a) dsq += pointwise_sq(d[a]);
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < dim; ++b) {
      Eigen::VectorXd c = 2.0 * d[a].cwiseProduct(d[b]).rowwise().sum();
      c += detail::pointwise_inner_re(psi, clifford_mul(g, a, nab[b]), &em.imag_leak);
      if (a == b) c -= dsq + q / 6.0;
      em.T.col(a * dim + b) = c;
    }
  Eigen::VectorXd tr = Eigen::VectorXd::Zero(g.size());
  for (int a = 0; a < dim; ++a) tr += em.component(a, a);
  em.trace_norm = detail::l2(g, tr);
  if (dim == 2) em.antisym_norm = detail::l2(g, em.component(0, 1) - em.component(1, 0));
  double div = 0.0;
  for (int b = 0; b < dim; ++b) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(g.size());
    for (int a = 0; a < dim; ++a) v += spectral_derivative(g, a, RealField(em.component(a, b)));
    div += v.squaredNorm();
  }
  em.div_norm = std::sqrt(div * g.cell_volume());
  return em;
}

/// 1/2 (d_x + i d_y) of a complex scalar field.
inline Eigen::VectorXcd dbar(const DomainGrid& g, const Eigen::VectorXcd& f) {
  return 0.5 * (spectral_derivative(g, 0, Eigen::MatrixXcd(f), false) +
                kI * spectral_derivative(g, 1, Eigen::MatrixXcd(f), false));
}

template <TargetGeometry T>
HopfField hopf_differential(const DomainGrid& g, const T& t, const RealField& phi, const SpinorField& psi) {
  if (g.dim() != 2) throw DomainError("the Hopf differential needs a two-dimensional domain");
  const EnergyMomentum em = energy_momentum(t, g, phi, psi);
  HopfField h;
  h.T = 0.5 * (em.component(0, 0) - em.component(1, 1)).cast<cd>() -
        0.5 * kI * (em.component(0, 1) + em.component(1, 0)).cast<cd>();
  h.dbar_norm = norm_l2(g, SpinorField(dbar(g, h.T)));

  const Differential d = differential(g, phi);
  const SpinorField gx = clifford_mul(g, 0, twisted_covariant_derivative(t, g, phi, psi, 0));
  const SpinorField gy = clifford_mul(g, 0, twisted_covariant_derivative(t, g, phi, psi, 1));
  const Eigen::VectorXd q = curvature_quadratic_field(t, g, phi, psi);
  h.T_literal = (pointwise_sq(d[0]) - pointwise_sq(d[1]) - q / 3.0).cast<cd>() -
                2.0 * kI * d[0].cwiseProduct(d[1]).rowwise().sum().cast<cd>() +
                detail::pointwise_inner(psi, gx) - kI * detail::pointwise_inner(psi, gy);
  h.dbar_norm_literal = norm_l2(g, SpinorField(dbar(g, h.T_literal)));
  return h;
}

/// gamma_1 gamma_2 R(dphi_1, dphi_2) psi with R(X,Y) = [nabla_X, nabla_Y]; zero in dimension 1.
template <TargetGeometry T>
SpinorField curvature_endomorphism(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi) {
  detail::check_fields(t, g, phi, &psi);
  const int s = g.spinor_rank(), q = t.ambient_dim();
  SpinorField out = SpinorField::Zero(psi.rows(), psi.cols());
  if (g.dim() != 2) return out;
  const Differential d = differential(g, phi);
  const CMat w = g.clifford().gamma(0) * g.clifford().gamma(1);
  for (int r = 0; r < g.size(); ++r) {
    const LocalCurvature c = local_curvature(t, vec_at(phi, r));
    const Vec x = vec_at(d[0], r), y = vec_at(d[1], r);
    Mat A = Mat::Zero(q, q);  // (R(x,y)z)_k = A(k, l) z_l
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) {
        const double xy = x(i) * y(j);
        if (xy == 0.0) continue;
        for (int k = 0; k < q; ++k)
          for (int l = 0; l < q; ++l) A(k, l) += xy * c(i, j, k, l);
      }
    const SpinorAtPoint v = spinor_at(psi, r, s);
    set_spinor(out, r, SpinorAtPoint(w * v * A.transpose().cast<cd>()));
  }
  return out;
}

/// sum_a nabla_a nabla_a psi.
template <TargetGeometry T>
SpinorField twisted_laplacian(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi) {
  SpinorField out = SpinorField::Zero(psi.rows(), psi.cols());
  for (int a = 0; a < g.dim(); ++a)
    out += twisted_covariant_derivative(t, g, phi, twisted_covariant_derivative(t, g, phi, psi, a), a);
  return out;
}

/// L2 norm of D(D psi) + nabla^2 psi - gamma_1 gamma_2 R(dphi_1, dphi_2) psi.
template <TargetGeometry T>
IdentityResidual weitzenboeck_residual(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi) {
  const SpinorField dd = twisted_dirac(t, g, phi, twisted_dirac(t, g, phi, psi));
  const SpinorField lap = twisted_laplacian(t, g, phi, psi);
  const SpinorField k = curvature_endomorphism(t, g, phi, psi);
  IdentityResidual res;
  res.residual = norm_l2(g, SpinorField(dd + lap - k));
  res.scale = norm_l2(g, dd) + norm_l2(g, lap) + norm_l2(g, k);
  return res;
}

/// Delta |psi|^2 / 2 - |nabla psi|^2 - Re<psi, K psi> + |F|^2, valid where Dirac psi = F.
template <TargetGeometry T>
BochnerResidual bochner_residual(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi) {
  detail::check_fields(t, g, phi, &psi);
  const Eigen::VectorXd lhs = 0.5 * laplacian(g, RealField(pointwise_sq(psi)));
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(g.size());
  for (int a = 0; a < g.dim(); ++a) grad += pointwise_sq(twisted_covariant_derivative(t, g, phi, psi, a));
  const Eigen::VectorXd kterm = detail::pointwise_inner_re(psi, curvature_endomorphism(t, g, phi, psi), nullptr);
  const Eigen::VectorXd f2 = pointwise_sq(curvature_spinor_field(t, g, phi, psi));
  BochnerResidual res;
  res.residual = detail::l2(g, lhs - grad - kterm + f2);
  res.residual_plus_sign = detail::l2(g, lhs - grad - kterm - f2);
  res.scale = detail::l2(g, lhs) + detail::l2(g, grad) + detail::l2(g, kterm) + detail::l2(g, f2);
  return res;
}

/// Energy for the metric lambda^2 h recomputed with the surface weights, relative to E.
template <TargetGeometry T>
double conformal_check(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi,
                       const Eigen::VectorXd& lambda) {
  if (g.dim() != 2) throw DomainError("conformal invariance is a surface statement");
  if (lambda.size() != g.size()) throw DomainError("lambda must have one value per node");
  if (!(lambda.minCoeff() > 0)) throw DomainError("lambda must be positive");
  const EnergyBreakdown e = energy(t, g, phi, psi);
  const Eigen::ArrayXd l = lambda.array(), l2 = l.square();
  const Differential d = differential(g, phi);
  Eigen::ArrayXd dsq = Eigen::ArrayXd::Zero(g.size());
  for (int a = 0; a < 2; ++a) dsq += pointwise_sq(d[a]).array();
  const double w = g.cell_volume();
  const double dirichlet = 0.5 * (l2 * dsq / l2).sum() * w;

  const SpinorField pt = (1.0 / l.sqrt()).matrix().asDiagonal() * psi;
  const SpinorField dt =
      (l.pow(-1.5)).matrix().asDiagonal() * twisted_dirac(t, g, phi, SpinorField(l.sqrt().matrix().asDiagonal() * pt));
  const double dirac = 0.5 * (l2 * detail::pointwise_inner(pt, dt).real().array()).sum() * w;
  const double curv = -(l2 * curvature_quadratic_field(t, g, phi, pt).array()).sum() * w / 12.0;
  const double et = dirichlet + dirac + curv;
  return e.total == 0.0 ? std::abs(et) : std::abs(et - e.total) / std::abs(e.total);
}

/// Random data with int |dphi|^2 = int |psi|^4 = eps / 2, handed to the solver.
template <TargetGeometry T>
std::pair<RealField, SpinorField> sweep_initial_data(const T& t, const DomainGrid& g, double eps, const Vec& base,
                                                     int kmax, std::mt19937_64& rng) {
  if (!(eps >= 0)) throw DomainError("sweep levels must be non-negative");
  const int q = t.ambient_dim();
  const RealField u = random_real_field(g, q, kmax, rng);
  const SpinorField chi = random_spinor_field(g, q, kmax, rng);
  RealField flat(g.size(), q);
  flat.rowwise() = base.transpose();
  auto map_at = [&](double s) { return constrain_map(t, g, RealField(flat + s * u)); };
  double s = 0.0;
  if (eps > 0) {
    s = 0.1;
    for (int it = 0; it < 50; ++it) {
      const double dn = dirichlet_norm(g, map_at(s));
      const double next = s * std::sqrt(0.5 * eps) / dn;
      if (std::abs(next - s) <= 1e-14 * s) break;
      s = next;
    }
  }
  RealField phi = map_at(s);
  SpinorField psi = project_spinor(t, g, phi, chi);
  const double qi = quartic_integral(g, psi);
  psi *= eps > 0 ? std::pow(0.5 * eps / qi, 0.25) : 0.0;
  return {std::move(phi), std::move(psi)};
}

/// One solver run per level; row k draws its data from seed + k.
template <TargetGeometry T>
std::vector<SweepRow> vanishing_sweep(const T& t, const DomainGrid& g, const std::vector<double>& levels,
                                      const SolverOptions& opt, const Vec& base, int kmax = 2) {
  std::vector<SweepRow> rows;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    std::mt19937_64 rng(opt.seed + k);
    auto [phi, psi] = sweep_initial_data(t, g, levels[k], base, kmax, rng);
    SweepRow row;
    row.epsilon = levels[k];
    row.initial_dirichlet = std::pow(dirichlet_norm(g, phi), 2);
    row.initial_quartic = quartic_integral(g, psi);
    try {
      const SolveResult r = solve(t, g, phi, psi, opt);
      row.final_dphi = dirichlet_norm(g, r.phi);
      row.final_psi = norm_l2(g, r.psi);
      row.residual_phi = r.report.residual_phi;
      row.residual_psi = r.report.residual_psi;
      row.iterations = r.report.iterations;
      row.converged = r.report.converged;
      row.message = r.report.message;
    } catch (const std::exception& e) {
      row.message = e.what();
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace dhm
