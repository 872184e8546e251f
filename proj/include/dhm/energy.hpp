#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "dhm/operators.hpp"

namespace dhm {

struct EnergyBreakdown {
  double dirichlet = 0.0;
  double dirac = 0.0;
  double curvature = 0.0;
  double total = 0.0;
  double imag_leak = 0.0;
};

template <TargetGeometry T>
EnergyBreakdown energy(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi) {
  detail::check_fields(t, g, phi, &psi);
  EnergyBreakdown e;
  const Differential d = differential(g, phi);
  double dsq = 0.0;
  for (int a = 0; a < g.dim(); ++a) dsq += d[a].squaredNorm();
  e.dirichlet = 0.5 * dsq * g.cell_volume();

  const cd dir = inner(g, psi, twisted_dirac(t, g, phi, psi));
  e.dirac = 0.5 * dir.real();

  double leak = 0.0;
  const Eigen::VectorXd qf = curvature_quadratic_field(t, g, phi, psi, &leak);
  e.curvature = -integrate(g, qf) / 12.0;
  e.imag_leak = std::max(0.5 * std::abs(dir.imag()), leak);
  e.total = e.dirichlet + e.dirac + e.curvature;

  const double n2 = psi.squaredNorm() * g.cell_volume();
  const double scale = 1.0 + n2 * n2 + dsq * g.cell_volume();
  if (e.imag_leak > 1e-10 * scale)
    throw NumericalError("energy: imaginary leak " + std::to_string(e.imag_leak) + " above tolerance");
  return e;
}

/// tau(phi) - R(phi, psi) + G(psi); vanishes at critical points.
template <TargetGeometry T>
RealField el_residual_phi(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi) {
  return tension(t, g, phi) - coupling_R(t, g, phi, psi) + curvature_gradient_field(t, g, phi, psi);
}

/// Twisted Dirac minus the F-term.
template <TargetGeometry T>
SpinorField el_residual_psi(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi) {
  return twisted_dirac(t, g, phi, psi) - curvature_spinor_field(t, g, phi, psi);
}

/// Flat Dirac minus II(dphi_a, e_a . psi) minus F, with F composed from P and II.
template <TargetGeometry T>
SpinorField el_residual_psi_extrinsic(const T& t, const DomainGrid& g, const RealField& phi,
                                      const SpinorField& psi) {
  return twisted_dirac_extrinsic(t, g, phi, psi) - curvature_spinor_field_shape(t, g, phi, psi);
}

/// Fields moved along the variation curve: phi_s = pi(phi + s eta), psi_s = P(phi_s)(psi + s xi).
template <TargetGeometry T>
std::pair<RealField, SpinorField> vary(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi,
                                       const RealField& eta, const SpinorField& xi, double s) {
  return constrain(t, g, RealField(phi + s * eta), SpinorField(psi + s * xi));
}

struct DirectionalDerivative {
  double value = 0.0;
  double truncation = 0.0;  // Richardson estimate |D(h) - D(2h)| / 3
  double roundoff = 0.0;    // eps |E| / h
};

template <TargetGeometry T>
DirectionalDerivative directional_derivative(const T& t, const DomainGrid& g, const RealField& phi,
                                             const SpinorField& psi, const RealField& eta, const SpinorField& xi,
                                             double h) {
  if (!(h > 0.0)) throw DomainError("finite-difference step must be positive");
  auto E = [&](double s) {
    auto [p, q] = vary(t, g, phi, psi, eta, xi, s);
    return energy(t, g, p, q).total;
  };
  const double ep = E(h), em = E(-h), ep2 = E(2 * h), em2 = E(-2 * h);
  DirectionalDerivative out;
  out.value = (ep - em) / (2 * h);
  const double d2 = (ep2 - em2) / (4 * h);
  out.truncation = std::abs(out.value - d2) / 3.0;
  const double mag = std::max({std::abs(ep), std::abs(em), std::abs(ep2), std::abs(em2)});
  out.roundoff = std::numeric_limits<double>::epsilon() * mag / h;
  if (out.roundoff > out.truncation && out.roundoff > 1e-6 * (1.0 + mag))
    throw NumericalError("directional_derivative: cancellation dominates at h = " + std::to_string(h));
  return out;
}

/// -int <res_phi, eta> + int Re <res_psi, xi>.
template <TargetGeometry T>
double predicted_derivative(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi,
                            const RealField& eta, const SpinorField& xi) {
  return -inner(g, el_residual_phi(t, g, phi, psi), eta) + inner(g, el_residual_psi(t, g, phi, psi), xi).real();
}

struct GradientTrial {
  double predicted = 0.0;
  double best_fd = 0.0;
  double best_h = 0.0;
  double relative_error = 0.0;
  double order = 0.0;
  std::vector<double> steps;
  std::vector<double> derivatives;
};

struct GradientCheckReport {
  std::vector<GradientTrial> trials;
  double worst_relative_error = 0.0;
  double worst_abs_derivative = 0.0;
  double min_order = 0.0;
  double max_order = 0.0;
};

inline std::vector<double> default_h_sweep() {
  std::vector<double> h;
  for (int k = 0; k <= 8; ++k) h.push_back(1e-2 * std::pow(10.0, -0.5 * k));
  return h;
}

/// Random tangent directions of moderate bandwidth along phi.
template <TargetGeometry T>
std::pair<RealField, SpinorField> random_direction(const T& t, const DomainGrid& g, const RealField& phi, int kmax,
                                                   std::mt19937_64& rng) {
  const int q = t.ambient_dim();
  RealField eta = project_vector(t, g, phi, random_real_field(g, q, kmax, rng));
  SpinorField xi = project_spinor(t, g, phi, random_spinor_field(g, q, kmax, rng));
  return {std::move(eta), std::move(xi)};
}

template <TargetGeometry T>
GradientCheckReport gradient_check(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi,
                                   int trials, std::uint64_t seed = 7, int kmax = 3) {
  GradientCheckReport rep;
  std::mt19937_64 rng(seed);
  const auto hs = default_h_sweep();
  rep.min_order = std::numeric_limits<double>::infinity();
  rep.max_order = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < trials; ++k) {
    auto [eta, xi] = random_direction(t, g, phi, kmax, rng);
    GradientTrial tr;
    tr.predicted = predicted_derivative(t, g, phi, psi, eta, xi);
    tr.steps = hs;
    for (double h : hs) tr.derivatives.push_back(directional_derivative(t, g, phi, psi, eta, xi, h).value);
    const auto& D = tr.derivatives;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j + 1 < D.size(); ++j) {
      const double c = std::abs(D[j - 1] - D[j]) + std::abs(D[j] - D[j + 1]);
      if (c < best) {
        best = c;
        tr.best_fd = D[j];
        tr.best_h = hs[j];
      }
    }
    const double num = std::abs(D[0] - D[1]), den = std::abs(D[1] - D[2]);
    tr.order = (num > 0 && den > 0) ? std::log(num / den) / std::log(hs[0] / hs[1]) : 0.0;
    const double scale = std::max(std::abs(tr.predicted), 1e-300);
    tr.relative_error = std::abs(tr.best_fd - tr.predicted) / scale;
    rep.worst_relative_error = std::max(rep.worst_relative_error, tr.relative_error);
    rep.worst_abs_derivative = std::max(rep.worst_abs_derivative, std::abs(tr.best_fd));
    rep.min_order = std::min(rep.min_order, tr.order);
    rep.max_order = std::max(rep.max_order, tr.order);
    rep.trials.push_back(std::move(tr));
  }
  return rep;
}

}  // namespace dhm
