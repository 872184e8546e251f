#pragma once

#include <array>
#include <random>
#include <utility>

#include "dhm/curvature.hpp"
#include "dhm/fields.hpp"
#include "dhm/grid.hpp"
#include "dhm/spectral.hpp"
#include "dhm/target.hpp"

namespace dhm {

using Differential = std::array<RealField, 2>;

namespace detail {

template <TargetGeometry T>
void check_fields(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField* psi) {
  if (phi.rows() != g.size() || phi.cols() != t.ambient_dim())
    throw DomainError("map field must have one row per node and one column per ambient coordinate");
  if (psi && (psi->rows() != g.size() || psi->cols() != g.spinor_rank() * t.ambient_dim()))
    throw DomainError("vector spinor field must have s*q columns");
}

inline std::array<Vec, 2> dphi_at(const Differential& d, int dim, int node) {
  std::array<Vec, 2> out;
  for (int a = 0; a < dim; ++a) out[a] = d[a].row(node).transpose();
  return out;
}

}  // namespace detail

/// Projects the map onto N and each spinor leg onto T_phi N.
template <TargetGeometry T>
std::pair<RealField, SpinorField> constrain(const T& t, const DomainGrid& g, const RealField& phi_raw,
                                            const SpinorField& psi_raw) {
  detail::check_fields(t, g, phi_raw, &psi_raw);
  RealField phi(phi_raw.rows(), phi_raw.cols());
  SpinorField psi(psi_raw.rows(), psi_raw.cols());
  const int s = g.spinor_rank();
  for (int r = 0; r < g.size(); ++r) {
    Vec p;
    try {
      p = t.project(vec_at(phi_raw, r));
    } catch (const SingularProjection& e) {
      throw SingularProjection(e.what(), r);
    }
    phi.row(r) = p.transpose();
    const Mat P = tangent_projector(t, p);
    SpinorAtPoint v = spinor_at(psi_raw, r, s);
    set_spinor(psi, r, SpinorAtPoint(v * P.cast<cd>()));
  }
  return {std::move(phi), std::move(psi)};
}

template <TargetGeometry T>
RealField constrain_map(const T& t, const DomainGrid& g, const RealField& phi_raw) {
  return constrain(t, g, phi_raw, SpinorField::Zero(g.size(), g.spinor_rank() * t.ambient_dim())).first;
}

/// Tangent projection of every spinor leg (or vector) at phi.
template <TargetGeometry T>
SpinorField project_spinor(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi) {
  const int s = g.spinor_rank();
  SpinorField out(psi.rows(), psi.cols());
  for (int r = 0; r < g.size(); ++r) {
    const Vec p = vec_at(phi, r);
    require_on_manifold(t, p);
    const Mat P = tangent_projector(t, p);
    set_spinor(out, r, SpinorAtPoint(spinor_at(psi, r, s) * P.cast<cd>()));
  }
  return out;
}

template <TargetGeometry T>
RealField project_vector(const T& t, const DomainGrid& g, const RealField& phi, const RealField& v) {
  RealField out(v.rows(), v.cols());
  for (int r = 0; r < g.size(); ++r) {
    const Vec p = vec_at(phi, r);
    require_on_manifold(t, p);
    out.row(r) = (tangent_projector(t, p) * vec_at(v, r)).transpose();
  }
  return out;
}

/// Smooth random map: base point plus a band-limited perturbation, projected onto N.
template <TargetGeometry T>
RealField random_map(const T& t, const DomainGrid& g, const Vec& base, double amplitude, int kmax,
                     std::mt19937_64& rng) {
  RealField raw = amplitude * random_real_field(g, t.ambient_dim(), kmax, rng);
  raw.rowwise() += base.transpose();
  return constrain_map(t, g, raw);
}

template <TargetGeometry T>
SpinorField random_tangent_spinor(const T& t, const DomainGrid& g, const RealField& phi, double amplitude, int kmax,
                                  std::mt19937_64& rng) {
  return project_spinor(t, g, phi, SpinorField(amplitude * random_spinor_field(g, t.ambient_dim(), kmax, rng)));
}

inline Differential differential(const DomainGrid& g, const RealField& phi) {
  Differential d;
  for (int a = 0; a < g.dim(); ++a) d[a] = spectral_derivative(g, a, phi);
  return d;
}

/// Tangential part of the flat Laplacian of phi.
template <TargetGeometry T>
RealField tension(const T& t, const DomainGrid& g, const RealField& phi) {
  detail::check_fields(t, g, phi, nullptr);
  return project_vector(t, g, phi, laplacian(g, phi));
}

/// Laplacian minus its normal part II(dphi_a, dphi_a).
template <TargetGeometry T>
RealField tension_extrinsic(const T& t, const DomainGrid& g, const RealField& phi) {
  detail::check_fields(t, g, phi, nullptr);
  const Differential d = differential(g, phi);
  RealField out = laplacian(g, phi);
  for (int r = 0; r < g.size(); ++r) {
    const Vec p = vec_at(phi, r);
    require_on_manifold(t, p);
    for (int a = 0; a < g.dim(); ++a) {
      const Vec x = d[a].row(r).transpose();
      out.row(r) -= t.second_fundamental_form(p, x, x).transpose();
    }
  }
  return out;
}

template <TargetGeometry T>
SpinorField twisted_covariant_derivative(const T& t, const DomainGrid& g, const RealField& phi,
                                         const SpinorField& psi, int axis) {
  detail::check_fields(t, g, phi, &psi);
  return project_spinor(t, g, phi, spectral_derivative(g, axis, psi, true));
}

/// e_a . nabla_a psi, with the covariant derivative taken as projection after differentiation.
template <TargetGeometry T>
SpinorField twisted_dirac(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi) {
  detail::check_fields(t, g, phi, &psi);
  SpinorField out = SpinorField::Zero(psi.rows(), psi.cols());
  for (int a = 0; a < g.dim(); ++a)
    out += clifford_mul(g, a, twisted_covariant_derivative(t, g, phi, psi, a));
  return out;
}

/// II(dphi_a, psi) on every spinor leg.
template <TargetGeometry T>
SpinorField normal_part(const T& t, const DomainGrid& g, const RealField& phi, const Differential& d,
                        const SpinorField& psi, int axis) {
  const int s = g.spinor_rank();
  SpinorField out(psi.rows(), psi.cols());
  for (int r = 0; r < g.size(); ++r) {
    const Vec p = vec_at(phi, r);
    require_on_manifold(t, p);
    const Vec x = d[axis].row(r).transpose();
    const SpinorAtPoint v = spinor_at(psi, r, s);
    SpinorAtPoint w(s, v.cols());
    for (int a = 0; a < s; ++a) w.row(a) = detail::complex_ii(t, p, CVec(v.row(a).transpose()), x).transpose();
    set_spinor(out, r, w);
  }
  return out;
}

/// Flat Dirac minus e_a . II(dphi_a, psi).
template <TargetGeometry T>
SpinorField twisted_dirac_extrinsic(const T& t, const DomainGrid& g, const RealField& phi,
                                    const SpinorField& psi) {
  detail::check_fields(t, g, phi, &psi);
  const Differential d = differential(g, phi);
  SpinorField out = dirac_flat(g, psi);
  for (int a = 0; a < g.dim(); ++a) out -= clifford_mul(g, a, normal_part(t, g, phi, d, psi, a));
  return out;
}

/// Coupling term 1/2 R(psi, e_a . psi) dphi(e_a), from the curvature tensor.
template <TargetGeometry T>
RealField coupling_R(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi) {
  detail::check_fields(t, g, phi, &psi);
  const Differential d = differential(g, phi);
  const int s = g.spinor_rank();
  RealField out(phi.rows(), phi.cols());
  for (int r = 0; r < g.size(); ++r) {
    const Vec p = vec_at(phi, r);
    const LocalCurvature c = local_curvature(t, p);
    out.row(r) = coupling_R_point(c, g.clifford(), detail::dphi_at(d, g.dim(), r), spinor_at(psi, r, s)).transpose();
  }
  return out;
}

template <TargetGeometry T>
RealField coupling_R_shape(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi) {
  detail::check_fields(t, g, phi, &psi);
  const Differential d = differential(g, phi);
  const int s = g.spinor_rank();
  RealField out(phi.rows(), phi.cols());
  for (int r = 0; r < g.size(); ++r) {
    const Vec p = vec_at(phi, r);
    require_on_manifold(t, p);
    out.row(r) =
        coupling_R_shape_point(t, p, g.clifford(), detail::dphi_at(d, g.dim(), r), spinor_at(psi, r, s)).transpose();
  }
  return out;
}

/// Pointwise F-term over the grid; `dealias` applies the 2/3 rule to the output.
template <TargetGeometry T>
SpinorField curvature_spinor_field(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi,
                                   bool dealias = false) {
  detail::check_fields(t, g, phi, &psi);
  const int s = g.spinor_rank();
  SpinorField out(psi.rows(), psi.cols());
  for (int r = 0; r < g.size(); ++r)
    set_spinor(out, r, curvature_spinor_F(local_curvature(t, vec_at(phi, r)), spinor_at(psi, r, s)));
  return dealias ? project_spinor(t, g, phi, dealias_two_thirds(g, out)) : out;
}

template <TargetGeometry T>
SpinorField curvature_spinor_field_shape(const T& t, const DomainGrid& g, const RealField& phi,
                                         const SpinorField& psi) {
  detail::check_fields(t, g, phi, &psi);
  const int s = g.spinor_rank();
  SpinorField out(psi.rows(), psi.cols());
  for (int r = 0; r < g.size(); ++r)
    set_spinor(out, r, curvature_spinor_F_shape(t, vec_at(phi, r), spinor_at(psi, r, s)));
  return out;
}

template <TargetGeometry T>
RealField curvature_gradient_field(const T& t, const DomainGrid& g, const RealField& phi, const SpinorField& psi) {
  detail::check_fields(t, g, phi, &psi);
  const int s = g.spinor_rank();
  RealField out(phi.rows(), phi.cols());
  for (int r = 0; r < g.size(); ++r)
    out.row(r) = curvature_gradient_G(t, vec_at(phi, r), spinor_at(psi, r, s)).transpose();
  return out;
}

/// Pointwise R_ijkl <psi^i,psi^k><psi^j,psi^l>; `leak` receives the largest discarded imaginary part.
template <TargetGeometry T>
Eigen::VectorXd curvature_quadratic_field(const T& t, const DomainGrid& g, const RealField& phi,
                                          const SpinorField& psi, double* leak = nullptr) {
  const int s = g.spinor_rank();
  Eigen::VectorXd out(g.size());
  double worst = 0.0;
  for (int r = 0; r < g.size(); ++r) {
    const SpinorAtPoint v = spinor_at(psi, r, s);
    const cd qv = curvature_quadratic_complex(local_curvature(t, vec_at(phi, r)), v);
    worst = std::max(worst, std::abs(qv.imag()));
    real_or_throw(qv, quartic_scale(v), "curvature_quadratic");
    out(r) = qv.real();
  }
  if (leak) *leak = worst;
  return out;
}

}  // namespace dhm
