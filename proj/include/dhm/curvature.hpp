#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "dhm/errors.hpp"
#include "dhm/grid.hpp"
#include "dhm/target.hpp"
#include "dhm/types.hpp"

namespace dhm {

/// Ambient second fundamental form matrices B[m](i, j) = II(e_i, e_j)_m and the
/// Gauss curvature tensor R(i,j,k,l) = <R(e_i,e_j)e_l, e_k> at one point, R(X,Y) = [nabla_X, nabla_Y].
struct LocalCurvature {
  int q = 0;
  std::array<Mat, kMaxAmbient> B{};
  std::vector<double> R;

  double operator()(int i, int j, int k, int l) const { return R[((i * q + j) * q + k) * q + l]; }
};

template <TargetGeometry T>
std::array<Mat, kMaxAmbient> second_fundamental_matrices(const T& t, const Vec& p) {
  const int q = t.ambient_dim();
  std::array<Mat, kMaxAmbient> B{};
  for (int m = 0; m < q; ++m) B[m] = Mat::Zero(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = i; j < q; ++j) {
      const Vec b = t.second_fundamental_form(p, Vec::Unit(q, i), Vec::Unit(q, j));
      for (int m = 0; m < q; ++m) B[m](i, j) = B[m](j, i) = b(m);
    }
  return B;
}

template <TargetGeometry T>
std::array<Mat, kMaxAmbient> second_fundamental_derivative_matrices(const T& t, const Vec& p, const Vec& w) {
  const int q = t.ambient_dim();
  std::array<Mat, kMaxAmbient> D{};
  for (int m = 0; m < q; ++m) D[m] = Mat::Zero(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = i; j < q; ++j) {
      const Vec b = t.second_fundamental_form_derivative(p, w, Vec::Unit(q, i), Vec::Unit(q, j));
      for (int m = 0; m < q; ++m) D[m](i, j) = D[m](j, i) = b(m);
    }
  return D;
}

template <TargetGeometry T>
LocalCurvature local_curvature(const T& t, const Vec& p) {
  require_on_manifold(t, p);
  LocalCurvature c;
  c.q = t.ambient_dim();
  const int q = c.q;
  c.B = second_fundamental_matrices(t, p);
  c.R.assign(std::size_t(q) * q * q * q, 0.0);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j)
      for (int k = 0; k < q; ++k)
        for (int l = 0; l < q; ++l) {
          double v = 0.0;
          for (int m = 0; m < q; ++m) v += c.B[m](i, k) * c.B[m](j, l) - c.B[m](j, k) * c.B[m](i, l);
          c.R[((i * q + j) * q + k) * q + l] = v;
        }
  return c;
}

/// Gram matrix a(j, l) = <psi^j, psi^l>.
inline CMat spinor_gram(const SpinorAtPoint& psi) { return psi.adjoint() * psi; }

inline double quartic_scale(const SpinorAtPoint& psi) {
  const double n2 = psi.squaredNorm();
  return 1.0 + n2 * n2;
}

/// R_ijkl a_ik a_jl before the real part is taken.
inline cd curvature_quadratic_complex(const LocalCurvature& c, const SpinorAtPoint& psi) {
  const CMat a = spinor_gram(psi);
  const int q = c.q;
  cd v = 0.0;
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j)
      for (int k = 0; k < q; ++k)
        for (int l = 0; l < q; ++l) v += c(i, j, k, l) * a(i, k) * a(j, l);
  return v;
}

inline double real_or_throw(cd v, double scale, const char* what) {
  if (std::abs(v.imag()) > 1e-10 * scale)
    throw NumericalError(std::string(what) + ": imaginary part " + std::to_string(v.imag()) + " above tolerance");
  return v.real();
}

inline double curvature_quadratic(const LocalCurvature& c, const SpinorAtPoint& psi) {
  return real_or_throw(curvature_quadratic_complex(c, psi), quartic_scale(psi), "curvature_quadratic");
}

template <TargetGeometry T>
double curvature_quadratic(const T& t, const Vec& p, const SpinorAtPoint& psi) {
  return curvature_quadratic(local_curvature(t, p), psi);
}

/// (1/3) R^i_jkl a_jl psi^k, by tensor contraction.
inline SpinorAtPoint curvature_spinor_F(const LocalCurvature& c, const SpinorAtPoint& psi) {
  const CMat a = spinor_gram(psi);
  const int q = c.q;
  SpinorAtPoint out = SpinorAtPoint::Zero(psi.rows(), q);
  for (int i = 0; i < q; ++i)
    for (int k = 0; k < q; ++k) {
      cd w = 0.0;
      for (int j = 0; j < q; ++j)
        for (int l = 0; l < q; ++l) w += c(i, j, k, l) * a(j, l);
      if (w != 0.0) out.col(i) += w * psi.col(k);
    }
  return out / 3.0;
}

template <TargetGeometry T>
SpinorAtPoint curvature_spinor_F(const T& t, const Vec& p, const SpinorAtPoint& psi) {
  return curvature_spinor_F(local_curvature(t, p), psi);
}

namespace detail {

template <TargetGeometry T>
CVec complex_ii(const T& t, const Vec& p, const CVec& x, const Vec& y) {
  const Vec re = t.second_fundamental_form(p, x.real(), y);
  const Vec im = t.second_fundamental_form(p, x.imag(), y);
  return re.cast<cd>() + kI * im.cast<cd>();
}

template <TargetGeometry T>
CVec complex_shape(const T& t, const Vec& p, const CVec& xi, const CVec& x) {
  const Vec xr = x.real(), xim = x.imag(), yr = xi.real(), yi = xi.imag();
  const Vec rr = t.shape_operator(p, yr, xr), ri = t.shape_operator(p, yr, xim);
  const Vec ir = t.shape_operator(p, yi, xr), ii = t.shape_operator(p, yi, xim);
  return (rr - ii).cast<cd>() + kI * (ri + ir).cast<cd>();
}

}  // namespace detail

/// Same F-term composed from the shape operator and the second fundamental form:
/// (1/3) a_jl [P(II(e_l,e_j), psi) - P(II(psi,e_j), e_l)].
template <TargetGeometry T>
SpinorAtPoint curvature_spinor_F_shape(const T& t, const Vec& p, const SpinorAtPoint& psi) {
  require_on_manifold(t, p);
  const int q = t.ambient_dim();
  const CMat a = spinor_gram(psi);
  SpinorAtPoint out = SpinorAtPoint::Zero(psi.rows(), q);
  for (Eigen::Index s = 0; s < psi.rows(); ++s) {
    const CVec ps = psi.row(s).transpose();
    CVec acc = CVec::Zero(q);
    for (int j = 0; j < q; ++j) {
      const Vec ej = Vec::Unit(q, j);
      const CVec iipj = detail::complex_ii(t, p, ps, ej);
      for (int l = 0; l < q; ++l) {
        if (a(j, l) == 0.0) continue;
        const Vec el = Vec::Unit(q, l);
        const CVec first = detail::complex_shape(t, p, t.second_fundamental_form(p, el, ej).template cast<cd>(), ps);
        const CVec second = detail::complex_shape(t, p, iipj, el.cast<cd>());
        acc += a(j, l) * (first - second);
      }
    }
    out.row(s) = acc.transpose() / 3.0;
  }
  return out;
}

/// d/dW of R_ijkl a_ik a_jl with a held fixed, for a given derivative of the ambient II.
inline cd curvature_quadratic_derivative(int q, const std::array<Mat, kMaxAmbient>& B,
                                         const std::array<Mat, kMaxAmbient>& D, const CMat& a) {
  cd v = 0.0;
  for (int m = 0; m < q; ++m) {
    const CMat bm = B[m].cast<cd>(), dm = D[m].cast<cd>();
    const cd ba = (bm.cwiseProduct(a)).sum();
    const cd da = (dm.cwiseProduct(a)).sum();
    v += 2.0 * ba * da - 2.0 * (a * dm * a * bm).trace();
  }
  return v;
}

/// Tangent vector G with <G, W> = (1/12) (nabla_W R)(psi, psi, psi, psi).
template <TargetGeometry T>
Vec curvature_gradient_G(const T& t, const Vec& p, const SpinorAtPoint& psi) {
  require_on_manifold(t, p);
  const int q = t.ambient_dim();
  const auto B = second_fundamental_matrices(t, p);
  const CMat a = spinor_gram(psi);
  const Mat frame = t.tangent_frame(p);
  Vec g = Vec::Zero(q);
  for (Eigen::Index k = 0; k < frame.cols(); ++k) {
    const Vec w = frame.col(k);
    const auto D = second_fundamental_derivative_matrices(t, p, w);
    const double d = real_or_throw(curvature_quadratic_derivative(q, B, D, a), quartic_scale(psi),
                                   "curvature_gradient_G");
    g += (d / 12.0) * w;
  }
  return g;
}

/// Coupling term at one point from the curvature tensor:
/// R^m = 1/2 R(j,i,l,m) dphi_a^l <psi^i, gamma_a psi^j>.
inline Vec coupling_R_point(const LocalCurvature& c, const CliffordRep& cl, const std::array<Vec, 2>& dphi,
                            const SpinorAtPoint& psi) {
  const int q = c.q;
  Vec out = Vec::Zero(q);
  cd leak = 0.0;
  double scale = 1.0;
  CVec acc = CVec::Zero(q);
  for (int al = 0; al < cl.dim(); ++al) {
    const CMat cm = psi.adjoint() * cl.gamma(al) * psi;
    scale += cm.norm() * dphi[al].norm();
    for (int m = 0; m < q; ++m) {
      cd v = 0.0;
      for (int i = 0; i < q; ++i)
        for (int j = 0; j < q; ++j) {
          if (cm(i, j) == 0.0) continue;
          double rl = 0.0;
          for (int l = 0; l < q; ++l) rl += c(j, i, l, m) * dphi[al](l);
          v += cm(i, j) * rl;
        }
      acc(m) += 0.5 * v;
    }
  }
  for (int m = 0; m < q; ++m) {
    out(m) = acc(m).real();
    if (std::abs(acc(m).imag()) > std::abs(leak.imag())) leak = acc(m);
  }
  real_or_throw(leak, scale, "coupling_R");
  return out;
}

/// Coupling term from the shape operator: sum_a sum_ij Re<psi^i, gamma_a psi^j> P(II(dphi_a, e_j), e_i).
template <TargetGeometry T>
Vec coupling_R_shape_point(const T& t, const Vec& p, const CliffordRep& cl, const std::array<Vec, 2>& dphi,
                           const SpinorAtPoint& psi) {
  const int q = t.ambient_dim();
  Vec out = Vec::Zero(q);
  for (int al = 0; al < cl.dim(); ++al) {
    const CMat cm = psi.adjoint() * cl.gamma(al) * psi;
    for (int j = 0; j < q; ++j) {
      const Vec ii = t.second_fundamental_form(p, dphi[al], Vec::Unit(q, j));
      for (int i = 0; i < q; ++i) {
        const double w = cm(i, j).real();
        if (w != 0.0) out += w * t.shape_operator(p, ii, Vec::Unit(q, i));
      }
    }
  }
  return out;
}

}  // namespace dhm
