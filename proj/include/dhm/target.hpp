#pragma once

#include <cmath>
#include <concepts>
#include <string>
#include <variant>

#include <Eigen/Dense>

#include "dhm/errors.hpp"
#include "dhm/types.hpp"

namespace dhm {

/// Closed-form embedded target N in R^q. The second fundamental form is given as
/// an ambient extension B(p)(X, Y) that equals II(PX, PY) and vanishes on normals.
template <class T>
concept TargetGeometry = requires(const T& t, const Vec& p, const Vec& x) {
  { t.ambient_dim() } -> std::convertible_to<int>;
  { t.intrinsic_dim() } -> std::convertible_to<int>;
  { t.tolerance() } -> std::convertible_to<double>;
  { t.project(p) } -> std::convertible_to<Vec>;
  { t.defect(p) } -> std::convertible_to<double>;
  { t.normal_frame(p) } -> std::convertible_to<Mat>;
  { t.tangent_frame(p) } -> std::convertible_to<Mat>;
  { t.second_fundamental_form(p, x, x) } -> std::convertible_to<Vec>;
  { t.second_fundamental_form_derivative(p, x, x, x) } -> std::convertible_to<Vec>;
  { t.shape_operator(p, x, x) } -> std::convertible_to<Vec>;
  { t.name() } -> std::convertible_to<std::string>;
};

/// Round unit sphere S^n in R^{n+1}.
class Sphere {
 public:
  explicit Sphere(int n = 2, double tol = 1e-9) : n_(n), tol_(tol) {
    if (n < 1 || n + 1 > kMaxAmbient) throw DomainError("sphere dimension must be in 1.." + std::to_string(kMaxAmbient - 1));
    if (!(tol > 0)) throw DomainError("target tolerance must be positive");
  }

  int ambient_dim() const { return n_ + 1; }
  int intrinsic_dim() const { return n_; }
  double tolerance() const { return tol_; }
  std::string name() const { return "sphere"; }

  Vec project(const Vec& p) const {
    check_size(p);
    const double r = p.norm();
    if (!(r > 1e-14)) throw SingularProjection("sphere projection undefined at the origin");
    return p / r;
  }
  double defect(const Vec& p) const { return std::abs(p.norm() - 1.0); }

  Vec normal(const Vec& p) const { return p; }
  Mat normal_frame(const Vec& p) const { return Mat(p); }

  Mat tangent_frame(const Vec& p) const {
    const Mat pm = p;
    Eigen::HouseholderQR<Mat> qr(pm);
    Mat qm = qr.householderQ();
    return qm.rightCols(n_);
  }

  Mat projector(const Vec& p) const { return Mat::Identity(n_ + 1, n_ + 1) - p * p.transpose(); }

  Vec second_fundamental_form(const Vec& p, const Vec& x, const Vec& y) const {
    return -(x.dot(y) - x.dot(p) * y.dot(p)) * p;
  }

  Vec second_fundamental_form_derivative(const Vec& p, const Vec& w, const Vec& x, const Vec& y) const {
    const double pxy = x.dot(y) - x.dot(p) * y.dot(p);
    return (x.dot(w) * p.dot(y) + p.dot(x) * w.dot(y)) * p - pxy * w;
  }

  Vec shape_operator(const Vec& p, const Vec& xi, const Vec& x) const {
    return -xi.dot(p) * (x - x.dot(p) * p);
  }

 private:
  void check_size(const Vec& p) const {
    if (p.size() != n_ + 1) throw DomainError("point dimension does not match sphere ambient dimension");
  }
  int n_;
  double tol_;
};

/// Torus of revolution about the z axis with tube centre radius R0 and tube radius r0.
class TorusOfRevolution {
 public:
  TorusOfRevolution(double major = 2.0, double minor = 1.0, double tol = 1e-9)
      : R0_(major), r0_(minor), tol_(tol) {
    if (!(major > minor && minor > 0.0)) throw DomainError("torus requires R0 > r0 > 0");
    if (!(tol > 0)) throw DomainError("target tolerance must be positive");
  }

  int ambient_dim() const { return 3; }
  int intrinsic_dim() const { return 2; }
  double tolerance() const { return tol_; }
  double major_radius() const { return R0_; }
  double minor_radius() const { return r0_; }
  std::string name() const { return "torus"; }

  /// Point with angles (u, v).
  Vec embed(double u, double v) const {
    Vec p(3);
    const double rho = R0_ + r0_ * std::cos(v);
    p << rho * std::cos(u), rho * std::sin(u), r0_ * std::sin(v);
    return p;
  }
  Vec e_u(double u) const {
    Vec e(3);
    e << -std::sin(u), std::cos(u), 0.0;
    return e;
  }
  Vec e_v(double u, double v) const {
    Vec e(3);
    e << -std::sin(v) * std::cos(u), -std::sin(v) * std::sin(u), std::cos(v);
    return e;
  }

  Vec project(const Vec& p) const {
    check_size(p);
    const double rho = std::hypot(p(0), p(1));
    if (!(rho > 1e-12)) throw SingularProjection("torus projection undefined on the symmetry axis");
    const Vec c = centre(p, rho);
    const Vec d = p - c;
    const double dn = d.norm();
    if (!(dn > 1e-12)) throw SingularProjection("torus projection undefined on the tube centre circle");
    return c + (r0_ / dn) * d;
  }

  double defect(const Vec& p) const {
    const double rho = std::hypot(p(0), p(1));
    return std::abs(std::hypot(rho - R0_, p(2)) - r0_);
  }

  Vec normal(const Vec& p) const {
    const double rho = std::hypot(p(0), p(1));
    return (p - centre(p, rho)) / r0_;
  }
  Mat normal_frame(const Vec& p) const { return Mat(normal(p)); }

  Mat tangent_frame(const Vec& p) const {
    const double u = std::atan2(p(1), p(0));
    const double rho = std::hypot(p(0), p(1));
    const double v = std::atan2(p(2), rho - R0_);
    Mat f(3, 2);
    f.col(0) = e_u(u);
    f.col(1) = e_v(u, v);
    return f;
  }

  Mat projector(const Vec& p) const {
    const Vec nu = normal(p);
    return Mat::Identity(3, 3) - nu * nu.transpose();
  }

  Vec second_fundamental_form(const Vec& p, const Vec& x, const Vec& y) const {
    const Local l = local(p);
    return -(x.dot(l.M * y)) * l.nu;
  }

  Vec second_fundamental_form_derivative(const Vec& p, const Vec& w, const Vec& x, const Vec& y) const {
    const Local l = local(p);
    const double ew = l.e.dot(w);
    Vec wh = w;
    wh(2) = 0.0;
    const Vec de = (wh - ew * l.e) / l.rho;
    const double drho = ew;
    const Mat dDc = -(R0_ * drho / (l.rho * l.rho)) * l.Eperp -
                    (R0_ / l.rho) * (de * l.e.transpose() + l.e * de.transpose());
    const Mat dS = -dDc / r0_;
    const Vec dnu = l.S * w;
    const Mat dP = -(dnu * l.nu.transpose() + l.nu * dnu.transpose());
    const Mat dM = dP * l.S * l.P + l.P * dS * l.P + l.P * l.S * dP;
    return -(x.dot(dM * y)) * l.nu - (x.dot(l.M * y)) * dnu;
  }

  Vec shape_operator(const Vec& p, const Vec& xi, const Vec& x) const {
    const Local l = local(p);
    return -xi.dot(l.nu) * (l.M * x);
  }

 private:
  struct Local {
    double rho;
    Vec e;      // unit horizontal radial direction
    Vec nu;     // outward unit normal
    Mat Eperp;  // E_h - e e^T
    Mat S;      // d nu / dp
    Mat P;
    Mat M;      // P S P
  };

  Vec centre(const Vec& p, double rho) const {
    Vec c(3);
    c << R0_ * p(0) / rho, R0_ * p(1) / rho, 0.0;
    return c;
  }

  Local local(const Vec& p) const {
    check_size(p);
    Local l;
    l.rho = std::hypot(p(0), p(1));
    if (!(l.rho > 1e-12)) throw SingularProjection("torus geometry undefined on the symmetry axis");
    l.e = Vec::Zero(3);
    l.e(0) = p(0) / l.rho;
    l.e(1) = p(1) / l.rho;
    l.nu = (p - R0_ * l.e) / r0_;
    Mat eh = Mat::Zero(3, 3);
    eh(0, 0) = eh(1, 1) = 1.0;
    l.Eperp = eh - l.e * l.e.transpose();
    l.S = (Mat::Identity(3, 3) - (R0_ / l.rho) * l.Eperp) / r0_;
    l.P = Mat::Identity(3, 3) - l.nu * l.nu.transpose();
    l.M = l.P * l.S * l.P;
    return l;
  }

  void check_size(const Vec& p) const {
    if (p.size() != 3) throw DomainError("torus points live in R^3");
  }

  double R0_;
  double r0_;
  double tol_;
};

using EmbeddedTarget = std::variant<Sphere, TorusOfRevolution>;

template <TargetGeometry T>
void require_on_manifold(const T& t, const Vec& p) {
  if (p.size() != t.ambient_dim()) throw DomainError("point dimension does not match target ambient dimension");
  const double d = t.defect(p);
  if (!(d <= t.tolerance()))
    throw OffManifold(t.name() + ": point off the target by " + std::to_string(d));
}

/// q x q orthogonal projector onto T_pN built from the normal frame.
template <TargetGeometry T>
Mat tangent_projector(const T& t, const Vec& p) {
  const Mat nf = t.normal_frame(p);
  return Mat::Identity(t.ambient_dim(), t.ambient_dim()) - nf * nf.transpose();
}

template <TargetGeometry T>
Vec tangent_project(const T& t, const Vec& p, const Vec& v) {
  require_on_manifold(t, p);
  return tangent_projector(t, p) * v;
}

template <TargetGeometry T>
Vec second_fundamental_form(const T& t, const Vec& p, const Vec& x, const Vec& y) {
  require_on_manifold(t, p);
  return t.second_fundamental_form(p, x, y);
}

template <TargetGeometry T>
Vec shape_operator(const T& t, const Vec& p, const Vec& xi, const Vec& x) {
  require_on_manifold(t, p);
  return t.shape_operator(p, xi, x);
}

/// R(X,Y)Z = P(II(X,Z),Y) - P(II(Y,Z),X).
template <TargetGeometry T>
Vec curvature(const T& t, const Vec& p, const Vec& x, const Vec& y, const Vec& z) {
  require_on_manifold(t, p);
  return t.shape_operator(p, t.second_fundamental_form(p, x, z), y) -
         t.shape_operator(p, t.second_fundamental_form(p, y, z), x);
}

}  // namespace dhm
