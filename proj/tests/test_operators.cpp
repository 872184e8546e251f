#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dhm/operators.hpp"
#include "dhm/solver.hpp"

using namespace dhm;
constexpr double kPi = std::numbers::pi;

namespace {

DomainGrid circle(int n, double twist = 0.0) {
  SpinStructure s;
  s.twist[0] = twist;
  return make_grid(1, {n}, {2 * kPi}, s);
}

DomainGrid torus2(int n, double t0, double t1) {
  SpinStructure s;
  s.twist = {t0, t1};
  return make_grid(2, {n, n}, {2 * kPi, 2 * kPi}, s);
}

Vec unit3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v.normalized();
}

template <class T>
double tangency(const T& t, const RealField& phi, const SpinorField& psi, int s) {
  double worst = 0.0;
  for (int r = 0; r < phi.rows(); ++r) {
    const Mat nf = t.normal_frame(vec_at(phi, r));
    worst = std::max(worst, (spinor_at(psi, r, s) * nf.cast<cd>()).norm());
  }
  return worst;
}

const Sphere kS2(2);
const TorusOfRevolution kTorus(2.0, 1.0);

}  // namespace

TEST(Constrain, IdempotentAndTangent) {
  const auto g = torus2(16, 0.5, 0);
  std::mt19937_64 rng(1);
  RealField raw = random_real_field(g, 3, 2, rng);
  raw.col(0).array() += 3.0;
  const SpinorField sraw = random_spinor_field(g, 3, 2, rng);
  for (int pass = 0; pass < 2; ++pass) {
    auto [phi, psi] = pass == 0 ? constrain(kS2, g, raw, sraw) : constrain(kTorus, g, raw, sraw);
    const double tol = 1e-9;
    for (int r = 0; r < g.size(); ++r)
      EXPECT_LT(pass == 0 ? kS2.defect(vec_at(phi, r)) : kTorus.defect(vec_at(phi, r)), tol);
    EXPECT_LT(pass == 0 ? tangency(kS2, phi, psi, 2) : tangency(kTorus, phi, psi, 2), tol);
    auto [phi2, psi2] = pass == 0 ? constrain(kS2, g, phi, psi) : constrain(kTorus, g, phi, psi);
    EXPECT_LT((phi2 - phi).norm(), 1e-13);
    EXPECT_LT((psi2 - psi).norm(), 1e-13);
  }
}

TEST(Constrain, PureNormalSpinorVanishes) {
  const auto g = circle(16);
  RealField phi(16, 3);
  SpinorField psi(16, 3);
  for (int r = 0; r < 16; ++r) {
    const Vec p = unit3(std::cos(r), std::sin(r), 0.3);
    phi.row(r) = p.transpose();
    psi.row(r) = cd(0.4, -1.0) * p.transpose().cast<cd>();
  }
  EXPECT_LT(constrain(kS2, g, phi, psi).second.norm(), 1e-15);
}

TEST(Constrain, ReportsSingularNode) {
  const auto g = circle(8);
  RealField phi = RealField::Ones(8, 3);
  phi.row(5).setZero();
  try {
    constrain_map(kS2, g, phi);
    FAIL() << "expected a singular projection";
  } catch (const SingularProjection& e) {
    EXPECT_EQ(e.node(), 5);
  }
}

TEST(Differential, EquatorAndConstant) {
  const auto g = circle(64);
  auto [phi, psi] = make_geodesic_example(kS2, g, 1, Eigen::VectorXcd::Zero(1));
  const Differential d = differential(g, phi);
  for (int r = 0; r < g.size(); ++r) {
    const double x = g.coordinate(r, 0);
    EXPECT_NEAR(d[0](r, 0), -std::sin(x), 1e-13);
    EXPECT_NEAR(d[0](r, 1), std::cos(x), 1e-13);
    EXPECT_NEAR(d[0](r, 2), 0.0, 1e-13);
  }
  EXPECT_NEAR(0.5 * d[0].squaredNorm() * g.cell_volume(), energy(kS2, g, phi, psi).dirichlet, 1e-13);
  EXPECT_LT(differential(g, RealField::Constant(64, 3, 0.5))[0].norm(), 1e-13);
}

TEST(Tension, GeodesicsAndConstants) {
  const auto g = circle(256);
  for (int m : {1, 2}) {
    auto [phi, psi] = make_geodesic_example(kS2, g, m, Eigen::VectorXcd::Zero(1));
    EXPECT_LT(norm_inf(tension(kS2, g, phi)), 1e-10);
    EXPECT_LT(norm_inf(tension_extrinsic(kS2, g, phi)), 1e-10);
  }
  RealField c(256, 3);
  c.rowwise() = unit3(1, 2, 3).transpose();
  EXPECT_LT(norm_inf(tension(kS2, g, c)), 1e-14);
}

TEST(Tension, NormalFreeAndMatchesExtrinsic) {
  const auto g = torus2(48, 0, 0);
  std::mt19937_64 rng(2);
  const RealField phi = random_map(kTorus, g, kTorus.embed(0.3, 0.5), 0.2, 2, rng);
  const RealField a = tension(kTorus, g, phi), b = tension_extrinsic(kTorus, g, phi);
  EXPECT_LT(norm_inf(a - b), 1e-10 * (1 + norm_inf(a)));
  for (int r = 0; r < g.size(); ++r) EXPECT_LT(std::abs(a.row(r).dot(kTorus.normal(vec_at(phi, r)).transpose())), 1e-12);
}

TEST(CovariantDerivative, ConstantDataAndTangency) {
  const auto g = torus2(16, 0, 0);
  RealField phi(g.size(), 3);
  const Vec p = unit3(0.2, -0.5, 1.0);
  phi.rowwise() = p.transpose();
  const Mat f = kS2.tangent_frame(p);
  SpinorField psi(g.size(), 6);
  for (int r = 0; r < g.size(); ++r)
    for (int i = 0; i < 3; ++i) {
      psi(r, 2 * i) = cd(0.3, 0.1) * f(i, 0);
      psi(r, 2 * i + 1) = cd(-0.2, 0.5) * f(i, 1);
    }
  for (int a = 0; a < 2; ++a) EXPECT_LT(twisted_covariant_derivative(kS2, g, phi, psi, a).norm(), 1e-12);

  const auto gt = torus2(32, 0.5, 0.5);
  std::mt19937_64 rng(3);
  const RealField ph = random_map(kTorus, gt, kTorus.embed(1.0, 2.0), 0.4, 2, rng);
  const SpinorField ps = random_tangent_spinor(kTorus, gt, ph, 1.0, 2, rng);
  for (int a = 0; a < 2; ++a) EXPECT_LT(tangency(kTorus, ph, twisted_covariant_derivative(kTorus, gt, ph, ps, a), 2), 1e-12);
}

TEST(CovariantDerivative, NormalPartIsSecondFundamentalForm) {
  const auto g = torus2(48, 0.5, 0);
  std::mt19937_64 rng(4);
  const RealField phi = random_map(kTorus, g, kTorus.embed(0.0, 0.7), 0.2, 2, rng);
  const SpinorField psi = random_tangent_spinor(kTorus, g, phi, 1.0, 2, rng);
  const Differential d = differential(g, phi);
  for (int a = 0; a < 2; ++a) {
    const SpinorField diff = spectral_derivative(g, a, psi, true) - twisted_covariant_derivative(kTorus, g, phi, psi, a);
    EXPECT_LT(norm_inf(diff - normal_part(kTorus, g, phi, d, psi, a)), 1e-10);
  }
}

TEST(TwistedDirac, GeodesicExampleIsHarmonic) {
  const auto g = circle(256);
  Eigen::VectorXcd chi(1);
  chi << 1.0;
  auto [phi, psi] = make_geodesic_example(kS2, g, 1, chi);
  EXPECT_LT(norm_inf(twisted_dirac(kS2, g, phi, psi)), 1e-10);
  EXPECT_LT(norm_inf(twisted_dirac_extrinsic(kS2, g, phi, psi)), 1e-10);
}

TEST(TwistedDirac, ConstantMapIsProjectedFlatDirac) {
  const auto g = torus2(16, 0.5, 0.5);
  RealField phi(g.size(), 3);
  phi.rowwise() = unit3(1, 1, 1).transpose();
  std::mt19937_64 rng(5);
  const SpinorField psi = random_tangent_spinor(kS2, g, phi, 1.0, 3, rng);
  EXPECT_LT((twisted_dirac(kS2, g, phi, psi) - project_spinor(kS2, g, phi, dirac_flat(g, psi))).norm(), 1e-12);
}

TEST(TwistedDirac, RoutesAgreeAndSelfAdjoint) {
  for (double tw : {0.0, 0.5}) {
    const auto g = torus2(48, tw, 0.5);
    std::mt19937_64 rng(6);
    const RealField phi = random_map(kTorus, g, kTorus.embed(0.5, 0.5), 0.2, 2, rng);
    const SpinorField xi = random_tangent_spinor(kTorus, g, phi, 1.0, 2, rng);
    const SpinorField chi = random_tangent_spinor(kTorus, g, phi, 1.0, 2, rng);
    const SpinorField a = twisted_dirac(kTorus, g, phi, xi), b = twisted_dirac_extrinsic(kTorus, g, phi, xi);
    EXPECT_LT(norm_inf(a - b), 1e-10);
    EXPECT_LT(std::abs(inner(g, a, chi) - inner(g, xi, twisted_dirac(kTorus, g, phi, chi))), 1e-10);
    EXPECT_LT(tangency(kTorus, phi, a, 2), 1e-12);
  }
}

TEST(CouplingR, GeodesicZeroAndTwoRoutes) {
  const auto g = circle(256);
  Eigen::VectorXcd chi(1);
  chi << cd(0.6, 0.8);
  auto [phi, psi] = make_geodesic_example(kS2, g, 1, chi);
  EXPECT_LT(norm_inf(coupling_R(kS2, g, phi, psi)), 1e-12);
  EXPECT_LT(norm_inf(coupling_R(kS2, g, phi, SpinorField::Zero(256, 3))), 1e-15);

  const auto gt = torus2(24, 0.5, 0);
  std::mt19937_64 rng(7);
  const RealField ph = random_map(kTorus, gt, kTorus.embed(0.2, 0.9), 0.4, 2, rng);
  const SpinorField ps = random_tangent_spinor(kTorus, gt, ph, 1.0, 2, rng);
  const RealField a = coupling_R(kTorus, gt, ph, ps), b = coupling_R_shape(kTorus, gt, ph, ps);
  EXPECT_GT(norm_inf(a), 1e-3);
  EXPECT_LT(norm_inf(a - b), 1e-12 * (1 + norm_inf(a)));

  const auto gc = circle(64, 0.5);
  std::mt19937_64 rng2(8);
  const RealField pc = random_map(kS2, gc, unit3(0, 0, 1), 0.5, 2, rng2);
  const SpinorField sc = random_tangent_spinor(kS2, gc, pc, 1.0, 2, rng2);
  const RealField ca = coupling_R(kS2, gc, pc, sc);
  EXPECT_GT(norm_inf(ca), 1e-3);
  EXPECT_LT(norm_inf(ca - coupling_R_shape(kS2, gc, pc, sc)), 1e-12 * (1 + norm_inf(ca)));
}

TEST(CurvatureFields, RankOneVanishes) {
  const auto g = circle(32, 0.5);
  std::mt19937_64 rng(9);
  const RealField phi = random_map(kTorus, g, kTorus.embed(0.2, 0.9), 0.4, 2, rng);
  const SpinorField psi = random_tangent_spinor(kTorus, g, phi, 2.0, 2, rng);
  EXPECT_LT(curvature_spinor_field(kTorus, g, phi, psi).norm(), 1e-12);
  EXPECT_LT(curvature_gradient_field(kTorus, g, phi, psi).norm(), 1e-12);
  EXPECT_LT(curvature_quadratic_field(kTorus, g, phi, psi).norm(), 1e-12);
}

TEST(CurvatureFields, DealiasedFIsTangent) {
  const auto g = torus2(16, 0, 0);
  std::mt19937_64 rng(10);
  const RealField phi = random_map(kTorus, g, kTorus.embed(0.2, 0.9), 0.3, 2, rng);
  const SpinorField psi = random_tangent_spinor(kTorus, g, phi, 1.0, 2, rng);
  const SpinorField f = curvature_spinor_field(kTorus, g, phi, psi, true);
  EXPECT_LT(tangency(kTorus, phi, f, 2), 1e-12);
  EXPECT_LT((curvature_spinor_field(kTorus, g, phi, psi) - curvature_spinor_field_shape(kTorus, g, phi, psi)).norm(), 1e-11);
}
