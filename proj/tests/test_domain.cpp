#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dhm/fields.hpp"
#include "dhm/grid.hpp"
#include "dhm/spectral.hpp"

using namespace dhm;
constexpr double kPi = std::numbers::pi;

namespace {

DomainGrid circle(int n, double twist = 0.0) {
  SpinStructure s;
  s.twist[0] = twist;
  return make_grid(1, {n}, {2 * kPi}, s);
}

DomainGrid torus(int n, double t0, double t1, double L0 = 2 * kPi, double L1 = 2 * kPi) {
  SpinStructure s;
  s.twist = {t0, t1};
  return make_grid(2, {n, n}, {L0, L1}, s);
}

Eigen::VectorXd nodal(const DomainGrid& g, auto f) {
  Eigen::VectorXd v(g.size());
  for (int r = 0; r < g.size(); ++r) v(r) = f(g.coordinate(r, 0), g.dim() == 2 ? g.coordinate(r, 1) : 0.0);
  return v;
}

}  // namespace

TEST(MakeGrid, CircleHasRankOneSpinors) {
  const auto g = circle(256);
  EXPECT_EQ(g.dim(), 1);
  EXPECT_EQ(g.spinor_rank(), 1);
  EXPECT_EQ(g.size(), 256);
  EXPECT_DOUBLE_EQ(g.spacing(0), 2 * kPi / 256);
}

TEST(MakeGrid, TorusHasRankTwoSpinors) {
  const auto g = torus(64, 0.5, 0.5);
  EXPECT_EQ(g.spinor_rank(), 2);
  EXPECT_EQ(g.size(), 64 * 64);
  EXPECT_FALSE(g.spin().trivial(2));
}

TEST(MakeGrid, RejectsBadInput) {
  EXPECT_THROW(make_grid(3, {8, 8, 8}, {1, 1, 1}), DomainError);
  EXPECT_THROW(make_grid(1, {4}, {1.0}), DomainError);
  EXPECT_THROW(make_grid(1, {16}, {0.0}), DomainError);
  EXPECT_THROW(make_grid(1, {16}, {-1.0}), DomainError);
  SpinStructure bad;
  bad.twist[0] = 0.25;
  EXPECT_THROW(make_grid(1, {16}, {1.0}, bad), DomainError);
}

TEST(Clifford, CircleIsImaginaryUnit) {
  const auto g = circle(16);
  std::mt19937_64 rng(1);
  const SpinorField xi = random_spinor_field(g, 3, 4, rng);
  const SpinorField out = clifford_mul(g, 0, xi);
  EXPECT_LT((out - kI * xi).norm(), 1e-15);
}

TEST(Clifford, RelationsAndSkewSymmetry) {
  for (int dim : {1, 2}) {
    const CliffordRep c(dim);
    const int s = c.rank();
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b) {
        const Eigen::MatrixXcd ac = c.gamma(a) * c.gamma(b) + c.gamma(b) * c.gamma(a);
        const Eigen::MatrixXcd expect = (a == b ? -2.0 : 0.0) * Eigen::MatrixXcd::Identity(s, s);
        EXPECT_EQ((ac - expect).norm(), 0.0);
        EXPECT_EQ((c.gamma(a).adjoint() + c.gamma(a)).norm(), 0.0);
      }
  }
  const auto g = torus(8, 0, 0);
  std::mt19937_64 rng(3);
  const SpinorField chi = random_spinor_field(g, 2, 2, rng), xi = random_spinor_field(g, 2, 2, rng);
  for (int a = 0; a < 2; ++a) {
    const cd lhs = inner(g, chi, clifford_mul(g, a, xi)) + inner(g, clifford_mul(g, a, chi), xi);
    EXPECT_LT(std::abs(lhs), 1e-12);
    EXPECT_LT((clifford_mul(g, a, clifford_mul(g, a, xi)) + xi).norm(), 1e-13);
  }
  EXPECT_THROW(clifford_mul(g, 2, xi), DomainError);
  EXPECT_THROW(clifford_mul(circle(8), 1, SpinorField::Zero(8, 1)), DomainError);
}

TEST(SpectralDerivative, SineToCosine) {
  const auto g = circle(64);
  const Eigen::MatrixXd f = nodal(g, [](double x, double) { return std::sin(x); });
  const Eigen::MatrixXd expect = nodal(g, [](double x, double) { return std::cos(x); });
  EXPECT_LT((spectral_derivative(g, 0, f) - expect).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SpectralDerivative, ConstantSpinorIsFlat) {
  const auto g = torus(16, 0, 0);
  const SpinorField c = SpinorField::Constant(g.size(), 4, cd(0.3, -1.2));
  for (int a = 0; a < 2; ++a) EXPECT_LT(spectral_derivative(g, a, c, true).norm(), 1e-13);
  EXPECT_LT(dirac_flat(g, c).norm(), 1e-13);
}

TEST(SpectralDerivative, AntiperiodicShiftedModes) {
  const auto g = circle(32, 0.5);
  for (int k : {-3, 0, 2}) {
    // stored coefficient e^{ikx} represents e^{i(k+1/2)x}
    SpinorField f(g.size(), 1);
    for (int r = 0; r < g.size(); ++r) f(r, 0) = std::exp(kI * double(k) * g.coordinate(r, 0));
    const SpinorField d = spectral_derivative(g, 0, f, true);
    EXPECT_LT((d - kI * (k + 0.5) * f).norm(), 1e-12);
  }
}

TEST(SpectralDerivative, TwistOnlyOnSecondAxis) {
  const auto g = torus(16, 0.0, 0.5, 2 * kPi, 4 * kPi);
  SpinorField f(g.size(), 2);
  for (int r = 0; r < g.size(); ++r) {
    f(r, 0) = std::exp(kI * (2.0 * g.coordinate(r, 0) + 0.5 * g.coordinate(r, 1)));
    f(r, 1) = 0.0;
  }
  // wavenumber along axis 1 is 2 pi (1 + 1/2) / (4 pi) = 3/4
  EXPECT_LT((spectral_derivative(g, 1, f, true) - kI * 0.75 * f).norm(), 1e-12);
  EXPECT_LT((spectral_derivative(g, 0, f, true) - kI * 2.0 * f).norm(), 1e-12);
}

TEST(SpectralDerivative, CommutesWithClifford) {
  const auto g = torus(16, 0.5, 0);
  std::mt19937_64 rng(5);
  const SpinorField f = random_spinor_field(g, 3, 3, rng);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      EXPECT_LT((spectral_derivative(g, a, clifford_mul(g, b, f), true) -
                 clifford_mul(g, b, spectral_derivative(g, a, f, true)))
                    .norm(),
                1e-11);
}

TEST(DiracFlat, PlaneWaveEigenvalue) {
  const auto g = circle(32);
  for (int k : {-2, 1, 5}) {
    SpinorField f(g.size(), 1);
    for (int r = 0; r < g.size(); ++r) f(r, 0) = std::exp(kI * double(k) * g.coordinate(r, 0));
    EXPECT_LT((dirac_flat(g, f) + double(k) * f).norm(), 1e-12);
  }
}

TEST(DiracFlat, SelfAdjoint) {
  for (double tw : {0.0, 0.5}) {
    const auto g = torus(16, tw, 0.5 - tw);
    std::mt19937_64 rng(11);
    const SpinorField xi = random_spinor_field(g, 3, 4, rng), chi = random_spinor_field(g, 3, 4, rng);
    EXPECT_LT(std::abs(inner(g, dirac_flat(g, xi), chi) - inner(g, xi, dirac_flat(g, chi))), 1e-12);
  }
}

TEST(Laplacian, SineAndConstants) {
  const auto g = circle(32);
  const Eigen::MatrixXd f = nodal(g, [](double x, double) { return std::sin(x); });
  EXPECT_LT((laplacian(g, f) + f).cwiseAbs().maxCoeff(), 1e-13);
  EXPECT_LT(laplacian(g, Eigen::MatrixXd::Constant(32, 2, 3.0)).norm(), 1e-13);
}

TEST(Laplacian, MinusDiracSquared) {
  for (double tw : {0.0, 0.5}) {
    const auto g = torus(16, tw, tw);
    std::mt19937_64 rng(2);
    const SpinorField f = random_spinor_field(g, 2, 4, rng);
    EXPECT_LT((laplacian(g, f, true) + dirac_flat(g, dirac_flat(g, f))).norm(), 1e-10);
  }
}

TEST(Integrate, Quadrature) {
  const auto c = circle(64);
  EXPECT_NEAR(integrate(c, Eigen::VectorXd::Ones(64)), 2 * kPi, 1e-13);
  EXPECT_NEAR(integrate(c, nodal(c, [](double x, double) { return std::sin(x) * std::sin(x); })), kPi, 1e-13);
  const auto t = torus(16, 0, 0);
  EXPECT_NEAR(integrate(t, Eigen::VectorXd::Ones(t.size())), 4 * kPi * kPi, 1e-12);
}

TEST(DiracSpectrum, CircleTrivialHasZeroMode) {
  const auto ev = dirac_spectrum(circle(32), 5);
  EXPECT_NEAR(ev[0], 0.0, 1e-14);
  EXPECT_NEAR(ev[1], 1.0, 1e-12);
  EXPECT_NEAR(ev[2], -1.0, 1e-12);
  EXPECT_NEAR(ev[3], 2.0, 1e-12);
}

TEST(DiracSpectrum, CircleAntiperiodicGap) {
  const auto ev = dirac_spectrum(circle(32, 0.5), 4);
  EXPECT_NEAR(ev[0], 0.5, 1e-12);
  EXPECT_NEAR(ev[1], -0.5, 1e-12);
  EXPECT_NEAR(ev[2], 1.5, 1e-12);
  EXPECT_NEAR(ev[3], -1.5, 1e-12);
}

TEST(DiracSpectrum, TorusStructures) {
  const double r2 = std::sqrt(0.5);
  EXPECT_NEAR(std::abs(dirac_spectrum(torus(16, 0.5, 0.5), 1)[0]), r2, 1e-12);
  EXPECT_NEAR(std::abs(dirac_spectrum(torus(16, 0.5, 0.0), 1)[0]), 0.5, 1e-12);
  EXPECT_NEAR(std::abs(dirac_spectrum(torus(16, 0.0, 0.5), 1)[0]), 0.5, 1e-12);
  const auto ev = dirac_spectrum(torus(16, 0, 0), 4);
  EXPECT_NEAR(ev[0], 0.0, 1e-14);
  EXPECT_NEAR(ev[1], 0.0, 1e-14);
  EXPECT_NEAR(std::abs(ev[2]), 1.0, 1e-12);
}

TEST(DiracSpectrum, CountBound) {
  const auto g = circle(8);
  EXPECT_EQ(dirac_spectrum(g, 7).size(), 7u);
  EXPECT_THROW(dirac_spectrum(g, 8), DomainError);
}

TEST(RandomFields, DeterministicAndBandLimited) {
  const auto g = circle(64);
  std::mt19937_64 a(9), b(9);
  const SpinorField f = random_spinor_field(g, 2, 3, a), h = random_spinor_field(g, 2, 3, b);
  EXPECT_EQ((f - h).norm(), 0.0);
  EXPECT_LT((dealias_two_thirds(g, f) - f).norm(), 1e-12);
  std::mt19937_64 c(4);
  const RealField r = random_real_field(g, 3, 3, c);
  EXPECT_LT((spectral_derivative(g, 0, r) - spectral_derivative(g, 0, Eigen::MatrixXcd(r.cast<cd>()), false).real()).norm(), 1e-12);
}
