#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dhm/solver.hpp"

using namespace dhm;
constexpr double kPi = std::numbers::pi;

namespace {

const Sphere kS2(2);

Vec north() {
  Vec v(3);
  v << 0, 0, 1;
  return v;
}

DomainGrid torus2(int n, double t0, double t1) {
  SpinStructure s;
  s.twist = {t0, t1};
  return make_grid(2, {n, n}, {2 * kPi, 2 * kPi}, s);
}

double dphi_norm(const DomainGrid& g, const RealField& phi) {
  const Differential d = differential(g, phi);
  double s = 0.0;
  for (int a = 0; a < g.dim(); ++a) s += d[a].squaredNorm();
  return std::sqrt(g.cell_volume() * s);
}

void expect_monotone(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1]) << "step " << i;
}

SolveResult perturbed_golden(int n, int max_iter) {
  const auto g = make_grid(1, {n}, {2 * kPi});
  Eigen::VectorXcd chi(1);
  chi << 1.0;
  auto [phi, psi] = make_geodesic_example(kS2, g, 1, chi);
  std::mt19937_64 rng(3);
  const RealField p0 = phi + 1e-3 * random_real_field(g, 3, 4, rng);
  const SpinorField s0 = psi + 1e-3 * random_spinor_field(g, 3, 4, rng);
  SolverOptions opt;
  opt.max_iter = max_iter;
  opt.tol_residual = 1e-9;
  return solve(kS2, g, p0, s0, opt);
}

}  // namespace

TEST(SolverOptions, Validation) {
  SolverOptions o;
  EXPECT_NO_THROW(o.validate());
  o.tol_residual = 0;
  EXPECT_THROW(o.validate(), DomainError);
  o = {};
  o.backtrack = 1.0;
  EXPECT_THROW(o.validate(), DomainError);
  o = {};
  o.step0 = -1;
  EXPECT_THROW(o.validate(), DomainError);
}

TEST(GeodesicExample, Construction) {
  const auto g = make_grid(1, {64}, {2 * kPi});
  Eigen::VectorXcd chi = Eigen::VectorXcd::Zero(1);
  auto [phi, psi] = make_geodesic_example(kS2, g, 3, chi);
  EXPECT_EQ(psi.norm(), 0.0);
  EXPECT_LT(norm_inf(tension(kS2, g, phi)), 1e-10);
  EXPECT_NEAR(energy(kS2, g, phi, psi).total, 9 * kPi, 1e-10);

  chi << 1.0;
  SpinStructure ap;
  ap.twist[0] = 0.5;
  EXPECT_THROW(make_geodesic_example(kS2, make_grid(1, {64}, {2 * kPi}, ap), 1, chi), DomainError);
  EXPECT_NO_THROW(make_geodesic_example(kS2, make_grid(1, {64}, {2 * kPi}, ap), 1, Eigen::VectorXcd::Zero(1)));
  EXPECT_THROW(make_geodesic_example(kS2, torus2(16, 0, 0), 1, Eigen::VectorXcd::Zero(2)), DomainError);
  EXPECT_THROW(make_geodesic_example(kS2, g, 1, Eigen::VectorXcd::Zero(2)), DomainError);
}

TEST(GeodesicExample, SpeedTwoResiduals) {
  const auto g = make_grid(1, {256}, {2 * kPi});
  Eigen::VectorXcd chi(1);
  chi << std::polar(1.0, 0.4);
  auto [phi, psi] = make_geodesic_example(kS2, g, 2, chi);
  EXPECT_LT(norm_inf(el_residual_phi(kS2, g, phi, psi)), 1e-10);
  EXPECT_LT(norm_inf(el_residual_psi(kS2, g, phi, psi)), 1e-10);
  EXPECT_NEAR(energy(kS2, g, phi, psi).total, 4 * kPi, 1e-9);
}

TEST(Solve, FixedPoint) {
  const auto g = torus2(16, 0.5, 0);
  RealField phi(g.size(), 3);
  phi.rowwise() = north().transpose();
  const SpinorField psi = SpinorField::Zero(g.size(), 6);
  const SolveResult r = solve(kS2, g, phi, psi, SolverOptions{});
  EXPECT_TRUE(r.report.converged);
  EXPECT_EQ(r.report.iterations, 0);
  EXPECT_EQ((r.phi - phi).norm(), 0.0);
  EXPECT_EQ(r.psi.norm(), 0.0);
}

TEST(Solve, GoldenPerturbationRecovers) {
  const SolveResult r = perturbed_golden(128, 500);
  EXPECT_TRUE(r.report.converged) << r.report.message;
  EXPECT_LT(r.report.residual_phi, 1e-8);
  EXPECT_LT(r.report.residual_psi, 1e-8);
  expect_monotone(r.report.residual_trace);
  EXPECT_EQ(r.report.energy_trace.size(), r.report.residual_trace.size());
  // recomputed independently of the solver state
  const auto g = make_grid(1, {128}, {2 * kPi});
  EXPECT_LT(norm_l2(g, el_residual_phi(kS2, g, r.phi, r.psi)), 1e-8);
  EXPECT_LT(norm_l2(g, el_residual_psi(kS2, g, r.phi, r.psi)), 1e-8);
  EXPECT_NEAR(dphi_norm(g, r.phi), std::sqrt(2 * kPi), 1e-2);
}

TEST(Solve, NonConvergenceReturnsBestIterate) {
  const SolveResult r = perturbed_golden(64, 1);
  EXPECT_FALSE(r.report.converged);
  EXPECT_EQ(r.report.iterations, 1);
  EXPECT_FALSE(r.report.message.empty());
  ASSERT_EQ(r.report.residual_trace.size(), 2u);
  EXPECT_LT(r.report.residual_trace[1], r.report.residual_trace[0]);
}

TEST(Solve, Deterministic) {
  const SolveResult a = perturbed_golden(64, 3);
  const SolveResult b = perturbed_golden(64, 3);
  EXPECT_EQ(a.report.iterations, b.report.iterations);
  EXPECT_EQ(a.report.residual_trace, b.report.residual_trace);
  EXPECT_EQ(a.report.energy_trace, b.report.energy_trace);
  EXPECT_EQ(a.report.krylov_trace, b.report.krylov_trace);
  EXPECT_EQ((a.phi - b.phi).norm(), 0.0);
  EXPECT_EQ((a.psi - b.psi).norm(), 0.0);
}

TEST(Solve, SmallDataAntiperiodicIsTrivial) {
  const auto g = torus2(16, 0.5, 0.5);
  std::mt19937_64 rng(5);
  const RealField phi = random_map(kS2, g, north(), 0.02, 2, rng);
  const SpinorField psi = random_tangent_spinor(kS2, g, phi, 0.02, 2, rng);
  const SolveResult r = solve(kS2, g, phi, psi, SolverOptions{});
  EXPECT_TRUE(r.report.converged);
  expect_monotone(r.report.residual_trace);
  EXPECT_LT(dphi_norm(g, r.phi), 1e-6);
  EXPECT_LT(std::sqrt(g.cell_volume()) * r.psi.norm(), 1e-6);
}

TEST(Solve, SmallDataTorusTarget) {
  const TorusOfRevolution torus(2.0, 1.0);
  const auto g = torus2(16, 0.5, 0.5);
  std::mt19937_64 rng(6);
  const RealField phi = random_map(torus, g, torus.embed(0.3, 0.4), 0.02, 2, rng);
  const SpinorField psi = random_tangent_spinor(torus, g, phi, 0.02, 2, rng);
  const SolveResult r = solve(torus, g, phi, psi, SolverOptions{});
  EXPECT_TRUE(r.report.converged);
  expect_monotone(r.report.residual_trace);
  EXPECT_LT(dphi_norm(g, r.phi), 1e-6);
  EXPECT_LT(std::sqrt(g.cell_volume()) * r.psi.norm(), 1e-6);
}

TEST(Solve, RejectsBadShapes) {
  const auto g = torus2(16, 0, 0);
  EXPECT_THROW(solve(kS2, g, RealField::Zero(g.size(), 2), SpinorField::Zero(g.size(), 6), SolverOptions{}),
               DomainError);
  RealField phi = RealField::Zero(g.size(), 3);
  EXPECT_THROW(solve(kS2, g, phi, SpinorField::Zero(g.size(), 6), SolverOptions{}), SingularProjection);
}

TEST(NonlinearDirac, SingleDirectionAnsatz) {
  const auto g = torus2(16, 0, 0);
  const Mat frame = kS2.tangent_frame(north());
  SpinorField psi = SpinorField::Zero(g.size(), 6);
  Eigen::Vector2cd chi(cd(0.3, 1.1), cd(-0.7, 0.2));
  for (int r = 0; r < g.size(); ++r)
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 2; ++a) psi(r, 2 * i + a) = chi(a) * frame(i, 0);
  RealField phi(g.size(), 3);
  phi.rowwise() = north().transpose();
  EXPECT_LT(norm_inf(curvature_spinor_field(kS2, g, phi, psi)), 1e-15);
  EXPECT_LT(norm_inf(el_residual_psi(kS2, g, phi, psi)), 1e-13);
}

TEST(NonlinearDirac, ZeroAmplitudeIsTrivial) {
  const auto g = make_grid(1, {32}, {2 * kPi});
  const auto br = solve_nonlinear_dirac(kS2, g, north(), 0, 0.0, SolverOptions{});
  EXPECT_TRUE(br.found_solution);
  EXPECT_EQ(br.solution_psi.norm(), 0.0);
  EXPECT_THROW(solve_nonlinear_dirac(kS2, g, north(), 0, -1.0, SolverOptions{}), DomainError);
  EXPECT_THROW(solve_nonlinear_dirac(kS2, g, north(), 10000, 1.0, SolverOptions{}), DomainError);
  Vec off(3);
  off << 0, 0, 2;
  EXPECT_THROW(solve_nonlinear_dirac(kS2, g, off, 0, 1.0, SolverOptions{}), OffManifold);
}

TEST(NonlinearDirac, CircleBranchHasNoCurvature) {
  SpinStructure ap;
  ap.twist[0] = 0.5;
  const auto g = make_grid(1, {64}, {2 * kPi}, ap);
  const auto br = solve_nonlinear_dirac(kS2, g, north(), 0, 2.0, SolverOptions{});
  EXPECT_DOUBLE_EQ(br.seed_eigenvalue, 0.5);
  ASSERT_EQ(br.points.size(), 16u);
  for (const auto& p : br.points) {
    EXPECT_TRUE(p.converged);
    EXPECT_NEAR(p.lambda, 0.5, 1e-12);
    EXPECT_EQ(p.curvature_energy, 0.0);
  }
  EXPECT_FALSE(br.found_solution);
}

TEST(NonlinearDirac, AntiperiodicTorusBranchCrosses) {
  const auto g = torus2(16, 0.5, 0.5);
  const auto br = solve_nonlinear_dirac(kS2, g, north(), 0, 14.0, SolverOptions{});
  const double kappa = std::sqrt(0.5);
  EXPECT_NEAR(br.seed_eigenvalue, kappa, 1e-12);
  ASSERT_TRUE(br.found_solution) << br.message;
  for (std::size_t i = 1; i < br.points.size(); ++i) EXPECT_LT(br.points[i].lambda, br.points[i - 1].lambda);
  // plane-wave solution with |u|^2 = |w|^2 = 3|kappa|
  EXPECT_NEAR(br.solution.amplitude, 2 * kPi * std::sqrt(6 * kappa), 1e-8);
  EXPECT_NEAR(br.solution.curvature_energy, -2 * std::pow(3 * kappa, 2) * 4 * kPi * kPi / 12, 1e-7);
  EXPECT_LT(br.solution.residual, 1e-8);
  RealField phi = br.phi;
  EXPECT_LT(norm_l2(g, el_residual_psi(kS2, g, phi, br.solution_psi)), 1e-8);
  EXPECT_LT(norm_l2(g, el_residual_phi(kS2, g, phi, br.solution_psi)), 1e-8);
}
