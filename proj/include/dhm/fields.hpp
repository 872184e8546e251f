#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dhm/grid.hpp"
#include "dhm/spectral.hpp"
#include "dhm/types.hpp"

namespace dhm {

inline SpinorAtPoint spinor_at(const SpinorField& psi, int node, int s) {
  const Eigen::Index q = psi.cols() / s;
  SpinorAtPoint out(s, q);
  for (Eigen::Index i = 0; i < q; ++i)
    for (int a = 0; a < s; ++a) out(a, i) = psi(node, i * s + a);
  return out;
}

inline void set_spinor(SpinorField& psi, int node, const SpinorAtPoint& v) {
  const Eigen::Index s = v.rows();
  for (Eigen::Index i = 0; i < v.cols(); ++i)
    for (Eigen::Index a = 0; a < s; ++a) psi(node, i * s + a) = v(a, i);
}

inline Vec vec_at(const RealField& f, int node) { return f.row(node).transpose(); }

/// L2 products with the flat volume. The complex product is conjugate-linear in the first slot.
inline double inner(const DomainGrid& g, const RealField& a, const RealField& b) {
  return a.cwiseProduct(b).sum() * g.cell_volume();
}
inline cd inner(const DomainGrid& g, const SpinorField& a, const SpinorField& b) {
  return (a.conjugate().cwiseProduct(b)).sum() * g.cell_volume();
}
inline double norm_l2(const DomainGrid& g, const RealField& a) { return std::sqrt(inner(g, a, a)); }
inline double norm_l2(const DomainGrid& g, const SpinorField& a) {
  return std::sqrt(a.squaredNorm() * g.cell_volume());
}

/// Largest pointwise Euclidean norm over nodes.
template <class Derived>
double norm_inf(const Eigen::MatrixBase<Derived>& a) {
  return a.rows() == 0 ? 0.0 : a.rowwise().norm().maxCoeff();
}

/// Pointwise squared norm per node.
template <class Derived>
Eigen::VectorXd pointwise_sq(const Eigen::MatrixBase<Derived>& a) {
  return a.rowwise().squaredNorm();
}

/// Random trigonometric polynomial with modes |k_a| <= kmax and coefficients
/// decaying like exp(-|k|^2 / kmax), normalized to unit RMS per column.
inline Eigen::MatrixXcd random_band_limited(const DomainGrid& g, int cols, int kmax, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(g.size(), cols);
  const int n0 = g.nodes(0);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < g.size(); ++r) {
      const int k0 = g.mode_index(0, r % n0);
      const int k1 = g.dim() == 2 ? g.mode_index(1, r / n0) : 0;
      if (std::abs(k0) > kmax || std::abs(k1) > kmax) continue;
      const double w = std::exp(-double(k0 * k0 + k1 * k1) / std::max(kmax, 1));
      const double a = nd(rng), b = nd(rng);
      h(r, c) = w * cd(a, b);
    }
  Eigen::MatrixXcd f = from_modes(g, std::move(h));
  for (int c = 0; c < cols; ++c) {
    const double rms = f.col(c).norm() / std::sqrt(double(g.size()));
    if (rms > 0) f.col(c) /= rms;
  }
  return f;
}

inline RealField random_real_field(const DomainGrid& g, int cols, int kmax, std::mt19937_64& rng) {
  Eigen::MatrixXd f = random_band_limited(g, cols, kmax, rng).real();
  for (int c = 0; c < cols; ++c) {
    const double rms = f.col(c).norm() / std::sqrt(double(g.size()));
    if (rms > 0) f.col(c) /= rms;
  }
  return f;
}

inline SpinorField random_spinor_field(const DomainGrid& g, int q, int kmax, std::mt19937_64& rng) {
  return random_band_limited(g, g.spinor_rank() * q, kmax, rng);
}

}  // namespace dhm
