#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhm/errors.hpp"
#include "dhm/types.hpp"

namespace dhm {

/// Per-axis spin structure. A twist of 0 is the periodic (trivial) structure,
/// a twist of 1/2 the antiperiodic one.
struct SpinStructure {
  std::array<double, 2> twist{0.0, 0.0};

  static SpinStructure periodic() { return {}; }
  static SpinStructure antiperiodic() { return {{0.5, 0.5}}; }

  bool trivial(int dim) const {
    for (int a = 0; a < dim; ++a)
      if (twist[a] != 0.0) return false;
    return true;
  }
  bool operator==(const SpinStructure&) const = default;
};

/// Clifford generators e_a acting on spinors. Rank 1 uses gamma = i, rank 2
/// uses gamma_1 = i sigma_1 and gamma_2 = i sigma_2.
class CliffordRep {
 public:
  explicit CliffordRep(int dim) : dim_(dim), rank_(dim == 1 ? 1 : 2) {
    if (dim == 1) {
      gamma_[0] = Eigen::Matrix2cd::Zero();
      gamma_[0](0, 0) = kI;
    } else {
      gamma_[0] << 0.0, kI, kI, 0.0;
      gamma_[1] << 0.0, 1.0, -1.0, 0.0;
    }
  }

  int dim() const { return dim_; }
  int rank() const { return rank_; }

  /// Top-left rank x rank block holds the generator.
  Eigen::MatrixXcd gamma(int axis) const {
    check_axis(axis);
    return gamma_[axis].topLeftCorner(rank_, rank_);
  }
  cd entry(int axis, int row, int col) const { return gamma_[axis](row, col); }

  void check_axis(int axis) const {
    if (axis < 0 || axis >= dim_)
      throw DomainError("clifford axis " + std::to_string(axis) + " out of range for dim " +
                        std::to_string(dim_));
  }

 private:
  int dim_;
  int rank_;
  std::array<Eigen::Matrix2cd, 2> gamma_{};
};

/// Uniform periodic node set on S^1 (dim 1) or T^2 (dim 2) with a spin structure.
/// Node index r = i0 + n0 * i1 (axis 0 fastest).
class DomainGrid {
 public:
  DomainGrid(int dim, std::array<int, 2> nodes, std::array<double, 2> periods, SpinStructure spin)
      : dim_(dim), nodes_(nodes), periods_(periods), spin_(spin), clifford_(dim == 2 ? 2 : 1) {
    if (dim != 1 && dim != 2)
      throw DomainError("domain dimension must be 1 or 2, got " + std::to_string(dim));
    for (int a = 0; a < dim; ++a) {
      if (nodes_[a] < 8)
        throw DomainError("need at least 8 nodes per axis, got " + std::to_string(nodes_[a]));
      if (!(periods_[a] > 0.0) || !std::isfinite(periods_[a]))
        throw DomainError("periods must be positive and finite");
      if (spin_.twist[a] != 0.0 && spin_.twist[a] != 0.5)
        throw DomainError("spin twist must be 0 or 1/2");
    }
    if (dim == 1) {
      nodes_[1] = 1;
      periods_[1] = 1.0;
      spin_.twist[1] = 0.0;
    }
    for (int a = 0; a < dim; ++a) {
      build_wavenumbers(a, false, plain_[a]);
      build_wavenumbers(a, true, twisted_[a]);
    }
  }

  int dim() const { return dim_; }
  int nodes(int axis) const { return nodes_[axis]; }
  double period(int axis) const { return periods_[axis]; }
  double spacing(int axis) const { return periods_[axis] / nodes_[axis]; }
  const SpinStructure& spin() const { return spin_; }
  const CliffordRep& clifford() const { return clifford_; }
  int spinor_rank() const { return clifford_.rank(); }
  int size() const { return nodes_[0] * nodes_[1]; }

  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= spacing(a);
    return v;
  }
  double volume() const {
    double v = 1.0;
    for (int a = 0; a < dim_; ++a) v *= periods_[a];
    return v;
  }

  int axis_index(int node, int axis) const { return axis == 0 ? node % nodes_[0] : node / nodes_[0]; }
  double coordinate(int node, int axis) const { return axis_index(node, axis) * spacing(axis); }

  /// Signed integer Fourier index of FFT bin j on an axis (bin n/2 maps to -n/2).
  int mode_index(int axis, int bin) const {
    const int n = nodes_[axis];
    return bin < (n + 1) / 2 ? bin : bin - n;
  }
  bool is_nyquist(int axis, int bin) const {
    const int n = nodes_[axis];
    return n % 2 == 0 && bin == n / 2;
  }

  /// Angular wavenumbers per FFT bin. Untwisted: 2 pi k / L with the Nyquist bin
  /// zeroed. Twisted: 2 pi (k + delta) / L.
  const std::vector<double>& wavenumbers(int axis, bool twisted) const {
    return twisted ? twisted_[axis] : plain_[axis];
  }

 private:
  void build_wavenumbers(int axis, bool twisted, std::vector<double>& out) const {
    const int n = nodes_[axis];
    const double delta = twisted ? spin_.twist[axis] : 0.0;
    out.resize(n);
    for (int j = 0; j < n; ++j) {
      if (delta == 0.0 && is_nyquist(axis, j)) {
        out[j] = 0.0;
        continue;
      }
      out[j] = 2.0 * std::numbers::pi * (mode_index(axis, j) + delta) / periods_[axis];
    }
  }

  int dim_;
  std::array<int, 2> nodes_;
  std::array<double, 2> periods_;
  SpinStructure spin_;
  CliffordRep clifford_;
  std::array<std::vector<double>, 2> plain_{};
  std::array<std::vector<double>, 2> twisted_{};
};

inline DomainGrid make_grid(int dim, const std::vector<int>& nodes, const std::vector<double>& periods,
                            SpinStructure spin = {}) {
  if (dim != 1 && dim != 2)
    throw DomainError("domain dimension must be 1 or 2, got " + std::to_string(dim));
  if (static_cast<int>(nodes.size()) != dim || static_cast<int>(periods.size()) != dim)
    throw DomainError("nodes and periods must have one entry per axis");
  std::array<int, 2> n{nodes[0], dim == 2 ? nodes[1] : 1};
  std::array<double, 2> L{periods[0], dim == 2 ? periods[1] : 1.0};
  return DomainGrid(dim, n, L, spin);
}

/// Uniform trapezoidal quadrature of a scalar nodal field.
inline double integrate(const DomainGrid& grid, const Eigen::VectorXd& f) {
  if (f.size() != grid.size()) throw DomainError("integrand size does not match grid");
  return f.sum() * grid.cell_volume();
}

}  // namespace dhm
