#pragma once

#include <complex>

#include <Eigen/Dense>

namespace dhm {

using cd = std::complex<double>;
inline constexpr cd kI{0.0, 1.0};

inline constexpr int kMaxAmbient = 4;
inline constexpr int kMaxRank = 2;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAmbient, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxAmbient>;
using CVec = Eigen::Matrix<cd, Eigen::Dynamic, 1, 0, kMaxAmbient, 1>;
using CMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbient, kMaxAmbient>;

/// Spinor components at one point: column i is the spinor psi^i (rank s).
using SpinorAtPoint = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxRank, kMaxAmbient>;

/// Nodal fields: one row per node. Real fields carry q columns; spinor fields
/// carry s*q columns with ambient index i and spinor index sigma at column i*s + sigma.
using RealField = Eigen::MatrixXd;
using SpinorField = Eigen::MatrixXcd;

}  // namespace dhm
