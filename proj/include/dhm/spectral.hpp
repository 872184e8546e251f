#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "dhm/grid.hpp"

namespace dhm {

namespace detail {

// One FFT pass over every line of a nodal column along `axis`.
inline void fft_axis(const DomainGrid& g, Eigen::FFT<double>& fft, cd* data, int axis, bool inverse) {
  const int n0 = g.nodes(0), n1 = g.nodes(1);
  const int len = axis == 0 ? n0 : n1;
  const int stride = axis == 0 ? 1 : n0;
  const int lines = axis == 0 ? n1 : n0;
  const int step = axis == 0 ? n0 : 1;
  std::vector<cd> in(len), out(len);
  for (int l = 0; l < lines; ++l) {
    cd* base = data + l * step;
    for (int j = 0; j < len; ++j) in[j] = base[j * stride];
    if (inverse)
      fft.inv(out, in);
    else
      fft.fwd(out, in);
    for (int j = 0; j < len; ++j) base[j * stride] = out[j];
  }
}

inline void fft_column(const DomainGrid& g, Eigen::FFT<double>& fft, cd* data, bool inverse) {
  for (int a = 0; a < g.dim(); ++a) fft_axis(g, fft, data, a, inverse);
}

inline void check_rows(const DomainGrid& g, Eigen::Index rows) {
  if (rows != g.size()) throw DomainError("field rows do not match grid node count");
}

}  // namespace detail

/// Forward transform of every column (all axes).
inline Eigen::MatrixXcd to_modes(const DomainGrid& g, Eigen::MatrixXcd f) {
  detail::check_rows(g, f.rows());
  Eigen::FFT<double> fft;
  for (Eigen::Index c = 0; c < f.cols(); ++c) detail::fft_column(g, fft, f.col(c).data(), false);
  return f;
}

inline Eigen::MatrixXcd from_modes(const DomainGrid& g, Eigen::MatrixXcd f) {
  detail::check_rows(g, f.rows());
  Eigen::FFT<double> fft;
  for (Eigen::Index c = 0; c < f.cols(); ++c) detail::fft_column(g, fft, f.col(c).data(), true);
  return f;
}

/// Multiplies each Fourier coefficient by m(b0, b1), the same scalar for every column.
inline Eigen::MatrixXcd apply_scalar_symbol(const DomainGrid& g, const Eigen::MatrixXcd& f,
                                            const std::function<cd(int, int)>& m) {
  Eigen::MatrixXcd h = to_modes(g, f);
  const int n0 = g.nodes(0);
  for (int r = 0; r < g.size(); ++r) {
    const cd s = m(r % n0, r / n0);
    h.row(r) *= s;
  }
  return from_modes(g, std::move(h));
}

/// Applies an s x s matrix symbol per mode to each ambient block of a spinor field
/// (columns i*s + sigma).
inline Eigen::MatrixXcd apply_spinor_symbol(const DomainGrid& g, const Eigen::MatrixXcd& psi,
                                            const std::function<Eigen::MatrixXcd(int, int)>& m) {
  const int s = g.spinor_rank();
  if (psi.cols() % s != 0) throw DomainError("spinor field column count not a multiple of spinor rank");
  const Eigen::Index q = psi.cols() / s;
  Eigen::MatrixXcd h = to_modes(g, psi);
  const int n0 = g.nodes(0);
  for (int r = 0; r < g.size(); ++r) {
    const Eigen::MatrixXcd sym = m(r % n0, r / n0);
    for (Eigen::Index i = 0; i < q; ++i) {
      Eigen::VectorXcd v = h.row(r).segment(i * s, s).transpose();
      h.row(r).segment(i * s, s) = (sym * v).transpose();
    }
  }
  return from_modes(g, std::move(h));
}

/// Fourier-diagonal derivative along `axis`. Twisted fields use modes shifted by the spin twist.
inline Eigen::MatrixXcd spectral_derivative(const DomainGrid& g, int axis, const Eigen::MatrixXcd& f,
                                            bool twisted) {
  g.clifford().check_axis(axis);
  const auto& k = g.wavenumbers(axis, twisted);
  return apply_scalar_symbol(g, f, [&](int b0, int b1) { return kI * k[axis == 0 ? b0 : b1]; });
}

inline Eigen::MatrixXd spectral_derivative(const DomainGrid& g, int axis, const Eigen::MatrixXd& f) {
  return spectral_derivative(g, axis, Eigen::MatrixXcd(f.cast<cd>()), false).real();
}

inline Eigen::MatrixXcd laplacian(const DomainGrid& g, const Eigen::MatrixXcd& f, bool twisted) {
  const auto& k0 = g.wavenumbers(0, twisted);
  const int dim = g.dim();
  return apply_scalar_symbol(g, f, [&](int b0, int b1) {
    double s = -k0[b0] * k0[b0];
    if (dim == 2) {
      const double k1 = g.wavenumbers(1, twisted)[b1];
      s -= k1 * k1;
    }
    return cd(s, 0.0);
  });
}

inline Eigen::MatrixXd laplacian(const DomainGrid& g, const Eigen::MatrixXd& f) {
  return laplacian(g, Eigen::MatrixXcd(f.cast<cd>()), false).real();
}

/// gamma_axis applied to every spinor factor; identity on the ambient factor.
inline Eigen::MatrixXcd clifford_mul(const DomainGrid& g, int axis, const Eigen::MatrixXcd& psi) {
  const CliffordRep& c = g.clifford();
  c.check_axis(axis);
  const int s = c.rank();
  if (psi.cols() % s != 0) throw DomainError("spinor field column count not a multiple of spinor rank");
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(psi.rows(), psi.cols());
  for (Eigen::Index i = 0; i < psi.cols() / s; ++i)
    for (int a = 0; a < s; ++a)
      for (int b = 0; b < s; ++b) {
        const cd e = c.entry(axis, a, b);
        if (e != 0.0) out.col(i * s + a) += e * psi.col(i * s + b);
      }
  return out;
}

/// Symbol of the flat Dirac operator at FFT bins (b0, b1): sum_a gamma_a * i kappa_a.
inline Eigen::MatrixXcd dirac_symbol(const DomainGrid& g, int b0, int b1) {
  const CliffordRep& c = g.clifford();
  Eigen::MatrixXcd sym = kI * g.wavenumbers(0, true)[b0] * c.gamma(0);
  if (g.dim() == 2) sym += kI * g.wavenumbers(1, true)[b1] * c.gamma(1);
  return sym;
}

inline Eigen::MatrixXcd dirac_flat(const DomainGrid& g, const Eigen::MatrixXcd& psi) {
  return apply_spinor_symbol(g, psi, [&](int b0, int b1) { return dirac_symbol(g, b0, b1); });
}

/// Zeroes every mode with |k| above n/3 on some axis.
inline Eigen::MatrixXcd dealias_two_thirds(const DomainGrid& g, const Eigen::MatrixXcd& f) {
  return apply_scalar_symbol(g, f, [&](int b0, int b1) {
    const int b[2] = {b0, b1};
    for (int a = 0; a < g.dim(); ++a)
      if (3 * std::abs(g.mode_index(a, b[a])) > g.nodes(a)) return cd(0.0);
    return cd(1.0);
  });
}

struct DiracMode {
  double eigenvalue;
  int bin0;
  int bin1;
  Eigen::VectorXcd spinor;  // unit eigenvector of the symbol
};

/// Eigenpairs of the flat Dirac operator, ordered by |lambda| then lambda descending.
/// Nyquist bins of untwisted axes are left out since their derivative symbol is zeroed.
inline std::vector<DiracMode> dirac_modes(const DomainGrid& g) {
  std::vector<DiracMode> modes;
  const bool twist0 = g.spin().twist[0] != 0.0;
  const bool twist1 = g.spin().twist[1] != 0.0;
  for (int b1 = 0; b1 < g.nodes(1); ++b1) {
    if (g.dim() == 2 && !twist1 && g.is_nyquist(1, b1)) continue;
    for (int b0 = 0; b0 < g.nodes(0); ++b0) {
      if (!twist0 && g.is_nyquist(0, b0)) continue;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dirac_symbol(g, b0, b1));
      for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j)
        modes.push_back({es.eigenvalues()(j), b0, b1, es.eigenvectors().col(j)});
    }
  }
  auto key = [](double x) { return std::llround(x * 1e9); };
  std::stable_sort(modes.begin(), modes.end(), [&](const DiracMode& a, const DiracMode& b) {
    const auto ka = key(std::abs(a.eigenvalue)), kb = key(std::abs(b.eigenvalue));
    if (ka != kb) return ka < kb;
    return key(a.eigenvalue) > key(b.eigenvalue);
  });
  return modes;
}

inline std::vector<double> dirac_spectrum(const DomainGrid& g, std::size_t count) {
  const auto modes = dirac_modes(g);
  if (count > modes.size()) throw DomainError("requested more eigenvalues than resolved modes");
  std::vector<double> out(count);
  for (std::size_t j = 0; j < count; ++j) out[j] = modes[j].eigenvalue;
  return out;
}

}  // namespace dhm
