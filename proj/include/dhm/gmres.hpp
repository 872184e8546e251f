#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace dhm {

struct GmresResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double relative_residual = 1.0;
};

/// Restarted GMRES for A M y = b, returning x = M y (right preconditioning).
inline GmresResult gmres(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& A,
                         const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& M, const Eigen::VectorXd& b,
                         double rtol, int restart, int max_iter) {
  GmresResult res;
  const Eigen::Index n = b.size();
  res.x = Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    res.relative_residual = 0.0;
    return res;
  }
  Eigen::VectorXd r = b;
  int total = 0;
  while (total < max_iter) {
    const double beta = r.norm();
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= rtol) break;
    const int m = restart;
    std::vector<Eigen::VectorXd> V;
    V.reserve(m + 1);
    V.push_back(r / beta);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs = Eigen::VectorXd::Zero(m), sn = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
    g(0) = beta;
    int k = 0;
    for (; k < m && total < max_iter; ++k, ++total) {
      Eigen::VectorXd w = A(M(V[k]));
      for (int j = 0; j <= k; ++j) {
        H(j, k) = V[j].dot(w);
        w -= H(j, k) * V[j];
      }
      for (int j = 0; j <= k; ++j) {  // second Gram-Schmidt pass
        const double c = V[j].dot(w);
        H(j, k) += c;
        w -= c * V[j];
      }
      H(k + 1, k) = w.norm();
      for (int j = 0; j < k; ++j) {
        const double t = cs(j) * H(j, k) + sn(j) * H(j + 1, k);
        H(j + 1, k) = -sn(j) * H(j, k) + cs(j) * H(j + 1, k);
        H(j, k) = t;
      }
      const double den = std::hypot(H(k, k), H(k + 1, k));
      cs(k) = den == 0.0 ? 1.0 : H(k, k) / den;
      sn(k) = den == 0.0 ? 0.0 : H(k + 1, k) / den;
      H(k, k) = den;
      H(k + 1, k) = 0.0;
      g(k + 1) = -sn(k) * g(k);
      g(k) = cs(k) * g(k);
      const bool breakdown = std::abs(H(k, k)) < 1e-300;
      res.relative_residual = std::abs(g(k + 1)) / bnorm;
      if (res.relative_residual <= rtol || breakdown || w.norm() == 0.0) {
        ++k;
        ++total;
        break;
      }
      V.push_back(w / w.norm());
    }
    // back substitution on the k x k triangle
    Eigen::VectorXd y = Eigen::VectorXd::Zero(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g(i);
      for (int j = i + 1; j < k; ++j) s -= H(i, j) * y(j);
      y(i) = H(i, i) == 0.0 ? 0.0 : s / H(i, i);
    }
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < k; ++j) z += y(j) * V[j];
    res.x += M(z);
    r = b - A(res.x);
    res.relative_residual = r.norm() / bnorm;
    if (res.relative_residual <= rtol) break;
  }
  res.iterations = total;
  return res;
}

}  // namespace dhm
