#pragma once

// Brute-force reference sums used only by tests.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;

// Plain box sum over |m_j| <= N of the characteristic series with term factor poly(v).
inline cplx theta_box(const Eigen::MatrixXcd& B, const Eigen::VectorXcd& z,
                      const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta, int N,
                      const std::vector<int>& deriv = {}) {
  const int g = static_cast<int>(B.rows());
  std::vector<int> m(g, -N);
  cplx total = 0.0;
  for (;;) {
    Eigen::VectorXcd v(g);
    for (int j = 0; j < g; ++j) v[j] = double(m[j]) + alpha[j];
    cplx e = cplx(0, pi) * (v.transpose() * B * v)(0) +
             cplx(0, 2 * pi) * ((z + beta.cast<cplx>()).transpose() * v)(0);
    cplx term = std::exp(e);
    for (size_t j = 0; j < deriv.size(); ++j)
      for (int p = 0; p < deriv[j]; ++p) term *= cplx(0, 2 * pi) * v[j];
    total += term;
    int j = 0;
    while (j < g && ++m[j] > N) m[j++] = -N;
    if (j == g) break;
  }
  return total;
}

inline cplx theta_box(const Eigen::MatrixXcd& B, const Eigen::VectorXcd& z, int N) {
  const auto g = B.rows();
  return theta_box(B, z, Eigen::VectorXd::Zero(g), Eigen::VectorXd::Zero(g), N);
}

// Symmetric Eisenstein-type truncation over |n|,|m| <= N excluding 0.
inline cplx lattice_power_sum(cplx w1, cplx w2, int power, int N) {
  cplx s = 0.0;
  for (int n = -N; n <= N; ++n)
    for (int m = -N; m <= N; ++m) {
      if (n == 0 && m == 0) continue;
      s += std::pow(double(n) * w1 + double(m) * w2, -power);
    }
  return s;
}

// Weierstrass series 1/z^2 + sum (1/(z-w)^2 - 1/w^2) over a symmetric box.
inline cplx wp_series(cplx z, cplx w1, cplx w2, int N) {
  cplx s = 1.0 / (z * z);
  for (int n = -N; n <= N; ++n)
    for (int m = -N; m <= N; ++m) {
      if (n == 0 && m == 0) continue;
      cplx w = double(n) * w1 + double(m) * w2;
      s += 1.0 / ((z - w) * (z - w)) - 1.0 / (w * w);
    }
  return s;
}

// Complete elliptic integral of the first kind via the arithmetic-geometric mean.
inline double ellipk_agm(double k) {
  double a = 1.0, b = std::sqrt(1.0 - k * k);
  for (int i = 0; i < 60 && std::abs(a - b) > 1e-16 * a; ++i) {
    double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return pi / (2.0 * a);
}

}  // namespace oracle
