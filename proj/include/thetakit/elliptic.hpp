#pragma once

#include <vector>

#include "thetakit/theta.hpp"

namespace thetakit {

class EllipticModulus {
 public:
  explicit EllipticModulus(cplx b);
  cplx b() const { return b_; }
  const RiemannMatrix& riemann() const { return rm_; }

 private:
  cplx b_;
  RiemannMatrix rm_;
};

struct Lattice {
  cplx omega1, omega2;
  Lattice(cplx w1, cplx w2);
  cplx modulus() const { return omega2 / omega1; }
};

struct EllipticInvariants {
  cplx g2, g3;
};

/// theta_1 = -i theta[1/2,1/2], theta_2 = theta[1/2,0], theta_3 = theta, theta_4 = theta[0,1/2].
ScaledComplex jacobi_theta(int index, cplx z, const EllipticModulus& b, const Tolerance& tol = {});
ScaledComplex jacobi_theta_derivative(int index, int order, cplx z, const EllipticModulus& b,
                                      const Tolerance& tol = {});

/// |4 pi d_t theta(x|it) - d_xx theta(x|it)| by central differences.
double heat_equation_residual(double x, double t, double h);

cplx weierstrass_p(cplx z, const Lattice& lat, const Tolerance& tol = {});
cplx weierstrass_p_prime(cplx z, const Lattice& lat, const Tolerance& tol = {});

/// g2 = 20 c2, g3 = 28 c4 from the Laurent coefficients of wp - 1/z^2 (contour quadrature).
EllipticInvariants wp_invariants(const Lattice& lat, const Tolerance& tol = {});
/// Truncated sums 60 sum w^-4, 140 sum w^-6 over |n|,|m| <= shells. Low accuracy.
EllipticInvariants eisenstein_invariants(const Lattice& lat, int shells);

/// (1/2 pi i) times the contour integral of theta_3'/theta_3 around the parallelogram
/// offset + [0,1] + [0,1] b, midpoint rule with `nodes` points in total.
double theta3_zero_count(const EllipticModulus& b, int nodes = 2048, cplx offset = 0.0);

/// f(z) = C prod theta(z - P_j - (1+b)/2) / theta(z - Q_j - (1+b)/2).
class DivisorEllipticFunction {
 public:
  DivisorEllipticFunction(std::vector<cplx> zeros, std::vector<cplx> poles, EllipticModulus b,
                          cplx c, Tolerance tol);
  cplx operator()(cplx z) const;
  const std::vector<cplx>& zeros() const { return zeros_; }
  const std::vector<cplx>& poles() const { return poles_; }

 private:
  std::vector<cplx> zeros_, poles_;
  EllipticModulus b_;
  cplx c_;
  Tolerance tol_;
};

DivisorEllipticFunction elliptic_from_divisor(const std::vector<cplx>& zeros,
                                              const std::vector<cplx>& poles,
                                              const EllipticModulus& b, cplx c,
                                              const Tolerance& tol = {});

/// f(z) = sum lambda_j d/dz log theta(z - P_j) + C; poles at P_j + (1+b)/2.
class PoleSumEllipticFunction {
 public:
  PoleSumEllipticFunction(std::vector<cplx> p, std::vector<cplx> residues, EllipticModulus b,
                          cplx c, Tolerance tol);
  cplx operator()(cplx z) const;
  cplx pole(size_t j) const;

 private:
  std::vector<cplx> p_, lambda_;
  EllipticModulus b_;
  cplx c_;
  Tolerance tol_;
};

PoleSumEllipticFunction elliptic_from_poles(const std::vector<cplx>& poles,
                                            const std::vector<cplx>& residues, cplx c,
                                            const EllipticModulus& b, const Tolerance& tol = {});

}  // namespace thetakit
