#include "thetakit/elliptic.hpp"

#include <algorithm>
#include <cmath>

namespace thetakit {

namespace {

CVector v1(cplx z) { return CVector::Constant(1, z); }

Characteristic jacobi_char(int index) {
  switch (index) {
    case 1: return Characteristic::uniform(1, 0.5, 0.5);
    case 2: return Characteristic::uniform(1, 0.5, 0.0);
    case 3: return Characteristic::uniform(1, 0.0, 0.0);
    case 4: return Characteristic::uniform(1, 0.0, 0.5);
    default: throw Error(ErrorCode::InvalidArgument, "theta index must be 1..4");
  }
}

// Distance from u to the nearest point of Z + bZ.
double lattice_distance(cplx u, const EllipticModulus& b) {
  auto red = reduce_mod_lattice(v1(u), b.riemann());
  cplx r = red.residual[0];
  double best = std::abs(r);
  for (int n = -1; n <= 1; ++n)
    for (int m = -1; m <= 1; ++m) best = std::min(best, std::abs(r - double(n) - double(m) * b.b()));
  return best;
}

double shortest_vector(const EllipticModulus& b) {
  double best = 1.0;
  for (int n = -3; n <= 3; ++n)
    for (int m = 1; m <= 3; ++m) best = std::min(best, std::abs(double(n) + double(m) * b.b()));
  return best;
}

// Log-derivatives of theta_1 on Z + bZ: (L1, L2, L3) = (log th)', '', '''.
void log_derivs(cplx u, const EllipticModulus& b, const Tolerance& tol, cplx out[3]) {
  Characteristic c = jacobi_char(1);
  const auto& B = b.riemann();
  ScaledComplex t0 = theta_char(c, v1(u), B, tol);
  cplx r1 = ratio(theta_derivative({1}, c, v1(u), B, tol), t0);
  cplx r2 = ratio(theta_derivative({2}, c, v1(u), B, tol), t0);
  cplx r3 = ratio(theta_derivative({3}, c, v1(u), B, tol), t0);
  out[0] = r1;
  out[1] = r2 - r1 * r1;
  out[2] = r3 - 3.0 * r2 * r1 + 2.0 * r1 * r1 * r1;
}

// Constant making the Laurent expansion of -(log th1)'' + C at 0 free of a constant term.
cplx wp_constant(const EllipticModulus& b, const Tolerance& tol) {
  Characteristic c = jacobi_char(1);
  cplx d1 = theta_derivative({1}, c, v1(0.0), b.riemann(), tol).value();
  cplx d3 = theta_derivative({3}, c, v1(0.0), b.riemann(), tol).value();
  return d3 / (3.0 * d1);
}

}  // namespace

EllipticModulus::EllipticModulus(cplx b)
    : b_(b), rm_(validate_riemann_matrix(CMatrix::Constant(1, 1, b))) {}

Lattice::Lattice(cplx w1, cplx w2) : omega1(w1), omega2(w2) {
  if (w1 == 0.0 || w2 == 0.0 || !(std::imag(w2 / w1) > 0.0))
    throw Error(ErrorCode::InvalidArgument, "lattice needs Im(omega2/omega1) > 0");
}

ScaledComplex jacobi_theta(int index, cplx z, const EllipticModulus& b, const Tolerance& tol) {
  ScaledComplex v = theta_char(jacobi_char(index), v1(z), b.riemann(), tol);
  return index == 1 ? v * (-kI) : v;
}

ScaledComplex jacobi_theta_derivative(int index, int order, cplx z, const EllipticModulus& b,
                                      const Tolerance& tol) {
  ScaledComplex v = theta_derivative({order}, jacobi_char(index), v1(z), b.riemann(), tol);
  return index == 1 ? v * (-kI) : v;
}

double heat_equation_residual(double x, double t, double h) {
  if (!(t > 0.0) || !(h > 0.0) || h >= t)
    throw Error(ErrorCode::InvalidArgument, "need t > h > 0");
  Tolerance tol{1e-16, 40.0};
  auto th = [&](double xx, double tt) {
    return theta(v1(xx), validate_riemann_matrix(CMatrix::Constant(1, 1, cplx(0.0, tt))), tol)
        .value();
  };
  cplx c = th(x, t);
  cplx dt = (th(x, t + h) - th(x, t - h)) / (2.0 * h);
  cplx dxx = (th(x + h, t) - 2.0 * c + th(x - h, t)) / (h * h);
  return std::abs(4.0 * kPi * dt - dxx);
}

cplx weierstrass_p(cplx z, const Lattice& lat, const Tolerance& tol) {
  EllipticModulus b(lat.modulus());
  cplx u = z / lat.omega1;
  if (lattice_distance(u, b) < 1e-8)
    throw Error(ErrorCode::PoleProximity, "argument too close to a lattice point");
  cplx d[3];
  log_derivs(u, b, tol, d);
  return (-d[1] + wp_constant(b, tol)) / (lat.omega1 * lat.omega1);
}

cplx weierstrass_p_prime(cplx z, const Lattice& lat, const Tolerance& tol) {
  EllipticModulus b(lat.modulus());
  cplx u = z / lat.omega1;
  if (lattice_distance(u, b) < 1e-8)
    throw Error(ErrorCode::PoleProximity, "argument too close to a lattice point");
  cplx d[3];
  log_derivs(u, b, tol, d);
  return -d[2] / (lat.omega1 * lat.omega1 * lat.omega1);
}

EllipticInvariants wp_invariants(const Lattice& lat, const Tolerance& tol) {
  EllipticModulus b(lat.modulus());
  const double rho = 0.5 * shortest_vector(b);
  const cplx c = wp_constant(b, tol);
  auto coeffs = [&](int n, cplx& c2, cplx& c4) {
    c2 = c4 = 0.0;
    for (int j = 0; j < n; ++j) {
      cplx e = std::polar(1.0, 2.0 * kPi * (j + 0.5) / n);
      cplx u = rho * e;
      cplx d[3];
      log_derivs(u, b, tol, d);
      cplx f = -d[1] + c - 1.0 / (u * u);
      c2 += f / (e * e);
      c4 += f / (e * e * e * e);
    }
    c2 /= double(n) * rho * rho;
    c4 /= double(n) * std::pow(rho, 4);
  };
  cplx a2, a4, b2, b4;
  coeffs(48, a2, a4);
  coeffs(96, b2, b4);
  if (std::abs(a2 - b2) > 1e-9 * std::max(1.0, std::abs(b2)) ||
      std::abs(a4 - b4) > 1e-9 * std::max(1.0, std::abs(b4)))
    throw Error(ErrorCode::ContourFailure, "Laurent coefficients did not settle");
  cplx w4 = std::pow(lat.omega1, 4), w6 = std::pow(lat.omega1, 6);
  return {20.0 * b2 / w4, 28.0 * b4 / w6};
}

EllipticInvariants eisenstein_invariants(const Lattice& lat, int shells) {
  cplx s4 = 0.0, s6 = 0.0;
  for (int n = -shells; n <= shells; ++n)
    for (int m = -shells; m <= shells; ++m) {
      if (n == 0 && m == 0) continue;
      cplx w = double(n) * lat.omega1 + double(m) * lat.omega2;
      cplx w2 = w * w;
      s4 += 1.0 / (w2 * w2);
      s6 += 1.0 / (w2 * w2 * w2);
    }
  return {60.0 * s4, 140.0 * s6};
}

double theta3_zero_count(const EllipticModulus& b, int nodes, cplx offset) {
  const int per_edge = std::max(nodes / 4, 8);
  const cplx corners[5] = {offset, offset + 1.0, offset + 1.0 + b.b(), offset + b.b(), offset};
  Characteristic c = Characteristic::zero(1);
  cplx total = 0.0;
  for (int e = 0; e < 4; ++e) {
    cplx a = corners[e], d = corners[e + 1] - corners[e];
    for (int j = 0; j < per_edge; ++j) {
      cplx z = a + d * ((j + 0.5) / per_edge);
      ScaledComplex t = theta_char(c, v1(z), b.riemann());
      cplx dl = ratio(theta_derivative({1}, c, v1(z), b.riemann()), t);
      total += dl * d / double(per_edge);
    }
  }
  return (total / (2.0 * kPi * kI)).real();
}

DivisorEllipticFunction::DivisorEllipticFunction(std::vector<cplx> zeros, std::vector<cplx> poles,
                                                 EllipticModulus b, cplx c, Tolerance tol)
    : zeros_(std::move(zeros)), poles_(std::move(poles)), b_(b), c_(c), tol_(tol) {}

cplx DivisorEllipticFunction::operator()(cplx z) const {
  const cplx half = 0.5 * (1.0 + b_.b());
  ScaledComplex acc(c_);
  for (size_t j = 0; j < zeros_.size(); ++j) {
    acc *= theta(v1(z - zeros_[j] - half), b_.riemann(), tol_);
    acc /= theta(v1(z - poles_[j] - half), b_.riemann(), tol_);
  }
  return acc.value();
}

DivisorEllipticFunction elliptic_from_divisor(const std::vector<cplx>& zeros,
                                              const std::vector<cplx>& poles,
                                              const EllipticModulus& b, cplx c,
                                              const Tolerance& tol) {
  if (zeros.size() != poles.size())
    throw Error(ErrorCode::InvalidArgument, "zero and pole counts differ");
  if (zeros.size() <= 1)
    throw Error(ErrorCode::DegenerateCount, "need at least two zeros and two poles");
  cplx diff = 0.0;
  for (size_t j = 0; j < zeros.size(); ++j) diff += zeros[j] - poles[j];
  auto red = reduce_mod_lattice(v1(diff), b.riemann());
  if (std::abs(red.residual[0]) > 1e-9)
    throw Error(ErrorCode::AbelConditionViolated, "sum of zeros minus poles not in the lattice");
  // Move the lattice part of the sum onto the first zero so the quotient is b-periodic.
  std::vector<cplx> p = zeros;
  p[0] -= double(red.m[0]) * b.b() + double(red.n[0]) + red.residual[0];
  return DivisorEllipticFunction(p, poles, b, c, tol);
}

PoleSumEllipticFunction::PoleSumEllipticFunction(std::vector<cplx> p, std::vector<cplx> residues,
                                                 EllipticModulus b, cplx c, Tolerance tol)
    : p_(std::move(p)), lambda_(std::move(residues)), b_(b), c_(c), tol_(tol) {}

cplx PoleSumEllipticFunction::operator()(cplx z) const {
  cplx s = c_;
  Characteristic ch = Characteristic::zero(1);
  for (size_t j = 0; j < p_.size(); ++j) {
    if (lambda_[j] == 0.0) continue;
    CVector u = v1(z - p_[j]);
    s += lambda_[j] * ratio(theta_derivative({1}, ch, u, b_.riemann(), tol_),
                            theta(u, b_.riemann(), tol_));
  }
  return s;
}

cplx PoleSumEllipticFunction::pole(size_t j) const { return p_.at(j) + 0.5 * (1.0 + b_.b()); }

PoleSumEllipticFunction elliptic_from_poles(const std::vector<cplx>& poles,
                                            const std::vector<cplx>& residues, cplx c,
                                            const EllipticModulus& b, const Tolerance& tol) {
  if (poles.size() != residues.size())
    throw Error(ErrorCode::InvalidArgument, "pole and residue counts differ");
  cplx sum = 0.0;
  for (cplx l : residues) sum += l;
  if (std::abs(sum) > 1e-12) throw Error(ErrorCode::ResidueSumNonzero, "residues must sum to 0");
  return PoleSumEllipticFunction(poles, residues, b, c, tol);
}

}  // namespace thetakit
