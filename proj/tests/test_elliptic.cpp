#include <random>

#include "doctest.h"
#include "oracle.hpp"
#include "thetakit/elliptic.hpp"

using namespace thetakit;

TEST_CASE("jacobi thetas") {
  EllipticModulus b(cplx(0.2, 0.9));
  cplx z(0.31, -0.12);
  CHECK(std::abs(jacobi_theta(3, z, b).value() - theta(CVector::Constant(1, z), b.riemann()).value()) < 1e-14);
  CHECK(std::abs(jacobi_theta(1, 0.0, b).value()) < 1e-14);
  for (int k = 2; k <= 4; ++k) CHECK(std::abs(jacobi_theta(k, 0.0, b).value()) > 0.1);
  // i times the classical 2 sum (-1)^n q^{(n+1/2)^2} sin((2n+1) pi z), q = e^{i pi b}
  cplx q = std::exp(kI * kPi * b.b()), ref = 0.0;
  for (int n = 0; n < 30; ++n)
    ref += 2.0 * std::pow(-1.0, n) * std::pow(q, (n + 0.5) * (n + 0.5)) * std::sin((2.0 * n + 1) * kPi * z);
  CHECK(std::abs(jacobi_theta(1, z, b).value() - kI * ref) < 1e-13);
  CHECK(std::abs(jacobi_theta(3, 0.5 * (1.0 + b.b()), b).value()) < 1e-9 * std::abs(jacobi_theta(3, 0.0, b).value()));
  CHECK(std::abs(theta3_zero_count(b) - 1.0) < 1e-6);
  CHECK(std::abs(theta3_zero_count(b, 2048, cplx(-0.13, -0.07)) - 1.0) < 1e-6);
}

TEST_CASE("heat equation") {
  CHECK(heat_equation_residual(0.3, 1.0, 1e-4) < 1e-6);
  CHECK(heat_equation_residual(0.3, 12.0, 1e-4) < 1e-9);
  EllipticModulus b(cplx(0.0, 0.7));
  CHECK(std::abs(jacobi_theta(3, 0.37, b).value() - jacobi_theta(3, 1.37, b).value()) < 1e-12);
}

TEST_CASE("weierstrass p basics") {
  Lattice lat(1.0, cplx(0.3, 1.1));
  cplx z(0.21, 0.17);
  CHECK(std::abs(weierstrass_p(-z, lat) - weierstrass_p(z, lat)) < 1e-10 * std::abs(weierstrass_p(z, lat)));
  cplx s(1e-3, 0.0);
  CHECK(std::abs(s * s * weierstrass_p(s, lat) - 1.0) < 1e-4);
  CHECK(std::abs(weierstrass_p(z + lat.omega1, lat) - weierstrass_p(z, lat)) < 1e-9);
  CHECK(std::abs(weierstrass_p(z + lat.omega2, lat) - weierstrass_p(z, lat)) < 1e-9);
  CHECK_THROWS_AS(weierstrass_p(lat.omega2 * 1.0, lat), Error);
  // derivative consistency
  double h = 1e-5;
  cplx fd = (weierstrass_p(z + h, lat) - weierstrass_p(z - h, lat)) / (2 * h);
  CHECK(std::abs(fd - weierstrass_p_prime(z, lat)) < 1e-6 * std::abs(fd));
}

TEST_CASE("wp against defining series and invariants against lattice sums") {
  Lattice lat(cplx(1.1, 0.2), cplx(-0.3, 1.3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      cplx z = (0.15 + 0.3 * i) * lat.omega1 + (0.1 + 0.35 * j) * lat.omega2;
      cplx ref = oracle::wp_series(z, lat.omega1, lat.omega2, 300);
      CHECK(std::abs(weierstrass_p(z, lat) - ref) < 1e-4 * std::max(1.0, std::abs(ref)));
    }
  auto inv = wp_invariants(lat);
  cplx g2 = 60.0 * oracle::lattice_power_sum(lat.omega1, lat.omega2, 4, 200);
  cplx g3 = 140.0 * oracle::lattice_power_sum(lat.omega1, lat.omega2, 6, 200);
  CHECK(std::abs(inv.g2 - g2) < 1e-4 * std::abs(g2));
  CHECK(std::abs(inv.g3 - g3) < 1e-4 * std::max(1.0, std::abs(g3)));
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int k = 0; k < 10; ++k) {
    cplx z = u(rng) * lat.omega1 + u(rng) * lat.omega2;
    cplx p = weierstrass_p(z, lat), dp = weierstrass_p_prime(z, lat);
    double res = std::abs(dp * dp - 4.0 * p * p * p + inv.g2 * p + inv.g3);
    CHECK(res < 1e-8 * std::max(1.0, std::abs(dp * dp)));
  }
}

TEST_CASE("invariants: square lattice and scaling") {
  auto sq = wp_invariants(Lattice(1.0, kI));
  CHECK(std::abs(sq.g3) < 1e-9);
  cplx s(1.7, 0.4);
  Lattice a(cplx(1.0, 0.1), cplx(0.4, 1.2)), as(s * cplx(1.0, 0.1), s * cplx(0.4, 1.2));
  auto ia = wp_invariants(a), is = wp_invariants(as);
  CHECK(std::abs(is.g2 - ia.g2 / std::pow(s, 4)) < 1e-9 * std::abs(is.g2));
  CHECK(std::abs(is.g3 - ia.g3 / std::pow(s, 6)) < 1e-9 * std::abs(is.g3));
}

TEST_CASE("elliptic function from divisor") {
  EllipticModulus b(cplx(0.1, 1.2));
  auto f = elliptic_from_divisor({0.1, 0.2}, {0.15, 0.15}, b, 2.0);
  cplx z(0.37, 0.41);
  CHECK(std::abs(f(z + 1.0) - f(z)) < 1e-8 * std::abs(f(z)));
  CHECK(std::abs(f(z + b.b()) - f(z)) < 1e-8 * std::abs(f(z)));
  CHECK(std::abs(f(0.1 + 1e-7)) < 1e-5);
  CHECK(std::abs(f(0.15 + 1e-5)) > 1e3);
  auto c = elliptic_from_divisor({0.1, 0.2}, {0.1, 0.2}, b, 3.5);
  CHECK(std::abs(c(z) - 3.5) < 1e-12);
  CHECK_THROWS_AS(elliptic_from_divisor({0.1, 0.2}, {0.1, 0.25}, b, 1.0), Error);
  CHECK_THROWS_AS(elliptic_from_divisor({0.1}, {0.1}, b, 1.0), Error);
  // lattice-shifted Abel sum: sum P - sum Q = b
  auto g = elliptic_from_divisor({0.1 + b.b(), 0.2}, {0.15, 0.15}, b, 1.0);
  CHECK(std::abs(g(z + b.b()) - g(z)) < 1e-8 * std::abs(g(z)));
}

TEST_CASE("elliptic function from poles") {
  EllipticModulus b(cplx(-0.2, 0.95));
  auto f = elliptic_from_poles({0.2, 0.5}, {1.0, -1.0}, 0.3, b);
  cplx z(0.11, 0.23);
  CHECK(std::abs(f(z + 1.0) - f(z)) < 1e-8 * std::abs(f(z)));
  CHECK(std::abs(f(z + b.b()) - f(z)) < 1e-8 * std::abs(f(z)));
  for (size_t j = 0; j < 2; ++j) {
    cplx p = f.pole(j), s = 0.0;
    const int n = 64;
    const double r = 1e-2;
    for (int k = 0; k < n; ++k) {
      cplx e = std::polar(1.0, 2 * kPi * k / n);
      s += f(p + r * e) * r * e * (2 * kPi * kI / double(n));
    }
    cplx residue = s / (2 * kPi * kI);
    CHECK(std::abs(residue - (j == 0 ? 1.0 : -1.0)) < 1e-6);
  }
  auto c = elliptic_from_poles({0.2, 0.5}, {0.0, 0.0}, 0.7, b);
  CHECK(std::abs(c(z) - 0.7) < 1e-15);
  CHECK_THROWS_AS(elliptic_from_poles({0.2, 0.5}, {1.0, 1.0}, 0.0, b), Error);
}
