#include <random>

#include "doctest.h"
#include "thetakit/hyperelliptic.hpp"
#include "thetakit/kirchhoff.hpp"

using namespace thetakit;

namespace {

Vec3 random_vec(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return {n(rng), n(rng), n(rng)};
}

// a_3 from the Clebsch condition given a_1, a_2 and b
Vec3 clebsch_a(double a1, double a2, const Vec3& b) {
  // (a2 - a3)/b1 + (a3 - a1)/b2 + (a1 - a2)/b3 = 0 is linear in a3
  double a3 = (a2 / b[0] - a1 / b[1] + (a1 - a2) / b[2]) / (1.0 / b[0] - 1.0 / b[1]);
  return {a1, a2, a3};
}

}  // namespace

TEST_CASE("Kirchhoff right-hand side") {
  std::mt19937 rng(3);
  SUBCASE("Casimirs are stationary for any gradient") {
    for (int i = 0; i < 50; ++i) {
      RigidState s{random_vec(rng), random_vec(rng)};
      Vec3 hp = random_vec(rng), hl = random_vec(rng);
      StateRate r = kirchhoff_rhs(s, hp, hl);
      double scale = s.p.norm() * (s.p.norm() + s.l.norm()) * (hp.norm() + hl.norm());
      CHECK(std::abs(2.0 * s.p.dot(r.p_dot)) <= 1e-14 * scale);
      CHECK(std::abs(r.p_dot.dot(s.l) + s.p.dot(r.l_dot)) <= 1e-14 * scale);
    }
  }
  SUBCASE("parallel gradient freezes p") {
    RigidState s{random_vec(rng), random_vec(rng)};
    StateRate r = kirchhoff_rhs(s, random_vec(rng), 2.5 * s.p);
    CHECK(r.p_dot.norm() <= 1e-15 * s.p.squaredNorm());
  }
  SUBCASE("diagonal Clebsch state at rest") {
    Vec3 b(1, 2, 3);
    ClebschParams c = make_clebsch(clebsch_a(0.7, 1.9, b), b);
    KirchhoffSystem sys = clebsch_system(c);
    RigidState s{Vec3(1, 0, 0), Vec3::Zero()};
    Vec3 hp, hl;
    sys.gradient(s, hp, hl);
    StateRate r = kirchhoff_rhs(s, hp, hl);
    CHECK(r.l_dot.norm() == 0.0);
    CHECK(r.p_dot.norm() == 0.0);
  }
}

TEST_CASE("Clebsch and Steklov parameters") {
  Vec3 b(1, 2, 3);
  ClebschParams c = make_clebsch(clebsch_a(0.7, 1.9, b), b);
  CHECK(clebsch_rho_spread(c) <= 1e-12);
  // quotients written out independently
  CHECK(c.rho == doctest::Approx(b[0] * (b[1] - b[2]) / (c.a[1] - c.a[2])).epsilon(1e-12));
  CHECK(c.rho == doctest::Approx(b[2] * (b[0] - b[1]) / (c.a[0] - c.a[1])).epsilon(1e-12));
  Vec3 bad = c.a;
  bad[0] *= 1.01;
  CHECK_THROWS_AS(make_clebsch(bad, b), Error);
  CHECK_NOTHROW(make_clebsch(bad, b, false));

  SteklovParams s = make_steklov(1.3, 0.2, -0.4, b);
  CHECK(s.a[0] == doctest::Approx(1.69 * 1.0 * 1.0 + 0.2).epsilon(1e-14));
  CHECK(s.a[1] == doctest::Approx(1.69 * 2.0 * 4.0 + 0.2).epsilon(1e-14));
  CHECK(s.a[2] == doctest::Approx(1.69 * 3.0 * 1.0 + 0.2).epsilon(1e-14));
  CHECK(s.c[0] == doctest::Approx(1.3 * 6.0 - 0.4).epsilon(1e-14));
  CHECK(s.c[1] == doctest::Approx(1.3 * 3.0 - 0.4).epsilon(1e-14));
  CHECK(s.c[2] == doctest::Approx(1.3 * 2.0 - 0.4).epsilon(1e-14));
  CHECK(s.d[0] == doctest::Approx(1.69).epsilon(1e-14));
  CHECK(s.d[1] == doctest::Approx(1.69 * 4.0).epsilon(1e-14));
  CHECK(s.d[2] == doctest::Approx(1.69).epsilon(1e-14));
}

TEST_CASE("Kirchhoff integration") {
  Vec3 b(1, 2, 3);
  // the control drift grows like |p|^2, so the state is kept of unit size
  RigidState init{Vec3(1.0, -0.6, 0.8), Vec3(0.3, 1.1, -0.5)};

  SUBCASE("Clebsch conserves all four integrals") {
    ClebschParams c = make_clebsch(clebsch_a(0.7, 1.9, b), b);
    Trajectory tr = integrate(init, clebsch_system(c), 10.0, 1e-3);
    CHECK(tr.t.back() == 10.0);
    for (double d : tr.drift) CHECK(d <= 1e-8);
  }

  SUBCASE("violating the condition breaks the fourth integral only") {
    ClebschParams c = make_clebsch(clebsch_a(0.7, 1.9, b), b);
    Vec3 a = c.a;
    a[0] *= 1.01;
    KirchhoffSystem sys = clebsch_system(make_clebsch(a, b, false));
    sys.H4 = clebsch_system(c).H4;
    Trajectory tr = integrate(init, sys, 10.0, 1e-3);
    CHECK(tr.drift[3] >= 1e-3);
    CHECK(tr.drift[0] <= 1e-8);
    CHECK(tr.drift[1] <= 1e-8);
    CHECK(tr.drift[2] <= 1e-8);
  }

  SUBCASE("Steklov conserves all four integrals") {
    Trajectory tr = integrate(init, steklov_system(make_steklov(1.0, 0.0, 0.0, b)), 10.0, 1e-3);
    for (double d : tr.drift) CHECK(d <= 1e-8);
    Trajectory tr2 = integrate(init, steklov_system(make_steklov(0.7, 0.3, -0.4, b)), 10.0, 1e-3);
    for (double d : tr2.drift) CHECK(d <= 1e-8);
  }

  SUBCASE("adaptive integrator") {
    ClebschParams c = make_clebsch(clebsch_a(0.7, 1.9, b), b);
    Trajectory tr = integrate(init, clebsch_system(c), 10.0, 0.1, Integrator::RKF45, 1e-9);
    Trajectory ref = integrate(init, clebsch_system(c), 10.0, 1e-3);
    CHECK(tr.t.back() == 10.0);
    CHECK(tr.t.size() < ref.t.size());
    CHECK((tr.states.back().p - ref.states.back().p).norm() <= 1e-5);
    for (double d : tr.drift) CHECK(d <= 1e-6);
  }

  SUBCASE("bad step") { CHECK_THROWS_AS(integrate(init, steklov_system(make_steklov(1, 0, 0, b)), 1.0, 0.0), Error); }
}

TEST_CASE("Clebsch spectral curve") {
  Vec3 b(1, 2, 3);
  const double A = 1, B = 2, C = 3, D = 0.1;
  SpectralData sp = clebsch_spectrum(A, B, C, D, b);

  SUBCASE("roots solve the unsquared equation for one branch") {
    for (cplx z : sp.z_roots) {
      cplx q = A * A * (z * z - z * b.sum()) + B * z - C;
      cplx r = 2.0 * D * std::sqrt((z - b[0]) * (z - b[1]) * (z - b[2]));
      CHECK(std::min(std::abs(q + r), std::abs(q - r)) <= 1e-8 * std::max(1.0, std::abs(q)));
    }
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) CHECK(std::abs(sp.z_roots[size_t(i)] - sp.z_roots[size_t(j)]) > 1e-6);
    // points off the spectrum fail for both branches
    for (cplx z : {cplx(0.3, 0.1), cplx(-1.0, 2.0)}) CHECK(spectral_residual(z, A, B, C, D, b) > 1e-3);
  }

  SUBCASE("P5 reproduces its factored form") {
    std::array<cplx, 3> n2{sp.nu[0] * sp.nu[0], sp.nu[1] * sp.nu[1], sp.nu[2] * sp.nu[2]};
    for (cplx s : {cplx(0.2, 0.1), cplx(-1.5, 0.7), cplx(3.0, -2.0)}) {
      cplx f = s * (s - n2[0]) * (s - n2[1]) * (s - n2[2]) * (s - n2[0] * n2[1] * n2[2]);
      CHECK(std::abs(eval_p5(sp, s) - f) <= 1e-10 * std::max(1.0, std::abs(f)));
    }
    CHECK(sp.p5_coeffs[5] == cplx(1.0));
    CHECK(sp.p5_coeffs[0] == cplx(0.0));
  }

  SUBCASE("nu from the root formula") {
    auto dR = [&](int i) {
      cplx r = 1.0;
      for (int j = 0; j < 4; ++j)
        if (j != i) r *= sp.z_roots[size_t(i)] - sp.z_roots[size_t(j)];
      return r;
    };
    for (int k = 0; k < 3; ++k) {
      auto f = [&](int i) { return std::sqrt(sp.z_roots[size_t(i)] - b[k]) / std::sqrt(dR(i)); };
      cplx nu = (f(2) + kI * f(3)) / (f(0) + kI * f(1));
      CHECK(std::abs(nu - sp.nu[size_t(k)]) <= 1e-12 * std::abs(nu));
    }
  }

  SUBCASE("degenerate inputs") {
    try {
      clebsch_spectrum(A, B, C, 0.0, b);
      FAIL("expected DegenerateSpectrum");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateSpectrum);
    }
    try {
      clebsch_spectrum(0.0, B, C, D, b);
      FAIL("expected SpuriousRootFilterFailure");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SpuriousRootFilterFailure);
    }
  }

  SUBCASE("genus-two curve from P5") {
    // constants whose P5 roots are of moderate size
    sp = clebsch_spectrum(3.0, 2.6, -2.2, 3.0, b);
    std::vector<cplx> roots{0.0};
    cplx prod = 1.0;
    double big = 1.0;
    for (cplx n : sp.nu) {
      roots.push_back(n * n);
      prod *= n * n;
    }
    roots.push_back(prod);
    for (cplx r : roots) big = std::max(big, std::abs(r));
    roots.push_back(cplx(20.0 * big, 3.0 * big));
    HyperellipticCurve curve = build_curve(roots);
    CHECK(curve.genus() == 2);
    PeriodData pd = period_matrix(curve);
    const CMatrix& T = pd.riemann_matrix.matrix();
    CHECK((T - T.transpose()).norm() <= 1e-8 * T.norm());
    Eigen::SelfAdjointEigenSolver<RMatrix> es(T.imag());
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("s-flow") {
  SpectralData sp = clebsch_spectrum(3.0, 2.6, -2.2, 3.0, Vec3(1, 2, 3));
  const cplx a(0.8, 0.0), bc(0.3, 0.1);
  const cplx s1(0.4, 0.3), s2(-0.6, 0.5);
  const double h = 1e-4, T = 0.3;
  SFlowResult fw = s_flow(sp, a, bc, s1, s2, T, h);
  REQUIRE_FALSE(fw.collided);

  SUBCASE("Abel coordinates move linearly") {
    double worst1 = 0.0, worst2 = 0.0;
    for (size_t i = 1; i + 1 < fw.samples.size(); ++i) {
      const auto& m = fw.samples[i - 1];
      const auto& c = fw.samples[i];
      const auto& p = fw.samples[i + 1];
      cplx d1 = (p.s1 - m.s1) / (2.0 * h), d2 = (p.s2 - m.s2) / (2.0 * h);
      cplx g1 = (a * c.s1 + bc) * c.root1, g2 = (a * c.s2 + bc) * c.root2;
      worst1 = std::max(worst1, std::abs(d1 / g1 + d2 / g2));
      worst2 = std::max(worst2, std::abs(c.s1 * d1 / g1 + c.s2 * d2 / g2 + 1.0));
    }
    CHECK(worst1 <= 1e-6);
    CHECK(worst2 <= 1e-6);
  }

  SUBCASE("branch stays continuous") {
    for (size_t i = 1; i < fw.samples.size(); ++i) {
      const auto& m = fw.samples[i - 1];
      const auto& c = fw.samples[i];
      CHECK(std::abs(c.root1 - m.root1) < 0.5 * std::abs(c.root1 + m.root1));
      CHECK(std::abs(c.root2 - m.root2) < 0.5 * std::abs(c.root2 + m.root2));
    }
  }

  SUBCASE("time reversal") {
    const auto& end = fw.samples.back();
    auto sign = [&](cplx s, cplx r) { return std::real(r / std::sqrt(eval_p5(sp, s))) > 0 ? 1 : -1; };
    SFlowResult bw = s_flow(sp, a, bc, end.s1, end.s2, -T, -h, {sign(end.s1, end.root1), sign(end.s2, end.root2)});
    CHECK(std::abs(bw.samples.back().s1 - s1) <= 1e-7);
    CHECK(std::abs(bw.samples.back().s2 - s2) <= 1e-7);
  }

  SUBCASE("stationary at a root of P5") {
    cplx root = sp.nu[0] * sp.nu[0];
    SFlowResult r = s_flow(sp, a, bc, root, s2, 1e-4, 1e-4);
    cplx rate = (a * root + bc) * std::sqrt(eval_p5(sp, root)) / (s2 - root);
    CHECK(std::abs(rate) <= 1e-6);
    CHECK(std::abs(r.samples[0].root1) <= 1e-6);
  }

  SUBCASE("collision") {
    CHECK_THROWS_AS(s_flow(sp, a, bc, s1, s1, 1.0, 1e-3), Error);
  }
}
