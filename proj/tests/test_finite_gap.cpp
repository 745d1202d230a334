#include <cmath>
#include <random>

#include "doctest.h"
#include "thetakit/finite_gap.hpp"

using namespace thetakit;

namespace {

RiemannMatrix scalar_matrix(cplx b) { return validate_riemann_matrix(CMatrix::Constant(1, 1, b)); }

// Jacobi theta constants from their q-series, q = exp(i pi b), nome powers taken
// as exp(i pi b (n + 1/2)^2) so no branch of q^(1/4) is needed.
struct ThetaConstants {
  cplx t2 = 0.0, t3 = 0.0, t4 = 0.0;
  explicit ThetaConstants(cplx b) {
    for (int n = -30; n <= 30; ++n) {
      cplx e = std::exp(kI * kPi * b * double(n) * double(n));
      t3 += e;
      t4 += (n % 2 == 0 ? 1.0 : -1.0) * e;
      t2 += std::exp(kI * kPi * b * (n + 0.5) * (n + 0.5));
    }
  }
};

// phi'' = lambda sin phi along the characteristic direction for [1/2;0] and [0;1/2].
cplx pendulum_lambda(cplx b, double alpha, double beta) {
  ThetaConstants c(b);
  if (alpha == 0.5 && beta == 0.0) return 4.0 * kPi * kPi * c.t2 * c.t2 * c.t3 * c.t3;
  return -4.0 * kPi * kPi * c.t3 * c.t3 * c.t4 * c.t4;
}

WaveData exact_wave(cplx b, double alpha, double beta, cplx U, cplx W) {
  WaveData wd;
  wd.B = scalar_matrix(b);
  wd.characteristic = Characteristic{RVector::Constant(1, alpha), RVector::Constant(1, beta)};
  cplx lam = pendulum_lambda(b, alpha, beta);
  wd.U = CVector::Constant(1, U);
  wd.V = CVector::Constant(1, std::sqrt(U * U - 1.0 / lam));
  wd.W = CVector::Constant(1, W);
  return wd;
}

cplx direct_ratio(const WaveData& wd, const CVector& z) {
  return ratio(theta_char(wd.characteristic, z, wd.B),
               theta_char(Characteristic::zero(wd.B.genus()), z, wd.B));
}

double distance_mod(double v, double period) {
  double r = std::fmod(v, period);
  if (r < 0) r += period;
  return std::min(r, period - r);
}

}  // namespace

TEST_CASE("sine-Gordon evaluator") {
  WaveData wd = exact_wave(cplx(0.2, 1.1), 0.5, 0.0, 0.3, cplx(0.1, -0.2));

  SUBCASE("genus-one fast ratio matches the general theta") {
    for (double x : {-1.3, 0.0, 0.7, 2.9}) {
      for (double t : {-0.4, 0.5, 3.1}) {
        CVector z = wd.U * x + wd.V * t + wd.W;
        cplx l = sine_gordon_log_ratio(z, wd);
        cplx ref = direct_ratio(wd, z);
        CHECK(std::abs(std::exp(l) - ref) <= 1e-12 * std::abs(ref));
      }
    }
  }

  SUBCASE("frozen argument gives a constant field") {
    WaveData c = wd;
    c.U.setZero();
    c.V.setZero();
    cplx p0 = sine_gordon_eval(0.0, 0.0, c);
    for (double x : {0.5, 3.0})
      for (double t : {-1.0, 2.0}) CHECK(std::abs(sine_gordon_eval(x, t, c) - p0) <= 1e-14);
  }

  SUBCASE("lattice shift of W keeps exp(i phi)") {
    cplx b = wd.B.matrix()(0, 0);
    for (auto [n, m] : {std::pair{1, 0}, {0, 1}, {2, -1}, {-3, 2}}) {
      WaveData s = wd;
      s.W[0] += double(n) + b * double(m);
      for (double x : {0.2, 1.7}) {
        cplx p = sine_gordon_eval(x, 0.3, wd), q = sine_gordon_eval(x, 0.3, s);
        CHECK(std::abs(std::exp(kI * p) - std::exp(kI * q)) <= 1e-10 * std::abs(std::exp(kI * p)));
        CHECK(std::abs((p - q).imag()) <= 1e-10);
        CHECK(distance_mod((p - q).real(), 2.0 * kPi) <= 1e-10);
      }
    }
  }

  SUBCASE("even characteristic gives a field even under z -> -z") {
    WaveData r = wd;
    r.W = -wd.W;
    for (double x : {0.3, 1.2})
      for (double t : {-0.7, 0.4}) {
        cplx d = sine_gordon_eval(x, t, wd) - sine_gordon_eval(-x, -t, r);
        CHECK(std::abs(d.imag()) <= 1e-10);
        CHECK(distance_mod(d.real(), 4.0 * kPi) <= 1e-10);
      }
  }

  SUBCASE("branch integer shifts phi by 2 pi") {
    WaveData s = wd;
    s.branch_integer += 1;
    cplx p = sine_gordon_eval(0.4, 0.2, wd), q = sine_gordon_eval(0.4, 0.2, s);
    CHECK(std::abs(q - p - 2.0 * kPi) <= 1e-12);
    CHECK(std::abs(std::sin(q) - std::sin(p)) <= 1e-12 * std::max(1.0, std::abs(std::sin(p))));
    SampleGrid g = SampleGrid::rectangle(0, 1, 6, 0, 1, 6);
    CHECK(std::abs(sine_gordon_residual(s, g) - sine_gordon_residual(wd, g)) <= 1e-12);
  }

  SUBCASE("grid unwrapping is continuous and matches pointwise values") {
    std::vector<double> xs, ts;
    for (int i = 0; i < 40; ++i) xs.push_back(0.1 * i);
    for (int i = 0; i < 5; ++i) ts.push_back(0.2 * i);
    CMatrix phi = sine_gordon_grid(xs, ts, wd);
    for (Eigen::Index i = 0; i < phi.rows(); ++i)
      for (Eigen::Index j = 0; j < phi.cols(); ++j) {
        cplx p = sine_gordon_eval(xs[size_t(j)], ts[size_t(i)], wd);
        CHECK(std::abs((phi(i, j) - p).imag()) <= 1e-10);
        CHECK(distance_mod((phi(i, j) - p).real(), 4.0 * kPi) <= 1e-9);
        if (j > 0) CHECK(std::abs(phi(i, j) - phi(i, j - 1)) < 2.0 * kPi);
      }
  }

  SUBCASE("theta zero raises") {
    cplx b = wd.B.matrix()(0, 0);
    WaveData z = wd;
    z.W[0] = 0.5 + 0.5 * b;  // zero of theta[0;0]
    CHECK_THROWS_AS(sine_gordon_eval(0.0, 0.0, z), Error);
  }

  SUBCASE("genus two uses the general theta") {
    CMatrix B(2, 2);
    B << cplx(0.1, 1.2), cplx(0.2, 0.3), cplx(0.2, 0.3), cplx(-0.1, 0.9);
    WaveData g2;
    g2.B = validate_riemann_matrix(B);
    g2.characteristic = Characteristic{RVector::Constant(2, 0.5), RVector::Zero(2)};
    g2.U = CVector::Constant(2, 0.3);
    g2.V = CVector::Constant(2, cplx(0.1, 0.05));
    g2.W = CVector::Constant(2, cplx(0.2, -0.1));
    CVector z = g2.U * 0.7 + g2.V * 0.2 + g2.W;
    cplx p = sine_gordon_eval(0.7, 0.2, g2);
    CHECK(std::abs(std::exp(-kI * p / 2.0) - direct_ratio(g2, z)) <= 1e-12 * std::abs(direct_ratio(g2, z)));
  }
}

TEST_CASE("sine-Gordon residual") {
  SampleGrid grid = SampleGrid::rectangle(0.0, 1.0, 20, 0.0, 1.0, 20);

  SUBCASE("exact pendulum waves satisfy the equation") {
    for (cplx b : {cplx(0, 1.0), cplx(0.3, 0.9), cplx(-0.2, 1.6)}) {
      for (auto [a, c] : {std::pair{0.5, 0.0}, {0.0, 0.5}}) {
        WaveData wd = exact_wave(b, a, c, cplx(0.25, 0.05), cplx(0.13, -0.07));
        double r = sine_gordon_residual(wd, grid);
        CAPTURE(b);
        CAPTURE(a);
        CHECK(r <= 1e-5);
      }
    }
  }

  SUBCASE("real solution on the quarter-period line") {
    double tt = 1.2;
    WaveData wd = exact_wave(cplx(0, tt), 0.5, 0.0, 0.3, cplx(0.2, -tt / 4));
    for (double x : {0.1, 0.5, 0.9}) CHECK(std::abs(sine_gordon_eval(x, 0.3, wd).imag()) <= 1e-10);
    CHECK(std::abs(wd.V[0].imag()) <= 1e-14);
    CHECK(sine_gordon_residual(wd, grid) <= 1e-5);
  }

  SUBCASE("random data is not a solution") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 5; ++trial) {
      WaveData wd;
      wd.B = scalar_matrix(cplx(u(rng) * 0.5, 1.0 + 0.5 * std::abs(u(rng))));
      wd.characteristic = Characteristic{RVector::Constant(1, 0.5), RVector::Zero(1)};
      wd.U = CVector::Constant(1, cplx(u(rng), u(rng)));
      wd.V = CVector::Constant(1, cplx(u(rng), u(rng)));
      wd.W = CVector::Constant(1, cplx(u(rng), 0.2 * u(rng)));
      wd.C_offset = u(rng);
      CHECK(sine_gordon_residual(wd, grid) > 1e-2);
    }
  }

  SUBCASE("trivial field") {
    WaveData wd;
    wd.B = scalar_matrix(kI);
    wd.characteristic = Characteristic::zero(1);
    wd.U = wd.V = wd.W = CVector::Zero(1);
    CHECK(sine_gordon_residual(wd, grid) <= 1e-14);
  }

  SUBCASE("second-order stencil") {
    WaveData wd = exact_wave(cplx(0.1, 1.0), 0.5, 0.0, 0.8, cplx(0.1, -0.1));
    double r1 = sine_gordon_residual(wd, grid, 0.02);
    double r2 = sine_gordon_residual(wd, grid, 0.01);
    CAPTURE(r1);
    CAPTURE(r2);
    CHECK(r1 / r2 >= 3.0);
    CHECK(r1 / r2 <= 5.0);
  }
}

TEST_CASE("genus-one wave fitter") {
  SampleGrid grid = SampleGrid::rectangle(0.0, 1.0, 20, 0.0, 1.0, 20);
  WaveData init;
  init.characteristic = Characteristic{RVector::Constant(1, 0.5), RVector::Zero(1)};
  init.U = CVector::Constant(1, 0.5);
  init.V = CVector::Zero(1);
  init.W = CVector::Constant(1, cplx(0.1, -0.2));

  SUBCASE("zero budget returns the initial data") {
    RiemannMatrix B = scalar_matrix(kI);
    FitResult r = fit_wave_vectors(B, init, grid, 0);
    CHECK(r.evaluations == 0);
    CHECK(r.data.U == init.U);
    CHECK(r.data.V == init.V);
    WaveData w = init;
    w.B = B;
    CHECK(r.residual == doctest::Approx(sine_gordon_residual(w, grid)));
    CHECK_THROWS_AS(fit_wave_vectors(B, init, grid, 10), Error);
  }

  SUBCASE("converges to an exact wave") {
    cplx b(0.0, 1.0);
    FitResult r = fit_wave_vectors(scalar_matrix(b), init, grid, 100000);
    CAPTURE(r.residual);
    CAPTURE(r.evaluations);
    CHECK(r.success);
    CHECK(r.residual <= 1e-4);
    CHECK(r.evaluations <= 100000);
    CHECK(std::abs(r.data.U[0]) >= 0.1);
    // the fitted vectors lie on the dispersion relation of the exact family
    cplx lam = pendulum_lambda(b, 0.5, 0.0);
    cplx u = r.data.U[0], v = r.data.V[0];
    CHECK(std::abs((u * u - v * v) * lam - 1.0) <= 1e-3);
    CHECK(distance_mod(r.data.C_offset, 2.0 * kPi) <= 1e-3);
  }

  SUBCASE("infeasible matrix reports failure") {
    FitResult r = fit_wave_vectors(scalar_matrix(cplx(0.0, 8.0)), init, grid, 5000);
    CHECK_FALSE(r.success);
    CHECK(r.residual > 1e-3);
  }
}

TEST_CASE("Landau-Lifshitz") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto random_ll = [&](int g) {
    CMatrix X(g, g), Y(g, g);
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) {
        X(i, j) = u(rng);
        Y(i, j) = 0.3 * u(rng);
      }
    CMatrix B = (X + X.transpose()) / 2.0;
    RMatrix Yr = (Y.real() * Y.real().transpose()) + RMatrix::Identity(g, g);
    B += kI * Yr.cast<cplx>();
    LLData ld;
    ld.B = validate_riemann_matrix(B);
    auto vec = [&] {
      CVector v(g);
      for (int i = 0; i < g; ++i) v[i] = cplx(u(rng), u(rng));
      return v;
    };
    ld.U = vec();
    ld.V = vec();
    ld.m_shift = vec();
    ld.r_shift = vec();
    ld.d = vec();
    for (int i = 0; i < g; ++i) ld.d[i] = cplx(ld.d[i].real(), -0.5 * ld.r_shift[i].imag());
    return ld;
  };

  SUBCASE("unit norm") {
    // with A, Bq, E, F as the numerator products: (A-Bq)^2 - (A+Bq)^2 + F^2 = F^2 - 4 A Bq = E^2
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      LLData ld = random_ll(1 + trial % 3);
      auto S = landau_lifshitz_eval(u(rng), u(rng), ld);
      worst = std::max(worst, std::abs(S[0] * S[0] + S[1] * S[1] + S[2] * S[2] - 1.0));
    }
    CHECK(worst <= 1e-10);
  }

  SUBCASE("norm deviation stays at the rounding floor") {
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      LLData ld = random_ll(1 + trial % 3);
      auto S = landau_lifshitz_eval(u(rng), u(rng), ld);
      double dev = std::abs(S[0] * S[0] + S[1] * S[1] + S[2] * S[2] - 1.0);
      double floor = 1.1e-16 * (std::norm(S[0]) + std::norm(S[1]) + std::norm(S[2]));
      worst = std::max(worst, dev / floor);
    }
    CHECK(worst <= 16.0);
  }

  SUBCASE("m and r swap leaves S3") {
    for (int trial = 0; trial < 10; ++trial) {
      LLData a = random_ll(2);
      // equal imaginary parts keep the constraint on d valid after the swap
      for (int i = 0; i < 2; ++i) a.m_shift[i] = cplx(a.m_shift[i].real(), a.r_shift[i].imag());
      LLData b = a;
      std::swap(b.m_shift, b.r_shift);
      double x = u(rng), t = u(rng);
      cplx s3a = landau_lifshitz_eval(x, t, a)[2], s3b = landau_lifshitz_eval(x, t, b)[2];
      CHECK(std::abs(s3a - s3b) <= 1e-12 * std::max(1.0, std::abs(s3a)));
    }
  }

  SUBCASE("degenerate and invalid data") {
    LLData ld = random_ll(2);
    LLData z = ld;
    z.m_shift.setZero();
    try {
      landau_lifshitz_eval(0.1, 0.2, z);
      FAIL("expected DenominatorVanishes");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DenominatorVanishes);
    }
    LLData bad = ld;
    bad.d[0] += cplx(0.0, 0.1);
    CHECK_THROWS_AS(landau_lifshitz_eval(0.1, 0.2, bad), Error);
  }
}
