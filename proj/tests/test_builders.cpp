#include <random>

#include "doctest.h"
#include "thetakit/builders.hpp"

using namespace thetakit;

namespace {

HyperellipticCurve sample_curve(int g) {
  if (g == 1) return build_curve({cplx(0.0, 0.2), cplx(1.1, -0.3), cplx(2.0, 0.4), cplx(3.2, -0.1)});
  return build_curve({cplx(0.0, 0.2), cplx(1.1, -0.3), cplx(2.0, 0.4), cplx(3.2, -0.1),
                      cplx(4.1, 0.3), cplx(5.0, -0.2)});
}

// closed polyline around cut c, clear of the others
std::vector<cplx> a_loop(const HyperellipticCurve& c, int cut) {
  cplx s = c.cut_start(cut), e = c.cut_end(cut), m = 0.5 * (s + e), h = 0.5 * (e - s);
  std::vector<cplx> loop;
  for (int t = 0; t <= 96; ++t) {
    double th = 2 * kPi * (t % 96) / 96.0;
    loop.push_back(m + h * cplx(1.2 * std::cos(th), 0.3 * std::sin(th)));
  }
  return loop;
}

// rectangle crossing cut 0 and cut k+1 once each (surrounding cuts 1..k)
std::vector<cplx> b_loop(const HyperellipticCurve& c, int k) {
  double x0 = 0.5 * (c.cut_start(0) + c.cut_end(0)).real();
  double x1 = 0.5 * (c.cut_start(k + 1) + c.cut_end(k + 1)).real();
  return {cplx(x0, -2.0), cplx(x1, -2.0), cplx(x1, 2.0), cplx(x0, 2.0), cplx(x0, -2.0)};
}

cplx loop_integral(const HyperellipticCurve& c, const MeromorphicDifferential& f,
                   const std::vector<cplx>& loop) {
  SheetIntegrand in = [&](cplx xi, cplx w, cplx* o) {
    cplx v = f.path_density(xi, w);
    if (f.exact_coeff != 0.0) {
      cplx d = xi - f.exact_at, l = 0.0;
      for (cplx e : c.branch_points()) l += 0.5 / (xi - e);
      v += f.exact_coeff * (w * l / d - w / (d * d));
    }
    o[0] = v;
  };
  return integrate_along(c, loop, 1, in, 1, 1e-12).value[0];
}

cplx residue(const HyperellipticCurve& c, const MeromorphicDifferential& f, const CurvePoint& q,
             double r) {
  const int n = 256;
  cplx s = 0.0;
  for (int k = 0; k < n; ++k) {
    cplx u = std::polar(1.0, 2 * kPi * k / n);
    s += f.value(c, {q.xi + r * u, q.sheet}) * kI * r * u * (2 * kPi / n);
  }
  return s / (2 * kPi * kI);
}

// distance of x from 2 pi i Z
double mod_2pi_i(cplx x) {
  double k = std::round(x.imag() / (2 * kPi));
  return std::abs(x - cplx(0.0, 2 * kPi * k));
}

}  // namespace

TEST_CASE("third kind differential") {
  for (int g = 1; g <= 2; ++g) {
    auto c = sample_curve(g);
    auto pd = period_matrix(c);
    CurvePoint P{cplx(1.4, 1.3), Sheet::Plus}, Q{cplx(2.7, -1.1), Sheet::Minus};
    auto eta = third_kind(c, pd, P, Q);
    CHECK(std::abs(residue(c, eta.form, P, 1e-2) - 1.0) < 1e-6);
    CHECK(std::abs(residue(c, eta.form, Q, 1e-2) + 1.0) < 1e-6);
    CHECK(std::abs(residue(c, eta.form, involution(P), 1e-2)) < 1e-6);
    CHECK(eta.a_periods.cwiseAbs().maxCoeff() < 1e-8);
    for (int k = 0; k < g; ++k) {
      CHECK(mod_2pi_i(loop_integral(c, eta.form, a_loop(c, k + 1))) < 1e-8);
      CHECK(mod_2pi_i(loop_integral(c, eta.form, b_loop(c, k)) - eta.U[k]) < 1e-8);
    }
    auto rev = third_kind(c, pd, Q, P);
    CHECK((rev.U + eta.U).cwiseAbs().maxCoeff() < 1e-9);
    CurvePoint z{cplx(0.6, -0.8), Sheet::Plus};
    CHECK(std::abs(rev.form.value(c, z) + eta.form.value(c, z)) < 1e-10);
  }
  auto c = sample_curve(2);
  auto pd = period_matrix(c);
  CHECK_THROWS_AS(third_kind(c, pd, {c.branch_points()[2], Sheet::Undefined}, {cplx(1, 1)}), Error);
  CHECK_THROWS_AS(third_kind(c, pd, {cplx(1, 1)}, {cplx(1, 1)}), Error);
}

TEST_CASE("function with poles") {
  auto c = sample_curve(2);
  auto pd = period_matrix(c);
  auto eta = third_kind(c, pd, {cplx(1.4, 1.3), Sheet::Plus}, {cplx(2.7, -1.1), Sheet::Minus});
  Divisor D;
  D.points = {{{cplx(0.7, 0.9), Sheet::Plus}, 1}, {{cplx(3.9, -0.8), Sheet::Minus}, 1}};
  auto psi = function_with_poles(c, pd, D, eta, 1.0);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 6.0), y(-2.5, 2.5);
  CurvePoint p{cplx(2.3, 1.7), Sheet::Minus};
  cplx ref = psi(p);
  for (int k = 0; k < 10; ++k) {
    std::vector<cplx> via{cplx(u(rng), y(rng)), cplx(u(rng), y(rng)), cplx(u(rng), y(rng))};
    cplx v = psi.evaluate(p, via).value();
    CHECK(std::abs(v - ref) <= 1e-8 * std::abs(ref));
  }
  // explicit cycles
  for (int k = 0; k < 2; ++k) {
    auto bl = b_loop(c, k);
    std::vector<cplx> via{bl.begin(), bl.end()};
    CHECK(std::abs(psi.evaluate(p, via).value() - ref) <= 1e-8 * std::abs(ref));
  }
  // poles at the divisor points
  for (const auto& [q, m] : D.points) {
    CurvePoint near{q.xi + cplx(1e-4, 0.0), q.sheet};
    CHECK(std::abs(psi(near)) >= 1e3);
  }
  // theta-ratio transformation law
  const auto& B = pd.riemann_matrix;
  CVector v(2);
  v << cplx(0.21, -0.13), cplx(-0.34, 0.27);
  CVector s = psi.shift();
  auto ratio_at = [&](const CVector& x) {
    return ratio(theta(x + s, B), theta(x, B));
  };
  cplx base = ratio_at(v);
  for (int k = 0; k < 5; ++k) {
    std::uniform_int_distribution<int> mi(-2, 2);
    RVector m(2);
    m << mi(rng), mi(rng);
    CVector vm = v + B.matrix() * m.cast<cplx>();
    cplx expect = base * std::exp(-2.0 * kPi * kI * (m.cast<cplx>().cwiseProduct(s)).sum());
    CHECK(std::abs(ratio_at(vm) - expect) <= 1e-8 * std::abs(expect));
  }
}

TEST_CASE("second kind differential") {
  auto c = sample_curve(2);
  auto pd = period_matrix(c);
  CurvePoint Q{cplx(2.5, 1.2), Sheet::Plus};
  auto one = second_kind(c, pd, Q, {0.0, cplx(0.4, -0.2), cplx(0.1, 0.3)});
  CHECK(one.residue < 1e-6);
  CHECK(std::abs(residue(c, one.form, Q, 1e-2)) < 1e-6);
  CHECK(one.a_periods.cwiseAbs().maxCoeff() < 1e-7);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(loop_integral(c, one.form, a_loop(c, k + 1))) < 1e-8);
    CHECK(std::abs(loop_integral(c, one.form, b_loop(c, k)) - one.V[k]) < 1e-8);
  }
  auto two = second_kind(c, pd, Q, {0.0, cplx(0.8, -0.4), cplx(0.2, 0.6)});
  CHECK((two.V - 2.0 * one.V).cwiseAbs().maxCoeff() < 1e-9);
  // principal part: eta - dq is regular at Q, so z^-1 weighted contour integrals vanish
  CHECK_THROWS_AS(second_kind(c, pd, Q, {0.0, 1.0, 0.0, 1.0}), Error);
  // at a branch point
  CurvePoint E{c.branch_points()[3], Sheet::Undefined};
  auto br = second_kind(c, pd, E, {0.0, cplx(0.3, 0.1), cplx(-0.2, 0.05)});
  CHECK(br.residue < 1e-6);
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(loop_integral(c, br.form, a_loop(c, k + 1))) < 1e-8);
    CHECK(std::abs(loop_integral(c, br.form, b_loop(c, k)) - br.V[k]) < 1e-8);
  }
  CHECK_THROWS_AS(second_kind(c, pd, {c.branch_points()[0], Sheet::Undefined}, {0.0, 1.0}), Error);
}

TEST_CASE("baker-akhiezer function") {
  auto c = sample_curve(2);
  auto pd = period_matrix(c);
  BAData data;
  data.divisor.points = {{{cplx(0.7, 0.9), Sheet::Plus}, 1}, {{cplx(3.9, -0.8), Sheet::Minus}, 1}};
  CurvePoint Q{cplx(2.5, 1.2), Sheet::Plus};
  data.singular_points = {Q};
  data.principal_polynomials = {{0.0, cplx(0.4, -0.2), cplx(0.1, 0.3)}};
  auto psi = baker_akhiezer(c, pd, data);
  auto q = [&](const CurvePoint& p) {
    cplx z = local_parameter(c, Q, p);
    return cplx(0.4, -0.2) * z + cplx(0.1, 0.3) * z * z;
  };
  auto sup = [&](double r) {
    double m = 0.0;
    for (int k = 0; k < 32; ++k) {
      CurvePoint p{Q.xi + std::polar(r, 2 * kPi * k / 32), Q.sheet};
      m = std::max(m, std::abs((psi.evaluate(p) * ScaledComplex::exp(-q(p))).value()));
    }
    return m;
  };
  double s2 = sup(1e-2), s3 = sup(1e-3);
  CHECK(s2 / s3 < 10.0);
  CHECK(s3 / s2 < 10.0);
  // single-valuedness over random cycles
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 6.0), y(-2.5, 2.5);
  CurvePoint p{cplx(1.6, -1.4), Sheet::Plus};
  cplx ref = psi(p);
  for (int k = 0; k < 10; ++k) {
    std::vector<cplx> via{cplx(u(rng), y(rng)), cplx(u(rng), y(rng))};
    CHECK(std::abs(psi.evaluate(p, via).value() - ref) <= 1e-8 * std::abs(ref));
  }
  // dimension one: a cached-path evaluator agrees up to one constant
  auto cached = baker_akhiezer(c, pd, data, {}, PathMode::Cached);
  std::vector<cplx> ratios;
  for (int k = 0; k < 20; ++k) {
    CurvePoint s{cplx(u(rng), y(rng)), k % 2 ? Sheet::Plus : Sheet::Minus};
    ratios.push_back(cached(s) / psi(s));
  }
  cplx mean = 0.0;
  for (cplx r : ratios) mean += r / 20.0;
  double dev = 0.0;
  for (cplx r : ratios) dev += std::norm(r - mean) / 20.0;
  CHECK(std::sqrt(dev) <= 1e-6 * std::abs(mean));
  // q = 0 gives the constant 1
  data.principal_polynomials = {{0.0}};
  auto flat = baker_akhiezer(c, pd, data);
  CHECK(std::abs(flat(p) - 1.0) < 1e-8);
  // branch-point singularity
  data.singular_points = {{c.branch_points()[3], Sheet::Undefined}};
  data.principal_polynomials = {{0.0, cplx(0.3, 0.1)}};
  auto bpsi = baker_akhiezer(c, pd, data);
  cplx bref = bpsi(p);
  std::vector<cplx> via{cplx(2.2, 2.1), cplx(4.6, -1.9)};
  CHECK(std::abs(bpsi.evaluate(p, via).value() - bref) <= 1e-8 * std::abs(bref));
  data.singular_points.push_back(Q);
  CHECK_THROWS_AS(baker_akhiezer(c, pd, data), Error);
}
