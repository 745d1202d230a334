#include "thetakit/selftest.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>

#include "thetakit/builders.hpp"
#include "thetakit/elliptic.hpp"
#include "thetakit/finite_gap.hpp"
#include "thetakit/hyperelliptic.hpp"
#include "thetakit/kirchhoff.hpp"

namespace thetakit {

namespace {

using Rng = std::mt19937;

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

RiemannMatrix random_riemann(Rng& rng, int g) {
  RMatrix x(g, g), a(g, g);
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j) {
      x(i, j) = uniform(rng, -0.5, 0.5);
      a(i, j) = uniform(rng, -0.4, 0.4);
    }
  RMatrix y = a * a.transpose() + 0.6 * RMatrix::Identity(g, g);
  CMatrix b = 0.5 * (x + x.transpose()).cast<cplx>() + kI * y.cast<cplx>();
  return validate_riemann_matrix(b);
}

CVector random_vector(Rng& rng, int g, double scale) {
  CVector z(g);
  for (int j = 0; j < g; ++j) z[j] = cplx(uniform(rng, -scale, scale), uniform(rng, -scale, scale) * 0.5);
  return z;
}

// cuts with disjoint real ranges
HyperellipticCurve random_curve(Rng& rng, int g) {
  std::vector<cplx> bp;
  for (int i = 0; i < 2 * g + 2; ++i) bp.push_back({i + uniform(rng, -0.3, 0.3), uniform(rng, -1.0, 1.0)});
  return build_curve(bp);
}

CurvePoint random_point(Rng& rng, double lo, double hi) {
  return {cplx(uniform(rng, lo, hi), uniform(rng, -1.5, 1.5)), uniform(rng, 0, 1) < 0.5 ? Sheet::Plus : Sheet::Minus};
}

double agm_k(double k) {
  double a = 1.0, b = std::sqrt(1.0 - k * k);
  for (int i = 0; i < 60 && std::abs(a - b) > 1e-16 * a; ++i) {
    double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return kPi / (2.0 * a);
}

cplx wp_box_series(cplx z, cplx w1, cplx w2, int N) {
  cplx s = 1.0 / (z * z);
  for (int n = -N; n <= N; ++n)
    for (int m = -N; m <= N; ++m) {
      if (n == 0 && m == 0) continue;
      cplx w = double(n) * w1 + double(m) * w2;
      s += 1.0 / ((z - w) * (z - w)) - 1.0 / (w * w);
    }
  return s;
}

struct Outcome {
  bool pass;
  std::string detail;
};

Outcome c1_quasi_periodicity(Rng& rng) {
  auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  std::uniform_int_distribution<int> ui(-3, 3);
  for (int rep = 0; rep < 100; ++rep) {
    int g = 1 + rep % 3;
    RiemannMatrix B = random_riemann(rng, g);
    CVector z = random_vector(rng, g, 1.0);
    CVector n(g), m(g);
    for (int j = 0; j < g; ++j) {
      n[j] = ui(rng);
      m[j] = ui(rng);
    }
    ScaledComplex lhs = theta(z + n + B.matrix() * m, B);
    ScaledComplex rhs = ScaledComplex::exp(-kPi * kI * m.dot(B.matrix() * m) - 2.0 * kPi * kI * (m.transpose() * z)(0)) *
                        theta(z, B);
    worst = std::max(worst, std::abs(ratio(lhs, rhs) - 1.0));
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {worst <= 1e-9 && secs < 10.0, fmt("max relative deviation %.3g, %.2f s", worst, secs)};
}

Outcome c2_half_periods(Rng& rng) {
  bool counts = true;
  for (int g = 1; g <= 4; ++g) {
    long even = 0, odd = 0;
    for (const auto& h : enumerate_half_periods(g)) (h.parity == Parity::Even ? even : odd)++;
    counts = counts && even == (1L << (g - 1)) * ((1L << g) + 1) && odd == (1L << (g - 1)) * ((1L << g) - 1);
  }
  double worst = 0.0;
  for (int g = 1; g <= 3; ++g) {
    RiemannMatrix B = random_riemann(rng, g);
    CVector z = random_vector(rng, g, 0.5);
    for (const auto& h : enumerate_half_periods(g)) {
      cplx p = theta_char(h.chr, z, B).value(), q = theta_char(h.chr, -z, B).value();
      double sign = h.parity == Parity::Even ? 1.0 : -1.0;
      worst = std::max(worst, std::abs(q - sign * p) / std::max(1.0, std::abs(p)));
    }
  }
  return {counts && worst <= 1e-10,
          std::string("census ") + (counts ? "ok" : "wrong") + fmt(", parity deviation %.3g", worst)};
}

Outcome c3_theta_zero(Rng& rng) {
  double worst = 0.0, count_dev = 0.0;
  for (int k = 0; k < 20; ++k) {
    EllipticModulus b(cplx(uniform(rng, -0.5, 0.5), uniform(rng, 0.6, 1.6)));
    double rel = std::abs(jacobi_theta(3, 0.5 * (1.0 + b.b()), b).value()) /
                 std::abs(jacobi_theta(3, 0.0, b).value());
    worst = std::max(worst, rel);
    if (k < 5) count_dev = std::max(count_dev, std::abs(theta3_zero_count(b) - 1.0));
  }
  return {worst <= 1e-9 && count_dev <= 1e-6, fmt("max |theta3| ratio %.3g, count deviation %.3g", worst, count_dev)};
}

Outcome c4_heat() {
  double worst = 0.0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      double x = 0.1 * i + 0.03, t = 0.5 + 1.5 * j / 9.0;
      worst = std::max(worst, heat_equation_residual(x, t, 1e-4));
    }
  return {worst <= 1e-6, fmt("max residual %.3g", worst)};
}

Outcome c5_addition(Rng& rng) {
  double w1 = 0.0;
  for (int k = 0; k < 50; ++k) {
    auto B = validate_riemann_matrix(CMatrix::Constant(1, 1, cplx(uniform(rng, -0.5, 0.5), uniform(rng, 0.7, 1.4))));
    AdditionInputs in;
    in.z = CVector::Constant(1, cplx(uniform(rng, -0.5, 0.5), uniform(rng, -0.25, 0.25)));
    for (auto kind : {AdditionKind::SquaredSum, AdditionKind::SquaredDiff, AdditionKind::JacobiAtZero})
      w1 = std::max(w1, addition_identity_check(kind, in, B));
  }
  double w2 = 0.0;
  for (int g = 1; g <= 2; ++g)
    for (int rep = 0; rep < 5; ++rep) {
      RiemannMatrix B = random_riemann(rng, g);
      AdditionInputs in;
      for (int i = 0; i < 4; ++i) {
        in.w.push_back(random_vector(rng, g, 0.4));
        Characteristic c = Characteristic::zero(g);
        for (int j = 0; j < g; ++j) {
          c.alpha[j] = uniform(rng, 0, 1) < 0.5 ? 0.5 : 0.0;
          c.beta[j] = uniform(rng, 0, 1) < 0.5 ? 0.5 : 0.0;
        }
        in.right.push_back(c);
      }
      w2 = std::max(w2, addition_identity_check(AdditionKind::FourTermRiemann, in, B));
    }
  return {w1 <= 1e-9 && w2 <= 1e-8, fmt("genus-1 identities %.3g, four-term %.3g", w1, w2)};
}

Outcome c6_weierstrass(Rng& rng) {
  Lattice lat(cplx(1.1, 0.2), cplx(-0.3, 1.3));
  auto inv = wp_invariants(lat);
  double ode = 0.0;
  for (int k = 0; k < 20; ++k) {
    cplx z = uniform(rng, 0.05, 0.95) * lat.omega1 + uniform(rng, 0.05, 0.95) * lat.omega2;
    cplx p = weierstrass_p(z, lat), dp = weierstrass_p_prime(z, lat);
    ode = std::max(ode, std::abs(dp * dp - 4.0 * p * p * p + inv.g2 * p + inv.g3) / std::max(1.0, std::abs(dp * dp)));
  }
  double g3 = std::abs(wp_invariants(Lattice(1.0, kI)).g3);
  double series = 0.0;
  for (int i = 0; i < 3; ++i) {
    cplx z = (0.2 + 0.3 * i) * lat.omega1 + (0.15 + 0.3 * i) * lat.omega2;
    cplx ref = wp_box_series(z, lat.omega1, lat.omega2, 300);
    series = std::max(series, std::abs(weierstrass_p(z, lat) - ref) / std::max(1.0, std::abs(ref)));
  }
  return {ode <= 1e-8 && g3 <= 1e-9 && series <= 1e-4,
          fmt("ODE residual %.3g, square-lattice g3 %.3g, series deviation %.3g", ode, g3, series)};
}

Outcome c7_genus_one() {
  auto c = build_curve({-std::sqrt(2.0), -1.0, 1.0, std::sqrt(2.0)});
  cplx b = period_matrix(c).riemann_matrix.matrix()(0, 0);
  const auto& e = c.branch_points();
  double k2 = ((e[2] - e[1]) * (e[3] - e[0]) / ((e[3] - e[1]) * (e[2] - e[0]))).real();
  cplx ref = kI * agm_k(std::sqrt(k2)) / agm_k(std::sqrt(1.0 - k2));
  double dev = std::abs(b - ref);
  return {dev <= 1e-8, fmt("b = %.12g i, AGM oracle %.12g i, deviation %.3g", b.imag(), ref.imag(), dev)};
}

Outcome c8_genus_two(Rng& rng) {
  auto t0 = std::chrono::steady_clock::now();
  double sym = 0.0, min_eig = 1e300;
  for (int k = 0; k < 10; ++k) {
    auto c = random_curve(rng, 2);
    auto pd = period_matrix(c);
    CMatrix T = pd.A_inv * pd.Bp;
    sym = std::max(sym, (T - T.transpose()).norm() / T.norm());
    Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (T.imag() + T.imag().transpose()));
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {sym <= 1e-8 && min_eig > 0.0 && secs < 60.0,
          fmt("symmetry %.3g, min eigenvalue of Im %.3g, %.2f s", sym, min_eig, secs)};
}

double lattice_defect(const CVector& v, const RiemannMatrix& B) {
  return reduce_mod_lattice(v, B).residual.cwiseAbs().maxCoeff();
}

Outcome c9_inversion(Rng& rng) {
  auto c = random_curve(rng, 2);
  auto pd = period_matrix(c);
  double xi_err = 0.0, lat = 0.0;
  int failures = 0;
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<CurvePoint> pts{random_point(rng, 0.0, 5.0), random_point(rng, 0.0, 5.0)};
    CVector z = abel_from_base(c, pd, pts[0]) + abel_from_base(c, pd, pts[1]);
    Divisor d = jacobi_inversion(c, pd, z);
    CVector sum = CVector::Zero(2);
    for (const auto& [p, m] : d.points) sum += double(m) * abel_from_base(c, pd, p);
    lat = std::max(lat, lattice_defect(sum - z, pd.riemann_matrix));
    for (const auto& o : pts) {
      double best = 1e300;
      for (const auto& [p, m] : d.points)
        if (p.sheet == o.sheet) best = std::min(best, std::abs(p.xi - o.xi));
      xi_err = std::max(xi_err, best);
      failures += best > 1e-6;
    }
  }
  return {failures == 0 && lat <= 1e-6, fmt("max xi error %.3g, lattice defect %.3g", xi_err, lat)};
}

Outcome c10_membership(Rng& rng) {
  auto c = random_curve(rng, 2);
  auto pd = period_matrix(c);
  CVector bump = CVector::Zero(2);
  bump[0] = 0.1;
  double on = 0.0, off = 1e300;
  for (int k = 0; k < 10; ++k) {
    CurvePoint p = random_point(rng, -1.0, 6.0);
    on = std::max(on, theta_divisor_membership(c, pd, {p}));
    off = std::min(off, theta_divisor_membership(c, pd, {p}, {}, &bump));
  }
  return {on <= 1e-7 && off >= 1e-3, fmt("on divisor %.3g, perturbed %.3g", on, off)};
}

HyperellipticCurve sample_curve() {
  return build_curve({cplx(0.0, 0.2), cplx(1.1, -0.3), cplx(2.0, 0.4), cplx(3.2, -0.1), cplx(4.1, 0.3), cplx(5.0, -0.2)});
}

cplx small_circle_residue(const HyperellipticCurve& c, const MeromorphicDifferential& f, const CurvePoint& q) {
  const int n = 256;
  const double r = 1e-2;
  cplx s = 0.0;
  for (int k = 0; k < n; ++k) {
    cplx u = std::polar(1.0, 2 * kPi * k / n);
    s += f.value(c, {q.xi + r * u, q.sheet}) * kI * r * u * (2 * kPi / n);
  }
  return s / (2 * kPi * kI);
}

std::vector<cplx> random_via(Rng& rng, int n) {
  std::vector<cplx> v;
  for (int i = 0; i < n; ++i) v.push_back({uniform(rng, -1.0, 6.0), uniform(rng, -2.5, 2.5)});
  return v;
}

Outcome c11_theta_functions(Rng& rng) {
  auto c = sample_curve();
  auto pd = period_matrix(c);
  CurvePoint P{cplx(1.4, 1.3), Sheet::Plus}, Q{cplx(2.7, -1.1), Sheet::Minus};
  auto eta = third_kind(c, pd, P, Q);
  double res = std::max(std::abs(small_circle_residue(c, eta.form, P) - 1.0),
                        std::abs(small_circle_residue(c, eta.form, Q) + 1.0));
  double aper = eta.a_periods.cwiseAbs().maxCoeff();
  Divisor D;
  D.points = {{{cplx(0.7, 0.9), Sheet::Plus}, 1}, {{cplx(3.9, -0.8), Sheet::Minus}, 1}};
  auto psi = function_with_poles(c, pd, D, eta, 1.0);
  CurvePoint p{cplx(2.3, 1.7), Sheet::Minus};
  cplx ref = psi(p);
  double sv = 0.0;
  for (int k = 0; k < 10; ++k)
    sv = std::max(sv, std::abs(psi.evaluate(p, random_via(rng, 3)).value() - ref) / std::abs(ref));
  return {sv <= 1e-8 && res <= 1e-6 && aper <= 1e-8,
          fmt("single-valuedness %.3g, residue error %.3g, a-periods %.3g", sv, res, aper)};
}

Outcome c12_baker_akhiezer(Rng& rng) {
  auto c = sample_curve();
  auto pd = period_matrix(c);
  BAData data;
  data.divisor.points = {{{cplx(0.7, 0.9), Sheet::Plus}, 1}, {{cplx(3.9, -0.8), Sheet::Minus}, 1}};
  CurvePoint Q{cplx(2.5, 1.2), Sheet::Plus};
  const cplx q1(0.4, -0.2), q2(0.1, 0.3);
  data.singular_points = {Q};
  data.principal_polynomials = {{0.0, q1, q2}};
  auto psi = baker_akhiezer(c, pd, data);
  CurvePoint p{cplx(1.6, -1.4), Sheet::Plus};
  cplx ref = psi(p);
  double sv = 0.0;
  for (int k = 0; k < 10; ++k)
    sv = std::max(sv, std::abs(psi.evaluate(p, random_via(rng, 2)).value() - ref) / std::abs(ref));
  auto sup = [&](double r) {
    double m = 0.0;
    for (int k = 0; k < 32; ++k) {
      CurvePoint s{Q.xi + std::polar(r, 2 * kPi * k / 32), Q.sheet};
      cplx z = local_parameter(c, Q, s);
      m = std::max(m, std::abs((psi.evaluate(s) * ScaledComplex::exp(-(q1 * z + q2 * z * z))).value()));
    }
    return m;
  };
  double s1 = sup(1e-1), s2 = sup(1e-2), s3 = sup(1e-3);
  double factor = std::max({s1 / s2, s2 / s1, s2 / s3, s3 / s2});
  auto cached = baker_akhiezer(c, pd, data, {}, PathMode::Cached);
  std::vector<cplx> ratios;
  for (int k = 0; k < 20; ++k) {
    CurvePoint s{cplx(uniform(rng, -1.0, 6.0), uniform(rng, -2.5, 2.5)), k % 2 ? Sheet::Plus : Sheet::Minus};
    ratios.push_back(cached(s) / psi(s));
  }
  cplx mean = 0.0;
  for (cplx r : ratios) mean += r / double(ratios.size());
  double dev = 0.0;
  for (cplx r : ratios) dev += std::norm(r - mean) / double(ratios.size());
  double spread = std::sqrt(dev) / std::abs(mean);
  return {sv <= 1e-8 && factor < 10.0 && spread <= 1e-6,
          fmt("single-valuedness %.3g, normalization factor %.3g, proportionality spread %.3g", sv, factor, spread)};
}

Outcome c13_landau_lifshitz(Rng& rng) {
  double worst = 0.0, worst_floor = 1.0, max_s = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    int g = 1 + trial % 3;
    LLData ld;
    ld.B = random_riemann(rng, g);
    auto vec = [&] {
      CVector v(g);
      for (int i = 0; i < g; ++i) v[i] = cplx(uniform(rng, -1, 1), uniform(rng, -1, 1));
      return v;
    };
    ld.U = vec();
    ld.V = vec();
    ld.m_shift = vec();
    ld.r_shift = vec();
    ld.d = vec();
    for (int i = 0; i < g; ++i) ld.d[i] = cplx(ld.d[i].real(), -0.5 * ld.r_shift[i].imag());
    auto S = landau_lifshitz_eval(uniform(rng, -1, 1), uniform(rng, -1, 1), ld);
    double dev = std::abs(S[0] * S[0] + S[1] * S[1] + S[2] * S[2] - 1.0);
    double floor = 1.1e-16 * (std::norm(S[0]) + std::norm(S[1]) + std::norm(S[2]));
    if (dev > worst) {
      worst = dev;
      worst_floor = floor;
    }
    max_s = std::max({max_s, std::abs(S[0]), std::abs(S[1]), std::abs(S[2])});
  }
  // rounding of the returned components alone contributes about eps * sum |S_i|^2
  return {worst <= 1e-10,
          fmt("max |S.S - 1| %.3g, max |S_i| %.3g, worst / rounding floor %.3g", worst, max_s, worst / worst_floor)};
}

Outcome c14_sine_gordon(Rng& rng) {
  SampleGrid grid = SampleGrid::rectangle(0.0, 1.0, 20, 0.0, 1.0, 20);
  RiemannMatrix B = validate_riemann_matrix(CMatrix::Constant(1, 1, kI));
  WaveData init;
  init.characteristic = Characteristic{RVector::Constant(1, 0.5), RVector::Zero(1)};
  init.U = CVector::Constant(1, 0.5);
  init.V = CVector::Zero(1);
  init.W = CVector::Constant(1, cplx(0.1, -0.2));
  FitOptions opts;
  opts.seed = static_cast<unsigned>(rng());
  FitResult fit = fit_wave_vectors(B, init, grid, 100000, opts);
  WaveData control = init;
  control.B = B;
  control.U[0] = cplx(uniform(rng, -1, 1), uniform(rng, -1, 1));
  control.V[0] = cplx(uniform(rng, -1, 1), uniform(rng, -1, 1));
  control.C_offset = uniform(rng, -1, 1);
  double ctrl = sine_gordon_residual(control, grid);
  return {fit.success && fit.residual <= 1e-4 && fit.evaluations <= 100000 && ctrl > 1e-2,
          fmt("fitted residual %.3g after %.0f evaluations, control %.3g", fit.residual,
              double(fit.evaluations), ctrl)};
}

Outcome c15_kirchhoff() {
  Vec3 b(1, 2, 3);
  double a3 = (1.9 / b[0] - 0.7 / b[1] + (0.7 - 1.9) / b[2]) / (1.0 / b[0] - 1.0 / b[1]);
  ClebschParams cp = make_clebsch(Vec3(0.7, 1.9, a3), b);
  RigidState init{Vec3(1.0, -0.6, 0.8), Vec3(0.3, 1.1, -0.5)};
  Trajectory cl = integrate(init, clebsch_system(cp), 10.0, 1e-3);
  Trajectory st = integrate(init, steklov_system(make_steklov(1.0, 0.0, 0.0, b)), 10.0, 1e-3);
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) worst = std::max({worst, cl.drift[i], st.drift[i]});
  Vec3 a = cp.a;
  a[0] *= 1.01;
  KirchhoffSystem bad = clebsch_system(make_clebsch(a, b, false));
  bad.H4 = clebsch_system(cp).H4;
  Trajectory ctl = integrate(init, bad, 10.0, 1e-3);
  bool pass = worst <= 1e-8 && ctl.drift[3] >= 1e-3 && ctl.drift[1] <= 1e-8 && ctl.drift[2] <= 1e-8;
  return {pass, fmt("max drift %.3g, control H4 drift %.3g, control Casimir drift %.3g", worst, ctl.drift[3],
                    std::max(ctl.drift[1], ctl.drift[2]))};
}

Outcome c16_spectral() {
  Vec3 b(1, 2, 3);
  SpectralData sp = clebsch_spectrum(1, 2, 3, 0.1, b);
  double root_res = 0.0;
  for (cplx z : sp.z_roots) root_res = std::max(root_res, spectral_residual(z, 1, 2, 3, 0.1, b));
  SpectralData flow_spec = clebsch_spectrum(3.0, 2.6, -2.2, 3.0, b);
  const cplx a(0.8, 0.0), bc(0.3, 0.1), s1(0.4, 0.3), s2(-0.6, 0.5);
  const double h = 1e-4, T = 0.3;
  SFlowResult fw = s_flow(flow_spec, a, bc, s1, s2, T, h);
  double u1 = 0.0, u2 = 0.0;
  for (size_t i = 1; i + 1 < fw.samples.size(); ++i) {
    const auto& m = fw.samples[i - 1];
    const auto& c = fw.samples[i];
    const auto& p = fw.samples[i + 1];
    cplx d1 = (p.s1 - m.s1) / (2.0 * h), d2 = (p.s2 - m.s2) / (2.0 * h);
    cplx g1 = (a * c.s1 + bc) * c.root1, g2 = (a * c.s2 + bc) * c.root2;
    u1 = std::max(u1, std::abs(d1 / g1 + d2 / g2));
    u2 = std::max(u2, std::abs(c.s1 * d1 / g1 + c.s2 * d2 / g2 + 1.0));
  }
  const auto& end = fw.samples.back();
  auto sign = [&](cplx s, cplx r) { return std::real(r / std::sqrt(eval_p5(flow_spec, s))) > 0 ? 1 : -1; };
  SFlowResult bw = s_flow(flow_spec, a, bc, end.s1, end.s2, -T, -h, {sign(end.s1, end.root1), sign(end.s2, end.root2)});
  double trip = std::max(std::abs(bw.samples.back().s1 - s1), std::abs(bw.samples.back().s2 - s2));
  bool pass = root_res <= 1e-8 && u1 <= 1e-6 && u2 <= 1e-6 && trip <= 1e-7 && !fw.collided;
  return {pass, fmt("root residual %.3g, u1 rate %.3g, u2 rate deviation %.3g", root_res, u1, u2) +
                    fmt(", round trip %.3g", trip)};
}

const char* kNames[kCriterionCount] = {
    "quasi-periodicity",     "half-period census",    "theta3 zero",          "heat equation",
    "addition formulas",     "Weierstrass functions", "genus-1 periods",      "genus-2 period matrices",
    "Jacobi inversion",      "theta divisor",         "theta-quotient functions", "Baker-Akhiezer function",
    "Landau-Lifshitz norm",  "sine-Gordon fit",       "Kirchhoff conservation", "Clebsch spectral reduction",
};

}  // namespace

CriterionResult run_criterion(int id, unsigned seed) {
  CriterionResult r;
  r.id = id;
  if (id < 1 || id > kCriterionCount) throw Error(ErrorCode::InvalidArgument, "criterion id out of range");
  r.name = kNames[id - 1];
  Rng rng(seed * 7919u + static_cast<unsigned>(id));
  auto t0 = std::chrono::steady_clock::now();
  try {
    Outcome o;
    switch (id) {
      case 1: o = c1_quasi_periodicity(rng); break;
      case 2: o = c2_half_periods(rng); break;
      case 3: o = c3_theta_zero(rng); break;
      case 4: o = c4_heat(); break;
      case 5: o = c5_addition(rng); break;
      case 6: o = c6_weierstrass(rng); break;
      case 7: o = c7_genus_one(); break;
      case 8: o = c8_genus_two(rng); break;
      case 9: o = c9_inversion(rng); break;
      case 10: o = c10_membership(rng); break;
      case 11: o = c11_theta_functions(rng); break;
      case 12: o = c12_baker_akhiezer(rng); break;
      case 13: o = c13_landau_lifshitz(rng); break;
      case 14: o = c14_sine_gordon(rng); break;
      case 15: o = c15_kirchhoff(); break;
      default: o = c16_spectral(); break;
    }
    r.pass = o.pass;
    r.detail = o.detail;
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

std::vector<CriterionResult> run_selftest(const SelftestOptions& opts) {
  std::vector<int> ids = opts.only;
  if (ids.empty())
    for (int i = 1; i <= kCriterionCount; ++i) ids.push_back(i);
  std::vector<CriterionResult> out;
  for (int id : ids) out.push_back(run_criterion(id, opts.seed));
  return out;
}

}  // namespace thetakit
