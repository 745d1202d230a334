#include "thetakit/kirchhoff.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace thetakit {

StateRate kirchhoff_rhs(const RigidState& s, const Vec3& dH_dp, const Vec3& dH_dl) {
  return {s.p.cross(dH_dl), s.p.cross(dH_dp) + s.l.cross(dH_dl)};
}

namespace {

// rho = b_i (b_j - b_k) / (a_j - a_k) over cyclic (i, j, k); NaN when a_j == a_k.
std::array<double, 3> rho_quotients(const Vec3& a, const Vec3& b) {
  std::array<double, 3> q;
  for (int i = 0; i < 3; ++i) {
    int j = (i + 1) % 3, k = (i + 2) % 3;
    double den = a[j] - a[k];
    q[i] = den == 0.0 ? std::nan("") : b[i] * (b[j] - b[k]) / den;
  }
  return q;
}

}  // namespace

ClebschParams make_clebsch(const Vec3& a, const Vec3& b, bool enforce) {
  if (!a.allFinite() || !b.allFinite()) throw Error(ErrorCode::BadConfiguration, "non-finite parameters");
  if (b.cwiseAbs().minCoeff() == 0.0) throw Error(ErrorCode::BadConfiguration, "b_k must be nonzero");
  ClebschParams c{a, b, 0.0};
  auto q = rho_quotients(a, b);
  auto first = std::find_if(q.begin(), q.end(), [](double v) { return !std::isnan(v); });
  if (first == q.end()) throw Error(ErrorCode::BadConfiguration, "all a_k equal, rho undefined");
  c.rho = *first;
  if (enforce) {
    double cond = (a[1] - a[2]) / b[0] + (a[2] - a[0]) / b[1] + (a[0] - a[1]) / b[2];
    double scale = a.cwiseAbs().maxCoeff() / b.cwiseAbs().minCoeff();
    if (std::abs(cond) > 1e-12 * std::max(1.0, scale))
      throw Error(ErrorCode::BadConfiguration, "Clebsch condition violated");
    if (clebsch_rho_spread(c) > 1e-12) throw Error(ErrorCode::BadConfiguration, "rho quotients disagree");
  }
  return c;
}

double clebsch_rho_spread(const ClebschParams& c) {
  double worst = 0.0;
  for (double v : rho_quotients(c.a, c.b))
    if (!std::isnan(v)) worst = std::max(worst, std::abs(v - c.rho) / std::max(1.0, std::abs(c.rho)));
  return worst;
}

SteklovParams make_steklov(double A, double B, double C, const Vec3& b) {
  SteklovParams s{A, B, C, b, Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  for (int i = 0; i < 3; ++i) {
    int j = (i + 1) % 3, k = (i + 2) % 3;
    double gap = b[j] - b[k];
    s.d[i] = A * A * gap * gap;
    s.a[i] = s.d[i] * b[i] + B;
    s.c[i] = A * b[j] * b[k] + C;
  }
  return s;
}

KirchhoffSystem clebsch_system(const ClebschParams& c) {
  KirchhoffSystem sys;
  sys.gradient = [c](const RigidState& s, Vec3& hp, Vec3& hl) {
    hp = c.a.cwiseProduct(s.p);
    hl = c.b.cwiseProduct(s.l);
  };
  sys.H1 = [c](const RigidState& s) {
    return 0.5 * (c.a.dot(s.p.cwiseAbs2()) + c.b.dot(s.l.cwiseAbs2()));
  };
  sys.H4 = [c](const RigidState& s) {
    return 0.5 * (c.b.dot(s.p.cwiseAbs2()) + c.rho * s.l.squaredNorm());
  };
  return sys;
}

KirchhoffSystem steklov_system(const SteklovParams& k) {
  KirchhoffSystem sys;
  sys.gradient = [k](const RigidState& s, Vec3& hp, Vec3& hl) {
    hp = k.a.cwiseProduct(s.p) + k.c.cwiseProduct(s.l);
    hl = k.b.cwiseProduct(s.l) + k.c.cwiseProduct(s.p);
  };
  sys.H1 = [k](const RigidState& s) {
    return 0.5 * (k.a.dot(s.p.cwiseAbs2()) + k.b.dot(s.l.cwiseAbs2())) + k.c.dot(s.p.cwiseProduct(s.l));
  };
  sys.H4 = [k](const RigidState& s) {
    return 0.5 * (k.d.dot(s.p.cwiseAbs2()) + s.l.squaredNorm()) - k.A * k.b.dot(s.p.cwiseProduct(s.l));
  };
  return sys;
}

std::array<double, 4> integrals(const KirchhoffSystem& sys, const RigidState& s) {
  return {sys.H1(s), s.p.squaredNorm(), s.p.dot(s.l), sys.H4(s)};
}

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;

Vec6 pack(const RigidState& s) {
  Vec6 v;
  v << s.p, s.l;
  return v;
}

RigidState unpack(const Vec6& v) { return {v.head<3>(), v.tail<3>()}; }

Vec6 field(const KirchhoffSystem& sys, const Vec6& v) {
  RigidState s = unpack(v);
  Vec3 hp, hl;
  sys.gradient(s, hp, hl);
  StateRate r = kirchhoff_rhs(s, hp, hl);
  Vec6 out;
  out << r.p_dot, r.l_dot;
  return out;
}

void record(Trajectory& tr, const KirchhoffSystem& sys, double t, const Vec6& v) {
  RigidState s = unpack(v);
  auto h = integrals(sys, s);
  tr.t.push_back(t);
  tr.states.push_back(s);
  tr.H.push_back(h);
  for (int i = 0; i < 4; ++i) tr.drift[i] = std::max(tr.drift[i], std::abs(h[i] - tr.H.front()[i]));
}

}  // namespace

Trajectory integrate(const RigidState& initial, const KirchhoffSystem& sys, double t_end, double step,
                     Integrator method, double abs_tol) {
  if (!(step > 0.0) || !(t_end >= 0.0)) throw Error(ErrorCode::InvalidArgument, "step must be positive");
  if (!initial.p.allFinite() || !initial.l.allFinite())
    throw Error(ErrorCode::InvalidArgument, "non-finite initial state");
  Trajectory tr;
  Vec6 y = pack(initial);
  double t = 0.0;
  record(tr, sys, t, y);

  if (method == Integrator::RK4) {
    long n = static_cast<long>(std::ceil(t_end / step - 1e-9));
    double h = n > 0 ? t_end / static_cast<double>(n) : 0.0;
    for (long i = 0; i < n; ++i) {
      Vec6 k1 = field(sys, y);
      Vec6 k2 = field(sys, y + 0.5 * h * k1);
      Vec6 k3 = field(sys, y + 0.5 * h * k2);
      Vec6 k4 = field(sys, y + h * k3);
      y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      t = (i + 1 == n) ? t_end : t + h;
      record(tr, sys, t, y);
    }
    return tr;
  }

  // Runge-Kutta-Fehlberg 4(5), propagating the fourth-order solution
  double h = std::min(step, t_end);
  const double h_min = 1e-12 * std::max(1.0, t_end);
  while (t < t_end) {
    h = std::min(h, t_end - t);
    Vec6 k1 = field(sys, y);
    Vec6 k2 = field(sys, y + h * (k1 / 4.0));
    Vec6 k3 = field(sys, y + h * (3.0 / 32.0 * k1 + 9.0 / 32.0 * k2));
    Vec6 k4 = field(sys, y + h * (1932.0 / 2197.0 * k1 - 7200.0 / 2197.0 * k2 + 7296.0 / 2197.0 * k3));
    Vec6 k5 = field(sys, y + h * (439.0 / 216.0 * k1 - 8.0 * k2 + 3680.0 / 513.0 * k3 - 845.0 / 4104.0 * k4));
    Vec6 k6 = field(sys, y + h * (-8.0 / 27.0 * k1 + 2.0 * k2 - 3544.0 / 2565.0 * k3 + 1859.0 / 4104.0 * k4 -
                                  11.0 / 40.0 * k5));
    Vec6 y4 = y + h * (25.0 / 216.0 * k1 + 1408.0 / 2565.0 * k3 + 2197.0 / 4104.0 * k4 - k5 / 5.0);
    Vec6 y5 = y + h * (16.0 / 135.0 * k1 + 6656.0 / 12825.0 * k3 + 28561.0 / 56430.0 * k4 - 9.0 / 50.0 * k5 +
                       2.0 / 55.0 * k6);
    double err = (y5 - y4).cwiseAbs().maxCoeff();
    if (!std::isfinite(err)) throw Error(ErrorCode::StepRejection, "non-finite stage");
    if (err <= abs_tol) {
      y = y4;
      t = (t_end - t <= h) ? t_end : t + h;
      record(tr, sys, t, y);
    }
    double factor = err == 0.0 ? 5.0 : 0.9 * std::pow(abs_tol / err, 0.2);
    h *= std::clamp(factor, 0.2, 5.0);
    if (t < t_end && h < h_min) throw Error(ErrorCode::StepRejection, "step size underflow");
  }
  return tr;
}

namespace {

using Poly = std::vector<cplx>;  // ascending

Poly mul(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, 0.0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

cplx horner(const Poly& p, cplx z) {
  cplx r = 0.0;
  for (size_t i = p.size(); i-- > 0;) r = r * z + p[i];
  return r;
}

cplx cubic_product(const Vec3& b, cplx z) { return (z - b[0]) * (z - b[1]) * (z - b[2]); }

cplx quadratic_part(cplx z, double A, double B, double C, const Vec3& b) {
  return A * A * (z * z - z * b.sum()) + B * z - C;
}

}  // namespace

double spectral_residual(cplx z, double A, double B, double C, double D, const Vec3& b) {
  cplx q = quadratic_part(z, A, B, C, b);
  cplx r = 2.0 * D * std::sqrt(cubic_product(b, z));
  double scale = std::max({1.0, std::abs(q), std::abs(r)});
  return std::min(std::abs(q + r), std::abs(q - r)) / scale;
}

SpectralData clebsch_spectrum(double A, double B, double C, double D, const Vec3& b) {
  for (double v : {A, B, C, D})
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite constants");
  // (quadratic)^2 - 4 D^2 prod (z - b_k)
  Poly q = {-C, B - A * A * b.sum(), A * A};
  Poly quartic = mul(q, q);
  Poly cubic = mul(mul(Poly{-b[0], 1.0}, Poly{-b[1], 1.0}), Poly{-b[2], 1.0});
  for (size_t i = 0; i < cubic.size(); ++i) quartic[i] -= 4.0 * D * D * cubic[i];
  double coeff_scale = 0.0;
  for (cplx c : quartic) coeff_scale = std::max(coeff_scale, std::abs(c));
  int deg = 4;
  while (deg > 0 && std::abs(quartic[size_t(deg)]) <= 1e-14 * coeff_scale) --deg;
  if (deg < 4) throw Error(ErrorCode::SpuriousRootFilterFailure, "squared equation has fewer than four roots");

  CMatrix comp = CMatrix::Zero(4, 4);
  for (int i = 1; i < 4; ++i) comp(i, i - 1) = 1.0;
  for (int i = 0; i < 4; ++i) comp(i, 3) = -quartic[size_t(i)] / quartic[4];
  Eigen::ComplexEigenSolver<CMatrix> es(comp);
  Poly dquartic(4);
  for (int i = 1; i <= 4; ++i) dquartic[size_t(i - 1)] = double(i) * quartic[size_t(i)];
  std::vector<cplx> roots;
  for (int i = 0; i < 4; ++i) {
    cplx z = es.eigenvalues()[i];
    for (int it = 0; it < 3; ++it) {
      cplx d = horner(dquartic, z);
      if (d == cplx(0.0)) break;
      z -= horner(quartic, z) / d;
    }
    roots.push_back(z);
  }

  // discriminant lead^6 prod (z_i - z_j)^2, normalized by the coefficient scale
  cplx disc = std::pow(quartic[4] / coeff_scale, 6);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) disc *= (roots[size_t(i)] - roots[size_t(j)]) * (roots[size_t(i)] - roots[size_t(j)]);
  if (std::abs(disc) < 1e-10) throw Error(ErrorCode::DegenerateSpectrum, "repeated roots");

  std::vector<cplx> accepted;
  for (cplx z : roots)
    if (spectral_residual(z, A, B, C, D, b) <= 1e-8) accepted.push_back(z);
  if (accepted.size() != 4) throw Error(ErrorCode::SpuriousRootFilterFailure, "filter kept a wrong number of roots");
  std::sort(accepted.begin(), accepted.end(), [](cplx x, cplx y) {
    return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
  });

  SpectralData out;
  std::copy(accepted.begin(), accepted.end(), out.z_roots.begin());
  auto dR = [&](int i) {
    cplx r = 1.0;
    for (int j = 0; j < 4; ++j)
      if (j != i) r *= out.z_roots[size_t(i)] - out.z_roots[size_t(j)];
    return r;
  };
  auto piece = [&](int i, int k) { return std::sqrt(out.z_roots[size_t(i)] - b[k]) / std::sqrt(dR(i)); };
  for (int k = 0; k < 3; ++k) {
    cplx den = piece(0, k) + kI * piece(1, k);
    if (std::abs(den) < 1e-14) throw Error(ErrorCode::DegenerateSpectrum, "vanishing nu denominator");
    out.nu[size_t(k)] = (piece(2, k) + kI * piece(3, k)) / den;
  }
  cplx n1 = out.nu[0] * out.nu[0], n2 = out.nu[1] * out.nu[1], n3 = out.nu[2] * out.nu[2];
  Poly p5 = {0.0, 1.0};
  for (cplx r : {n1, n2, n3, n1 * n2 * n3}) p5 = mul(p5, Poly{-r, 1.0});
  std::copy(p5.begin(), p5.end(), out.p5_coeffs.begin());
  return out;
}

cplx eval_p5(const SpectralData& spec, cplx s) {
  cplx r = 0.0;
  for (size_t i = spec.p5_coeffs.size(); i-- > 0;) r = r * s + spec.p5_coeffs[i];
  return r;
}

namespace {

cplx tracked_root(const SpectralData& spec, cplx s, cplx ref) {
  cplx r = std::sqrt(eval_p5(spec, s));
  return std::abs(r - ref) <= std::abs(r + ref) ? r : -r;
}

struct FlowState {
  cplx s1, s2, r1, r2;
};

// One RK4 step of size h; stage roots follow the branch of the current ones.
FlowState flow_step(const SpectralData& spec, cplx a, cplx b, const FlowState& y, double h) {
  auto rate = [&](cplx s1, cplx s2, cplx& r1, cplx& r2) -> std::array<cplx, 2> {
    r1 = tracked_root(spec, s1, r1);
    r2 = tracked_root(spec, s2, r2);
    cplx gap = s2 - s1;
    return {(a * s1 + b) * r1 / gap, -(a * s2 + b) * r2 / gap};
  };
  cplx r1 = y.r1, r2 = y.r2;
  auto k1 = rate(y.s1, y.s2, r1, r2);
  auto k2 = rate(y.s1 + 0.5 * h * k1[0], y.s2 + 0.5 * h * k1[1], r1, r2);
  auto k3 = rate(y.s1 + 0.5 * h * k2[0], y.s2 + 0.5 * h * k2[1], r1, r2);
  auto k4 = rate(y.s1 + h * k3[0], y.s2 + h * k3[1], r1, r2);
  FlowState out;
  out.s1 = y.s1 + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
  out.s2 = y.s2 + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
  out.r1 = tracked_root(spec, out.s1, y.r1);
  out.r2 = tracked_root(spec, out.s2, y.r2);
  return out;
}

}  // namespace

SFlowResult s_flow(const SpectralData& spec, cplx a_const, cplx b_const, cplx s1, cplx s2,
                   double t_end, double step, std::array<int, 2> branch) {
  if (step == 0.0 || !std::isfinite(step) || !std::isfinite(t_end) || t_end * step < 0.0)
    throw Error(ErrorCode::InvalidArgument, "step must be nonzero with the sign of t_end");
  if (std::abs(s1 - s2) < 1e-8) throw Error(ErrorCode::CollisionDetected, "s1 and s2 coincide");
  SFlowResult res;
  FlowState y{s1, s2, double(branch[0] >= 0 ? 1 : -1) * std::sqrt(eval_p5(spec, s1)),
              double(branch[1] >= 0 ? 1 : -1) * std::sqrt(eval_p5(spec, s2))};
  double t = 0.0;
  res.samples.push_back({t, y.s1, y.s2, y.r1, y.r2});
  long n = static_cast<long>(std::ceil(std::abs(t_end / step) - 1e-9));
  double h = n > 0 ? t_end / static_cast<double>(n) : 0.0;
  for (long i = 0; i < n; ++i) {
    // near a zero of P5 the branch follows only if the stage points stay close, so subdivide
    int pieces = 1;
    double small = std::min(std::abs(y.r1), std::abs(y.r2));
    if (small < 1e-6) pieces = 1024;
    else if (small < 1e-3) pieces = 32;
    for (int k = 0; k < pieces; ++k) y = flow_step(spec, a_const, b_const, y, h / pieces);
    t = (i + 1 == n) ? t_end : t + h;
    if (!std::isfinite(y.s1.real()) || !std::isfinite(y.s2.real()))
      throw Error(ErrorCode::InvalidArgument, "flow left the finite plane");
    res.samples.push_back({t, y.s1, y.s2, y.r1, y.r2});
    if (std::abs(y.s1 - y.s2) < 1e-8) {
      res.collided = true;
      break;
    }
  }
  return res;
}

}  // namespace thetakit
