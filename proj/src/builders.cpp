#include "thetakit/builders.hpp"

#include <algorithm>
#include <cmath>

namespace thetakit {

namespace {

cplx log_derivative_w(const HyperellipticCurve& curve, cplx xi) {
  cplx s = 0.0;
  for (cplx e : curve.branch_points()) s += 1.0 / (xi - e);
  return 0.5 * s;
}

cplx monomial_sum(const CVector& c, cplx xi) {
  cplx s = 0.0;
  for (int j = static_cast<int>(c.size()) - 1; j >= 0; --j) s = s * xi + c[j];
  return s;
}

struct Normalized {
  CVector coeffs, b, a_residual;
};

// Subtracts the holomorphic part that cancels the a-periods; fills form.mono_correction.
Normalized normalize(const HyperellipticCurve& curve, const PeriodData& pd,
                     MeromorphicDifferential& form) {
  const int g = curve.genus();
  const double eps = 1e-12;
  auto odd = form.odd;
  CycleIntegrals raw = cycle_integrals(curve, [&](cplx xi, cplx* o) { o[0] = odd(xi); }, 1, eps);
  CVector c = raw.a.row(0).transpose();
  form.mono_correction = pd.A_inv.transpose() * c;
  Normalized out;
  out.coeffs = c;
  out.b = raw.b.row(0).transpose() - pd.riemann_matrix.matrix().transpose() * c;
  const CVector mc = form.mono_correction;
  CycleIntegrals check = cycle_integrals(
      curve, [&](cplx xi, cplx* o) { o[0] = odd(xi) - monomial_sum(mc, xi); }, 1, eps);
  out.a_residual = check.a.row(0).transpose();
  return out;
}

void require_regular_point(const HyperellipticCurve& curve, const CurvePoint& p) {
  if (curve.branch_index(p.xi, 1e-9) >= 0)
    throw Error(ErrorCode::PoleAtBranchPoint, "pole placed at a branch point");
  if (p.sheet == Sheet::Undefined)
    throw Error(ErrorCode::PoleAtBranchPoint, "pole needs a sheet");
}

// (1 / 2 pi i) times the integral of the differential on a small loop around Q, w continued
// along the loop; two laps around a branch point.
cplx contour_residue(const HyperellipticCurve& curve, const MeromorphicDifferential& form,
                     const CurvePoint& Q) {
  const bool branch = curve.branch_index(Q.xi) >= 0;
  double r = HUGE_VAL;
  for (cplx e : curve.branch_points())
    if (std::abs(e - Q.xi) > 1e-12 * curve.spread()) r = std::min(r, std::abs(e - Q.xi));
  r *= 0.1;
  const int laps = branch ? 2 : 1, n = 512;
  cplx prev_w = 0.0, sum = 0.0;
  for (int k = 0; k < laps * n; ++k) {
    cplx u = std::polar(1.0, 2.0 * kPi * k / n);
    cplx xi = Q.xi + r * u;
    cplx w = curve.w(xi);
    if (k == 0) {
      if (!branch && Q.sheet == Sheet::Minus) w = -w;
    } else if (std::abs(w + prev_w) < std::abs(w - prev_w)) {
      w = -w;
    }
    prev_w = w;
    cplx val = form.path_density(xi, w);
    if (form.exact_coeff != 0.0) {
      cplx d = xi - form.exact_at;
      val += form.exact_coeff * (w * log_derivative_w(curve, xi) / d - w / (d * d));
    }
    sum += val * (kI * r * u) * (2.0 * kPi / n);
  }
  return sum / (2.0 * kPi * kI);
}

std::vector<cplx> poly_from_roots(const std::vector<cplx>& roots) {
  std::vector<cplx> c{1.0};  // ascending powers
  for (cplx r : roots) {
    std::vector<cplx> next(c.size() + 1, 0.0);
    for (size_t i = 0; i < c.size(); ++i) {
      next[i + 1] += c[i];
      next[i] -= r * c[i];
    }
    c = std::move(next);
  }
  return c;
}

cplx horner(const std::vector<cplx>& c, cplx x) {
  cplx s = 0.0;
  for (size_t i = c.size(); i-- > 0;) s = s * x + c[i];
  return s;
}

}  // namespace

cplx MeromorphicDifferential::path_density(cplx xi, cplx w) const {
  cplx v = 0.0;
  if (even) v += even(xi);
  cplx o = odd ? odd(xi) : cplx(0.0);
  if (mono_correction.size() > 0) o -= monomial_sum(mono_correction, xi);
  return v + o / w;
}

cplx MeromorphicDifferential::exact_primitive(cplx xi, cplx w) const {
  if (exact_coeff == 0.0) return 0.0;
  return exact_coeff * w / (xi - exact_at);
}

cplx MeromorphicDifferential::value(const HyperellipticCurve& curve, const CurvePoint& p) const {
  cplx w = curve.w(p);
  cplx v = path_density(p.xi, w);
  if (exact_coeff != 0.0) {
    cplx d = p.xi - exact_at;
    v += exact_coeff * (w * log_derivative_w(curve, p.xi) / d - w / (d * d));
  }
  return v;
}

ThirdKindDifferential third_kind(const HyperellipticCurve& curve, const PeriodData& pd,
                                 const CurvePoint& P, const CurvePoint& Q, const Tolerance&) {
  require_regular_point(curve, P);
  require_regular_point(curve, Q);
  if (P.sheet == Q.sheet && std::abs(P.xi - Q.xi) <= 1e-12 * (1.0 + std::abs(P.xi)))
    throw Error(ErrorCode::SingularNormalization, "coinciding poles give the zero differential");
  const cplx xp = P.xi, xq = Q.xi, wp = curve.w(P), wq = curve.w(Q);
  ThirdKindDifferential out;
  out.pole_plus = P;
  out.pole_minus = Q;
  out.form.even = [xp, xq](cplx xi) { return 0.5 / (xi - xp) - 0.5 / (xi - xq); };
  out.form.odd = [xp, xq, wp, wq](cplx xi) { return 0.5 * wp / (xi - xp) - 0.5 * wq / (xi - xq); };
  out.form.poles = {xp, xq};
  Normalized n = normalize(curve, pd, out.form);
  out.normalization_coeffs = n.coeffs;
  out.U = n.b;
  out.a_periods = n.a_residual;
  return out;
}

cplx local_parameter(const HyperellipticCurve& curve, const CurvePoint& Q, const CurvePoint& P) {
  int bi = curve.branch_index(Q.xi);
  if (bi < 0) return 1.0 / (P.xi - Q.xi);
  cplx pe = 1.0;
  const auto& bp = curve.branch_points();
  for (size_t i = 0; i < bp.size(); ++i)
    if (static_cast<int>(i) != bi) pe *= bp[bi] - bp[i];
  return std::sqrt(pe) / curve.w(P);
}

SecondKindDifferential second_kind(const HyperellipticCurve& curve, const PeriodData& pd,
                                   const CurvePoint& Q, const std::vector<cplx>& principal,
                                   const Tolerance&) {
  for (size_t k = 3; k < principal.size(); ++k)
    if (principal[k] != 0.0)
      throw Error(ErrorCode::UnsupportedPrincipalPart, "principal part degree above 2");
  const cplx q1 = principal.size() > 1 ? principal[1] : 0.0;
  const cplx q2 = principal.size() > 2 ? principal[2] : 0.0;
  SecondKindDifferential out;
  out.pole = Q;
  out.principal = principal;
  const int g = curve.genus();
  const int bi = curve.branch_index(Q.xi, 1e-9);
  out.form.poles = {Q.xi};
  if (q1 == 0.0 && q2 == 0.0) {
    out.V = CVector::Zero(g);
    out.a_periods = CVector::Zero(g);
    out.form.mono_correction = CVector::Zero(g);
    return out;
  }
  if (bi < 0) {
    if (Q.sheet == Sheet::Undefined) throw Error(ErrorCode::InvalidArgument, "pole needs a sheet");
    // derivatives in the pole position of the third-kind kernel (w + w_Q) / (2 w (xi - xi_Q))
    const cplx xq = Q.xi, w0 = curve.w(Q);
    const cplx l1 = log_derivative_w(curve, xq);
    cplx l1p = 0.0;
    for (cplx e : curve.branch_points()) l1p -= 0.5 / ((xq - e) * (xq - e));
    const cplx w1 = w0 * l1, w2 = w0 * (l1 * l1 + l1p);
    out.form.even = [=](cplx xi) {
      cplx t = xi - xq;
      return -q1 * 0.5 / (t * t) - q2 / (t * t * t);
    };
    out.form.odd = [=](cplx xi) {
      cplx t = xi - xq;
      cplx om1 = w1 / (2.0 * t) + w0 / (2.0 * t * t);
      cplx om2 = 0.5 * (w2 / (2.0 * t) + w1 / (t * t) + w0 / (t * t * t));
      return -q1 * om1 - 2.0 * q2 * om2;
    };
  } else {
    if (bi == 0)
      throw Error(ErrorCode::UnsupportedConfiguration,
                  "pole at the base branch point of the Abel map");
    const cplx e = curve.branch_points()[bi];
    std::vector<cplx> others;
    for (size_t i = 0; i < curve.branch_points().size(); ++i)
      if (static_cast<int>(i) != bi) others.push_back(curve.branch_points()[i]);
    std::vector<cplx> pi = poly_from_roots(others);
    std::vector<cplx> dpi(pi.size() - 1);
    for (size_t i = 1; i < pi.size(); ++i) dpi[i - 1] = double(i) * pi[i];
    // quotient of (Pi(xi) - Pi(e)) by (xi - e)
    std::vector<cplx> quo(pi.size() - 1);
    cplx carry = 0.0;
    for (size_t i = pi.size() - 1; i >= 1; --i) {
      carry = carry * e + pi[i];
      quo[i - 1] = carry;
    }
    const cplx h0 = std::sqrt(horner(pi, e));
    out.form.even = [=](cplx xi) { return -q2 / ((xi - e) * (xi - e)); };
    out.form.odd = [=](cplx xi) { return -q1 * (horner(dpi, xi) - horner(quo, xi)) / (2.0 * h0); };
    out.form.exact_coeff = q1 / h0;
    out.form.exact_at = e;
  }
  Normalized n = normalize(curve, pd, out.form);
  out.V = n.b;
  out.a_periods = n.a_residual;
  cplx res = contour_residue(curve, out.form, Q);
  out.residue = std::abs(res);
  if (out.residue > 1e-6) throw Error(ErrorCode::ResidueLeak, "second-kind differential has a residue");
  return out;
}

ThetaQuotientFunction::ThetaQuotientFunction(HyperellipticCurve curve, PeriodData pd,
                                             const Divisor& D, MeromorphicDifferential eta,
                                             CVector b_periods, cplx amplitude, PathMode mode,
                                             const Tolerance& tol)
    : curve_(std::move(curve)),
      pd_(std::move(pd)),
      eta_(std::move(eta)),
      amplitude_(amplitude),
      mode_(mode),
      tol_(tol) {
  const int g = curve_.genus();
  if (D.degree() != g) throw Error(ErrorCode::InvalidArgument, "divisor degree must equal the genus");
  center_ = riemann_constants(curve_, pd_).delta;
  for (const auto& [p, m] : D.points) center_ += double(m) * abel_from_base(curve_, pd_, p, tol_);
  shift_ = b_periods / (2.0 * kPi * kI);
  cplx mid = 0.0;
  for (cplx e : curve_.branch_points()) mid += e;
  mid /= double(curve_.branch_points().size());
  const cplx probes[3] = {cplx(0.37, 0.61), cplx(-0.52, 0.23), cplx(0.11, -0.71)};
  double num = 0.0, den = 0.0;
  const Characteristic z0 = Characteristic::zero(g);
  for (cplx pr : probes)
    for (Sheet s : {Sheet::Plus, Sheet::Minus}) {
      CVector phi = abel_from_base(curve_, pd_, {mid + curve_.spread() * pr, s}, tol_);
      den = std::max(den, theta_char_eval(z0, phi - center_, pd_.riemann_matrix, tol_).relative_size());
      num = std::max(num, theta_char_eval(z0, phi - center_ + shift_, pd_.riemann_matrix, tol_).relative_size());
    }
  if (den < 1e-10 || num < 1e-10)
    throw Error(ErrorCode::SpecialDivisor, "theta factor vanishes identically; divisor is special");
}

namespace {

// Inserts a vertex beside any pole that a segment would pass much closer than its endpoints.
std::vector<cplx> avoid_poles(const std::vector<cplx>& path, const std::vector<cplx>& poles) {
  std::vector<cplx> out{path.front()};
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    cplx a = path[i], b = path[i + 1], d = b - a;
    for (cplx c : poles) {
      if (d == 0.0) break;
      double s = ((c - a) * std::conj(d)).real() / std::norm(d);
      if (s <= 0.0 || s >= 1.0) continue;
      cplx foot = a + s * d;
      double gap = std::abs(c - foot);
      double rho = std::min(std::abs(a - c), std::abs(b - c));
      if (gap >= 0.5 * rho) continue;
      cplx normal = kI * d / std::abs(d);
      if (gap > 0.0 && ((foot - c) * std::conj(normal)).real() < 0.0) normal = -normal;
      out.push_back(c + rho * normal);
      a = out.back();
      d = b - a;
    }
    out.push_back(b);
  }
  return out;
}

}  // namespace

ThetaQuotientFunction::State ThetaQuotientFunction::advance(State st, std::vector<cplx> path,
                                                            int target) const {
  const int g = curve_.genus();
  auto parity = [&](const std::vector<cplx>& p) {
    size_t c = 0;
    for (size_t i = 0; i + 1 < p.size(); ++i) c += curve_.cut_crossings(p[i], p[i + 1]).size();
    return c % 2 == 1 ? -1 : 1;
  };
  auto integrate = [&](State s, const std::vector<cplx>& p) {
    SheetIntegrand f = [&](cplx xi, cplx w, cplx* o) {
      cplx m = 1.0;
      for (int j = 0; j < g; ++j, m *= xi) o[j] = m / w;
      o[g] = eta_.path_density(xi, w);
    };
    double rel = std::min(tol_.eps, 1e-12);
    PathIntegral pi = integrate_along(curve_, p, s.sign, f, g + 1, rel);
    cplx w_start = double(s.sign) * curve_.w(p.front());
    s.phi += pd_.A_inv * pi.value.head(g);
    s.sign = pi.end_sign;
    s.xi = p.back();
    cplx w_end = double(s.sign) * curve_.w(s.xi);
    s.eta += pi.value[g] + eta_.exact_primitive(s.xi, w_end) - eta_.exact_primitive(p.front(), w_start);
    return s;
  };
  path = avoid_poles(path, eta_.poles);
  if (target != 0 && st.sign * parity(path) != target) {
    if (curve_.branch_index(st.xi) >= 0) {
      st.sign = -st.sign;
    } else {
      // detour through the nearest usable branch point, where the sheet can be chosen freely
      cplx best = 0.0;
      double dist = HUGE_VAL;
      for (cplx e : curve_.branch_points()) {
        if (eta_.exact_coeff != 0.0 && e == eta_.exact_at) continue;
        double d = std::abs(e - st.xi);
        if (d < dist) {
          dist = d;
          best = e;
        }
      }
      st = integrate(st, avoid_poles({st.xi, best}, eta_.poles));
      path.front() = best;
      path = avoid_poles(path, eta_.poles);
      st.sign = parity(path) == target ? 1 : -1;
    }
  }
  return integrate(st, path);
}

ScaledComplex ThetaQuotientFunction::evaluate(const CurvePoint& p, const std::vector<cplx>& via) const {
  const int g = curve_.genus();
  const int target = static_cast<int>(p.sheet);
  State st;
  std::vector<cplx> path;
  if (mode_ == PathMode::Cached && cache_) {
    st = *cache_;
    path.push_back(st.xi);
  } else {
    std::vector<cplx> base = canonical_path(curve_, p.xi);
    st = {base.front(), 1, CVector::Zero(g), 0.0};
    path.push_back(base.front());
    if (base.size() > 1) path.push_back(base[1]);
  }
  path.insert(path.end(), via.begin(), via.end());
  if (path.back() != p.xi) path.push_back(p.xi);
  if (path.size() > 1) st = advance(st, path, target);
  if (mode_ == PathMode::Cached) cache_ = std::make_unique<State>(st);
  const Characteristic z0 = Characteristic::zero(g);
  ScaledComplex num = theta_char(z0, st.phi - center_ + shift_, pd_.riemann_matrix, tol_);
  ScaledComplex den = theta_char(z0, st.phi - center_, pd_.riemann_matrix, tol_);
  if (den.is_zero()) throw Error(ErrorCode::PoleProximity, "evaluation at a pole");
  return num / den * ScaledComplex::exp(st.eta) * amplitude_;
}

ThetaQuotientFunction function_with_poles(const HyperellipticCurve& curve, const PeriodData& pd,
                                          const Divisor& D, const ThirdKindDifferential& eta,
                                          cplx A, const Tolerance& tol, PathMode mode) {
  return ThetaQuotientFunction(curve, pd, D, eta.form, eta.U, A, mode, tol);
}

ThetaQuotientFunction baker_akhiezer(const HyperellipticCurve& curve, const PeriodData& pd,
                                     const BAData& data, const Tolerance& tol, PathMode mode) {
  if (data.singular_points.size() != 1 || data.principal_polynomials.size() != 1)
    throw Error(ErrorCode::UnsupportedConfiguration, "exactly one essential singularity supported");
  SecondKindDifferential eta =
      second_kind(curve, pd, data.singular_points[0], data.principal_polynomials[0], tol);
  return ThetaQuotientFunction(curve, pd, data.divisor, eta.form, eta.V, 1.0, mode, tol);
}

}  // namespace thetakit
