#include "thetakit/hyperelliptic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace thetakit {

int Divisor::degree() const {
  int d = 0;
  for (const auto& p : points) d += p.second;
  return d;
}

HyperellipticCurve build_curve(std::vector<cplx> bp) {
  if (bp.size() % 2 != 0) throw Error(ErrorCode::OddCount, "branch point count must be even");
  if (bp.size() < 4) throw Error(ErrorCode::InvalidArgument, "need at least 4 branch points");
  for (cplx x : bp)
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
      throw Error(ErrorCode::InvalidArgument, "non-finite branch point");
  // real parts equal up to rounding count as ties so collinear points sort by imaginary part
  double mag = 0.0;
  for (cplx x : bp) mag = std::max(mag, std::abs(x));
  const double quantum = 1e-10 * std::max(mag, 1e-300);
  std::sort(bp.begin(), bp.end(), [quantum](cplx a, cplx b) {
    double ka = std::round(a.real() / quantum), kb = std::round(b.real() / quantum);
    return ka != kb ? ka < kb : a.imag() < b.imag();
  });
  double spread = 0.0, sep = HUGE_VAL;
  for (size_t i = 0; i < bp.size(); ++i)
    for (size_t j = i + 1; j < bp.size(); ++j) {
      double d = std::abs(bp[i] - bp[j]);
      spread = std::max(spread, d);
      sep = std::min(sep, d);
    }
  if (sep <= 1e-10 * std::max(spread, 1e-300))
    throw Error(ErrorCode::CollidingBranchPoints, "branch points not distinct");
  HyperellipticCurve c;
  c.bp_ = std::move(bp);
  c.spread_ = spread;
  c.min_sep_ = sep;
  return c;
}

cplx HyperellipticCurve::factor(int c, cplx xi) const {
  cplx m = 0.5 * (cut_start(c) + cut_end(c));
  cplx h = 0.5 * (cut_end(c) - cut_start(c));
  cplx d = xi - m;
  if (d == 0.0) return kI * h;
  return d * std::sqrt(1.0 - h * h / (d * d));
}

cplx HyperellipticCurve::w(cplx xi) const {
  cplx p = 1.0;
  for (int c = 0; c < cut_count(); ++c) p *= factor(c, xi);
  return p;
}

cplx HyperellipticCurve::w(const CurvePoint& p) const {
  return p.sheet == Sheet::Minus ? -w(p.xi) : w(p.xi);
}

int HyperellipticCurve::branch_index(cplx xi, double rel_tol) const {
  for (size_t i = 0; i < bp_.size(); ++i)
    if (std::abs(xi - bp_[i]) <= rel_tol * spread_) return static_cast<int>(i);
  return -1;
}

namespace {

double cross(cplx u, cplx v) { return u.real() * v.imag() - u.imag() * v.real(); }

double segment_distance(cplx p, cplx a, cplx b) {
  cplx d = b - a;
  double l2 = std::norm(d);
  if (l2 == 0.0) return std::abs(p - a);
  double s = std::clamp(((p - a) * std::conj(d)).real() / l2, 0.0, 1.0);
  return std::abs(p - (a + s * d));
}

}  // namespace

double HyperellipticCurve::distance_to_cuts(cplx xi) const {
  double best = HUGE_VAL;
  for (int c = 0; c < cut_count(); ++c)
    best = std::min(best, segment_distance(xi, cut_start(c), cut_end(c)));
  return best;
}

std::vector<double> HyperellipticCurve::cut_crossings(cplx a, cplx b) const {
  std::vector<double> out;
  cplx d = b - a;
  if (d == 0.0) return out;
  const double tiny = 1e-10 * spread_;
  for (size_t i = 0; i < bp_.size(); ++i) {
    if (std::abs(bp_[i] - a) <= tiny || std::abs(bp_[i] - b) <= tiny) continue;
    if (segment_distance(bp_[i], a, b) <= tiny) {
      std::ostringstream os;
      os << "segment passes through branch point " << bp_[i];
      throw Error(ErrorCode::PathThroughBranchPoint, os.str());
    }
  }
  for (int c = 0; c < cut_count(); ++c) {
    cplx p = cut_start(c), e = cut_end(c) - p, f = p - a;
    double den = cross(d, e);
    if (std::abs(den) <= 1e-14 * std::abs(d) * std::abs(e)) {
      if (std::abs(cross(f, d)) <= 1e-12 * std::abs(d) * std::abs(f) + tiny * std::abs(d)) {
        // collinear: only an overlap of positive length is a problem
        double s0 = ((p - a) * std::conj(d)).real() / std::norm(d);
        double s1 = ((cut_end(c) - a) * std::conj(d)).real() / std::norm(d);
        double lo = std::max(0.0, std::min(s0, s1)), hi = std::min(1.0, std::max(s0, s1));
        if (hi - lo > 1e-12) throw Error(ErrorCode::PathError, "path runs along a cut");
      }
      continue;
    }
    double s = cross(f, e) / den;
    double sigma = cross(f, d) / den;
    if (s <= 1e-13 || s >= 1.0 - 1e-13 || sigma < 0.0 || sigma > 1.0) continue;
    out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

CycleIntegrals cycle_integrals(const HyperellipticCurve& curve, const OddNumerator& r, int n,
                               double eps) {
  const int g = curve.genus();
  const int cuts = g + 1;
  // blocks: half a-cycles along each cut, then the gaps between consecutive cuts
  const int blocks = cuts + g;
  std::vector<cplx> rv(n);
  VectorIntegrand f = [&](double t, cplx* out) {
    double ct = std::cos(t);
    for (int c = 0; c < cuts; ++c) {
      cplx m = 0.5 * (curve.cut_start(c) + curve.cut_end(c));
      cplx h = 0.5 * (curve.cut_end(c) - curve.cut_start(c));
      cplx xi = m + h * ct;
      cplx gprod = 1.0;
      for (int l = 0; l < cuts; ++l)
        if (l != c) gprod *= curve.factor(l, xi);
      r(xi, rv.data());
      for (int j = 0; j < n; ++j) out[c * n + j] = -kI * rv[j] / gprod;
    }
    for (int l = 0; l < g; ++l) {
      cplx e1 = curve.cut_end(l), e2 = curve.cut_start(l + 1);
      cplx m = 0.5 * (e1 + e2), h = 0.5 * (e2 - e1);
      cplx xi = m + h * ct;
      // w = cos(t/2) sin(t/2) * st with the endpoint factors extracted exactly
      cplx ml = 0.5 * (curve.cut_start(l) + curve.cut_end(l)), dl = xi - ml;
      cplx fl = dl * std::sqrt((xi - curve.cut_start(l)) * (2.0 * h) / (dl * dl));
      cplx mr = 0.5 * (curve.cut_start(l + 1) + curve.cut_end(l + 1)), dr = xi - mr;
      cplx fr = dr * std::sqrt((xi - curve.cut_end(l + 1)) * (-2.0 * h) / (dr * dr));
      cplx st = fl * fr;
      for (int k = 0; k < cuts; ++k)
        if (k != l && k != l + 1) st *= curve.factor(k, xi);
      r(xi, rv.data());
      for (int j = 0; j < n; ++j) out[(cuts + l) * n + j] = 2.0 * h * rv[j] / st;
    }
  };
  CVector all = integrate_cheb(f, n * blocks, eps);
  auto block = [&](int b, int j) { return all[b * n + j]; };
  CycleIntegrals out{CMatrix::Zero(n, g), CMatrix::Zero(n, g)};
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < g; ++k) {
      out.a(j, k) = -2.0 * block(k + 1, j);
      cplx s = 0.0;
      for (int l = 0; l <= k; ++l) s += block(cuts + l, j);
      out.b(j, k) = 2.0 * s;
    }
  return out;
}

namespace {

OddNumerator monomials(int g) {
  return [g](cplx xi, cplx* out) {
    cplx p = 1.0;
    for (int j = 0; j < g; ++j) {
      out[j] = p;
      p *= xi;
    }
  };
}

}  // namespace

PeriodData period_matrix(const HyperellipticCurve& curve, const Tolerance& tol) {
  const int g = curve.genus();
  CycleIntegrals ci = cycle_integrals(curve, monomials(g), g, std::min(tol.eps, 1e-12));
  PeriodData pd;
  pd.A = ci.a;
  pd.Bp = ci.b;
  Eigen::FullPivLU<CMatrix> lu(pd.A);
  if (!lu.isInvertible()) throw Error(ErrorCode::MatrixValidation, "a-period matrix singular");
  pd.A_inv = lu.inverse();
  try {
    pd.riemann_matrix = validate_riemann_matrix(pd.A_inv * pd.Bp, 1e-8);
  } catch (const Error& e) {
    throw Error(ErrorCode::MatrixValidation, e.what());
  }
  return pd;
}

std::vector<cplx> canonical_path(const HyperellipticCurve& curve, cplx target,
                                 const PathOptions& opt) {
  cplx base = curve.branch_points()[0];
  if (std::abs(target - base) <= 1e-12 * curve.spread()) return {base};
  cplx away = base - curve.branch_points()[1];
  away /= std::abs(away);
  cplx wp = base + opt.waypoint_fraction * curve.min_separation() * away *
                       std::polar(1.0, opt.waypoint_angle);
  return {base, wp, target};
}

namespace {

// w near branch point idx from the exact offset delta = xi - e_idx, sign matched to ref_w at ref.
struct EndpointW {
  const HyperellipticCurve* curve = nullptr;
  int idx = -1;
  double sign = 1.0;

  cplx raw(cplx delta) const {
    const auto& bp = curve->branch_points();
    cplx e = bp[idx], p = delta;
    for (size_t i = 0; i < bp.size(); ++i)
      if (static_cast<int>(i) != idx) p *= e + delta - bp[i];
    return std::sqrt(p);
  }
  void calibrate(cplx ref_delta) {
    cplx acc = raw(ref_delta), principal = curve->w(bp_at(ref_delta));
    sign = std::abs(acc - principal) <= std::abs(acc + principal) ? 1.0 : -1.0;
  }
  cplx bp_at(cplx delta) const { return curve->branch_points()[idx] + delta; }
  cplx operator()(cplx delta) const { return sign * raw(delta); }
};

}  // namespace

PathIntegral integrate_along(const HyperellipticCurve& curve, const std::vector<cplx>& path,
                             int start_sign, const SheetIntegrand& f, int n, double rel_tol) {
  PathIntegral out{CVector::Zero(n), start_sign};
  int sign = start_sign;
  // below this fraction of a piece, w comes from the endpoint expansion
  const double near = 1e-3;
  for (size_t seg = 0; seg + 1 < path.size(); ++seg) {
    cplx a = path[seg], b = path[seg + 1], d = b - a;
    if (d == 0.0) continue;
    std::vector<double> cuts = curve.cut_crossings(a, b);
    std::vector<double> knots{0.0};
    knots.insert(knots.end(), cuts.begin(), cuts.end());
    knots.push_back(1.0);
    const int ia = curve.branch_index(a), ib = curve.branch_index(b);
    for (size_t p = 0; p + 1 < knots.size(); ++p) {
      double s0 = knots[p], s1 = knots[p + 1];
      bool lo = p == 0 && ia >= 0, hi = p + 2 == knots.size() && ib >= 0;
      EndpointW wa, wb;
      if (lo) {
        wa = {&curve, ia, 1.0};
        wa.calibrate(near * (s1 - s0) * d);
      }
      if (hi) {
        wb = {&curve, ib, 1.0};
        wb.calibrate(-near * (s1 - s0) * d);
      }
      const double sg = sign;
      VectorIntegrand h = [&](double u, cplx* o) {
        // fraction of the piece travelled, and its complement, both to full relative precision
        double phi, rest, dphi;
        if (lo && hi) {
          phi = u * u * (3.0 - 2.0 * u);
          rest = (1.0 - u) * (1.0 - u) * (1.0 + 2.0 * u);
          dphi = 6.0 * u * (1.0 - u);
        } else if (lo) {
          phi = u * u;
          rest = 1.0 - phi;
          dphi = 2.0 * u;
        } else if (hi) {
          rest = (1.0 - u) * (1.0 - u);
          phi = 1.0 - rest;
          dphi = 2.0 * (1.0 - u);
        } else {
          phi = u;
          rest = 1.0 - u;
          dphi = 1.0;
        }
        cplx xi = a + (s0 + (s1 - s0) * phi) * d;
        cplx w;
        if (lo && phi < near)
          w = wa((s1 - s0) * phi * d);
        else if (hi && rest < near)
          w = wb(-(s1 - s0) * rest * d);
        else
          w = curve.w(xi);
        f(xi, sg * w, o);
        cplx jac = d * ((s1 - s0) * dphi);
        for (int j = 0; j < n; ++j) o[j] *= jac;
      };
      out.value += integrate_gk(h, n, 0.0, 1.0, rel_tol, 0.0);
      if (p + 2 < knots.size()) sign = -sign;
    }
  }
  out.end_sign = sign;
  return out;
}

PathIntegral integrate_on_path(const HyperellipticCurve& curve, const std::vector<cplx>& path,
                               int start_sign, const OddNumerator& r, int n, double rel_tol) {
  std::vector<cplx> rv(n);
  SheetIntegrand f = [&](cplx xi, cplx w, cplx* o) {
    r(xi, rv.data());
    for (int j = 0; j < n; ++j) o[j] = rv[j] / w;
  };
  return integrate_along(curve, path, start_sign, f, n, rel_tol);
}

CVector holomorphic_values(const HyperellipticCurve& curve, const PeriodData& pd,
                           const CurvePoint& p) {
  const int g = curve.genus();
  CVector mono(g);
  monomials(g)(p.xi, mono.data());
  return pd.A_inv * mono / curve.w(p);
}

CVector abel_from_base(const HyperellipticCurve& curve, const PeriodData& pd, const CurvePoint& p,
                       const Tolerance& tol, const PathOptions& opt,
                       std::vector<cplx>* path_out) {
  const int g = curve.genus();
  std::vector<cplx> path = canonical_path(curve, p.xi, opt);
  if (path_out) *path_out = path;
  if (path.size() < 2) return CVector::Zero(g);
  PathIntegral pi = integrate_on_path(curve, path, 1, monomials(g), g, std::min(tol.eps, 1e-12));
  CVector raw = pi.value;
  bool at_branch = curve.branch_index(p.xi) >= 0;
  if (!at_branch && p.sheet != Sheet::Undefined && pi.end_sign != static_cast<int>(p.sheet))
    raw = -raw;
  return pd.A_inv * raw;
}

CVector abel_map(const HyperellipticCurve& curve, const PeriodData& pd, const CurvePoint& p,
                 const CurvePoint& p0, const Tolerance& tol, const PathOptions& opt) {
  if (p.xi == p0.xi && p.sheet == p0.sheet) return CVector::Zero(curve.genus());
  return abel_from_base(curve, pd, p, tol, opt) - abel_from_base(curve, pd, p0, tol, opt);
}

RiemannConstants riemann_constants(const HyperellipticCurve& curve, const PeriodData& pd) {
  const int g = curve.genus();
  const CMatrix& B = pd.riemann_matrix.matrix();
  CVector d(g);
  for (int j = 0; j < g; ++j) d[j] = 0.5 * B.row(j).sum() + 0.5 * (j + 1);
  return {reduce_mod_lattice(d, pd.riemann_matrix).residual};
}

namespace {

// Abel image carried continuously along a walk in the xi-plane.
struct Walker {
  const HyperellipticCurve* curve;
  const PeriodData* pd;
  cplx xi;
  int sign;
  CVector phi;

  void step(cplx to) {
    const int g = curve->genus();
    PathIntegral pi = integrate_on_path(*curve, {xi, to}, sign, monomials(g), g, 1e-12);
    phi += pd->A_inv * pi.value;
    sign = pi.end_sign;
    xi = to;
  }
};

Walker start_walker(const HyperellipticCurve& curve, const PeriodData& pd, cplx xi, int sign) {
  CurvePoint p{xi, sign > 0 ? Sheet::Plus : Sheet::Minus};
  return {&curve, &pd, xi, sign, abel_from_base(curve, pd, p)};
}

// Winding of theta(phi - c) along a closed polygon walked `laps` times from wk.
double polygon_winding(Walker wk, const std::vector<cplx>& poly, int laps, const CVector& c,
                       const RiemannMatrix& B, const Tolerance& tol, double& max_rel) {
  const Characteristic z0 = Characteristic::zero(static_cast<int>(c.size()));
  auto eval = [&](const CVector& phi) {
    ThetaEval e = theta_char_eval(z0, phi - c, B, tol);
    max_rel = std::max(max_rel, e.relative_size());
    if (e.value.is_zero())
      throw Error(ErrorCode::DegenerateCount, "theta vanishes on the counting contour");
    return e.value;
  };
  ScaledComplex prev = eval(wk.phi);
  double total = 0.0;
  struct Seg {
    double t0, t1;
    int depth;
  };
  const size_t m = poly.size();
  for (int lap = 0; lap < laps; ++lap)
    for (size_t k = 0; k < m; ++k) {
      cplx a = poly[k], b = poly[(k + 1) % m];
      std::vector<Seg> todo{{0.0, 1.0, 0}};
      while (!todo.empty()) {
        Seg sg = todo.back();
        todo.pop_back();
        Walker trial = wk;
        trial.step(a + sg.t1 * (b - a));
        ScaledComplex cur = eval(trial.phi);
        double d = std::arg(ratio(cur, prev));
        if (std::abs(d) > 0.3 && sg.depth < 30) {
          double mid = 0.5 * (sg.t0 + sg.t1);
          todo.push_back({mid, sg.t1, sg.depth + 1});
          todo.push_back({sg.t0, mid, sg.depth + 1});
          continue;
        }
        total += d;
        wk = trial;
        prev = cur;
      }
    }
  return total / (2.0 * kPi);
}

struct Box {
  double xmin, xmax, ymin, ymax;
};

Box branch_box(const HyperellipticCurve& curve, double margin) {
  Box b{HUGE_VAL, -HUGE_VAL, HUGE_VAL, -HUGE_VAL};
  for (cplx x : curve.branch_points()) {
    b.xmin = std::min(b.xmin, x.real());
    b.xmax = std::max(b.xmax, x.real());
    b.ymin = std::min(b.ymin, x.imag());
    b.ymax = std::max(b.ymax, x.imag());
  }
  b.xmin -= margin;
  b.xmax += margin;
  b.ymin -= margin;
  b.ymax += margin;
  return b;
}

}  // namespace

int zero_count(const HyperellipticCurve& curve, const PeriodData& pd, const CVector& c,
               const Tolerance& tol) {
  const int n = 24;
  const Box box = branch_box(curve, 1.5 * curve.spread());
  const double hx = (box.xmax - box.xmin) / n, hy = (box.ymax - box.ymin) / n;
  // offsets keep mesh lines off branch points and off horizontal or vertical cuts
  const double ox = 0.2718281828 * hx, oy = 0.3141592654 * hy;
  auto node = [&](int i, int j) { return cplx(box.xmin + ox + i * hx, box.ymin + oy + j * hy); };
  std::vector<Walker> nodes;
  nodes.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j) {
    Walker wk = start_walker(curve, pd, node(0, j), 1);
    for (int i = 0; i <= n; ++i) {
      if (i > 0) wk.step(node(i, j));
      nodes.push_back(wk);
    }
  }
  auto flipped = [](Walker w) {
    w.sign = -w.sign;
    w.phi = -w.phi;
    return w;
  };
  const RiemannMatrix& B = pd.riemann_matrix;
  double max_rel = 0.0, total = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      std::vector<cplx> cell{node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)};
      int inside = 0;
      for (cplx x : curve.branch_points())
        if (x.real() > cell[0].real() && x.real() < cell[1].real() && x.imag() > cell[0].imag() &&
            x.imag() < cell[2].imag())
          ++inside;
      const Walker& w = nodes[j * (n + 1) + i];
      if (inside % 2 == 1) {
        total += polygon_winding(w, cell, 2, c, B, tol, max_rel);
      } else {
        total += polygon_winding(w, cell, 1, c, B, tol, max_rel);
        total += polygon_winding(flipped(w), cell, 1, c, B, tol, max_rel);
      }
    }
  std::vector<cplx> rim;
  for (int i = 0; i < n; ++i) rim.push_back(node(i, 0));
  for (int j = 0; j < n; ++j) rim.push_back(node(n, j));
  for (int i = n; i > 0; --i) rim.push_back(node(i, n));
  for (int j = n; j > 0; --j) rim.push_back(node(0, j));
  const Walker& w0 = nodes[0];
  total -= polygon_winding(w0, rim, 1, c, B, tol, max_rel);
  total -= polygon_winding(flipped(w0), rim, 1, c, B, tol, max_rel);
  if (max_rel < 1e-10) throw Error(ErrorCode::IdenticallyZero, "theta(phi(P) - C) vanishes identically");
  long count = std::lround(total);
  if (std::abs(total - count) > 0.1) throw Error(ErrorCode::DegenerateCount, "non-integral zero count");
  return static_cast<int>(count);
}

double theta_divisor_membership(const HyperellipticCurve& curve, const PeriodData& pd,
                                const std::vector<CurvePoint>& points, const Tolerance& tol,
                                const CVector* offset) {
  const int g = curve.genus();
  CVector cv = riemann_constants(curve, pd).delta;
  for (const auto& p : points) cv += abel_from_base(curve, pd, p, tol);
  if (offset) cv += *offset;
  return theta_char_eval(Characteristic::zero(g), cv, pd.riemann_matrix, tol).relative_size();
}

namespace {

struct Root {
  cplx xi;
  int sign;
};

bool same_lattice_class(const CVector& v, const RiemannMatrix& B, double tol) {
  return reduce_mod_lattice(v, B).residual.cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

Divisor jacobi_inversion(const HyperellipticCurve& curve, const PeriodData& pd, const CVector& z,
                         const Tolerance& tol, const InversionOptions& opt) {
  const int g = curve.genus();
  if (g > 2) throw Error(ErrorCode::GenusTooLarge, "Jacobi inversion supports genus 1 and 2");
  const RiemannMatrix& B = pd.riemann_matrix;
  const Characteristic z0 = Characteristic::zero(g);
  const CVector e = z + riemann_constants(curve, pd).delta;

  const Box box = branch_box(curve, 1.5 * curve.spread());
  const double xmin = box.xmin, xmax = box.xmax, ymin = box.ymin, ymax = box.ymax;
  const int n = opt.mesh;
  double jx = 0.29, jy = 0.37;
  if (opt.seed != 0) {
    std::mt19937 rng(opt.seed);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    jx = u(rng);
    jy = u(rng);
  }
  const double hx = (xmax - xmin) / n, hy = (ymax - ymin) / n;
  auto node = [&](int i, int j) { return cplx(xmin + (i + jx) * hx, ymin + (j + jy) * hy); };

  // rel[s][j*n+i]: normalized |zeta| on sheet s (0 = plus), phi stored for Newton starts
  std::vector<double> rel[2];
  std::vector<CVector> phis[2];
  for (int s = 0; s < 2; ++s) {
    rel[s].assign(n * n, 0.0);
    phis[s].assign(n * n, CVector());
  }
  double max_rel = 0.0;
  for (int j = 0; j < n; ++j) {
    Walker wk = start_walker(curve, pd, node(0, j), 1);
    for (int i = 0; i < n; ++i) {
      if (i > 0) wk.step(node(i, j));
      for (int s = 0; s < 2; ++s) {
        // s = 0 holds the plus sheet
        bool plus = (wk.sign > 0) == (s == 0);
        CVector phi = plus ? wk.phi : CVector(-wk.phi);
        double r = theta_char_eval(z0, phi - e, B, tol).relative_size();
        rel[s][j * n + i] = r;
        phis[s][j * n + i] = phi;
        max_rel = std::max(max_rel, r);
      }
    }
  }
  if (max_rel < 1e-10)
    throw Error(ErrorCode::SpecialDivisor, "theta(phi(P) - z - Delta) vanishes identically");

  struct Cand {
    double r;
    int s, i, j;
  };
  std::vector<Cand> cands;
  for (int s = 0; s < 2; ++s)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        double r = rel[s][j * n + i];
        bool is_min = true;
        for (int dj = -1; dj <= 1 && is_min; ++dj)
          for (int di = -1; di <= 1; ++di) {
            int a = i + di, b = j + dj;
            if ((di || dj) && a >= 0 && a < n && b >= 0 && b < n && rel[s][b * n + a] < r) {
              is_min = false;
              break;
            }
          }
        if (is_min) cands.push_back({r, s, i, j});
      }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.r < b.r; });
  if (cands.size() > static_cast<size_t>(6 * g + 6)) cands.resize(6 * g + 6);

  std::vector<Root> roots;
  for (const Cand& cd : cands) {
    // walker positioned at the mesh node on the requested sheet
    Walker wk{&curve, &pd, node(cd.i, cd.j), cd.s == 0 ? 1 : -1, phis[cd.s][cd.j * n + cd.i]};
    bool ok = false;
    for (int it = 0; it < 50; ++it) {
      ThetaGradient tg = theta_gradient(z0, wk.phi - e, B, tol);
      CurvePoint p{wk.xi, wk.sign > 0 ? Sheet::Plus : Sheet::Minus};
      CVector om = holomorphic_values(curve, pd, p);
      cplx deriv = 0.0;
      for (int k = 0; k < g; ++k) deriv += ratio(tg.gradient[k], tg.value) * om[k];
      if (tg.value.is_zero()) {
        ok = true;
        break;
      }
      if (!std::isfinite(std::abs(deriv)) || deriv == 0.0) break;
      cplx dxi = -1.0 / deriv;
      double cap = 0.5 * std::max(hx, hy) * 4.0;
      if (std::abs(dxi) > cap) dxi *= cap / std::abs(dxi);
      try {
        wk.step(wk.xi + dxi);
      } catch (const Error&) {
        break;
      }
      if (std::abs(dxi) <= 1e-10 * (1.0 + std::abs(wk.xi))) {
        ok = true;
        break;
      }
    }
    if (!ok) continue;
    bool dup = false;
    for (const Root& r : roots)
      if (r.sign == wk.sign && std::abs(r.xi - wk.xi) <= 1e-7 * (1.0 + std::abs(r.xi))) dup = true;
    if (!dup) roots.push_back({wk.xi, wk.sign});
  }
  if (static_cast<int>(roots.size()) < g)
    throw Error(ErrorCode::NewtonDivergence, "Newton refinement found too few zeros");

  auto phi_of = [&](const Root& r) {
    return abel_from_base(curve, pd, {r.xi, r.sign > 0 ? Sheet::Plus : Sheet::Minus}, tol);
  };
  std::vector<CVector> images;
  for (const Root& r : roots) images.push_back(phi_of(r));
  auto build = [&](std::initializer_list<int> idx) {
    Divisor d;
    for (int k : idx)
      d.points.push_back({{roots[k].xi, roots[k].sign > 0 ? Sheet::Plus : Sheet::Minus}, 1});
    return d;
  };
  const int m = static_cast<int>(roots.size());
  if (g == 1) {
    for (int a = 0; a < m; ++a)
      if (same_lattice_class(images[a] - z, B, 1e-6)) return build({a});
  } else {
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        if (same_lattice_class(images[a] + images[b] - z, B, 1e-6)) return build({a, b});
  }
  throw Error(ErrorCode::NewtonDivergence, "refined zeros do not reproduce the target");
}

}  // namespace thetakit
