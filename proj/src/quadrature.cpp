#include "thetakit/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace thetakit {

namespace {

const double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
const double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
const double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
  double a, b;
  int depth;
};

}  // namespace

CVector integrate_gk(const VectorIntegrand& f, int n, double a, double b, double rel_tol,
                     double abs_tol, int max_depth) {
  CVector total = CVector::Zero(n);
  if (a == b) return total;
  const double full = std::abs(b - a);
  std::vector<cplx> buf(n);
  CVector k(n), g(n);
  std::vector<Piece> stack{{a, b, 0}};
  double floor_tol = abs_tol;  // raised to rel_tol times the first-pass mass
  while (!stack.empty()) {
    Piece p = stack.back();
    stack.pop_back();
    double c = 0.5 * (p.a + p.b), h = 0.5 * (p.b - p.a);
    k.setZero();
    g.setZero();
    double l1 = 0.0;
    for (int i = 0; i < 15; ++i) {
      int idx = i < 8 ? i : 14 - i;
      double x = i < 8 ? -kXgk[i] : kXgk[14 - i];
      f(c + h * x, buf.data());
      double top = 0.0;
      for (int j = 0; j < n; ++j) top = std::max(top, std::abs(buf[j]));
      l1 += kWgk[idx] * top;
      for (int j = 0; j < n; ++j) {
        k[j] += kWgk[idx] * buf[j];
        if (idx % 2 == 1) g[j] += kWg[idx / 2] * buf[j];
      }
    }
    k *= h;
    g *= h;
    double err = (k - g).cwiseAbs().maxCoeff();
    double mag = l1 * std::abs(h);
    if (p.depth == 0) floor_tol = std::max(abs_tol, rel_tol * mag);
    double share = floor_tol * std::abs(p.b - p.a) / full;
    if (std::abs(h) < 1e-10 * full) {
      // below resolution: the substituted integrands are bounded, so the panel is negligible
      if (std::isfinite(err)) total += k;
      continue;
    }
    if (!std::isfinite(err)) throw Error(ErrorCode::QuadratureStall, "non-finite integrand");
    if (err <= std::max(share, rel_tol * mag) || err < 1e-300) {
      total += k;
      continue;
    }
    if (p.depth >= max_depth)
      throw Error(ErrorCode::QuadratureStall, "adaptive quadrature exceeded bisection depth");
    stack.push_back({c, p.b, p.depth + 1});
    stack.push_back({p.a, c, p.depth + 1});
  }
  return total;
}

CVector integrate_cheb(const VectorIntegrand& f, int n, double eps, int start_nodes,
                       int max_nodes) {
  std::vector<cplx> buf(n);
  auto rule = [&](int nodes) {
    CVector s = CVector::Zero(n);
    for (int j = 0; j < nodes; ++j) {
      f((j + 0.5) * kPi / nodes, buf.data());
      for (int i = 0; i < n; ++i) s[i] += buf[i];
    }
    return CVector(s * (kPi / nodes));
  };
  CVector prev = rule(start_nodes);
  for (int nodes = 2 * start_nodes; nodes <= max_nodes; nodes *= 2) {
    CVector cur = rule(nodes);
    double change = (cur - prev).cwiseAbs().maxCoeff();
    double mag = std::max(1.0, cur.cwiseAbs().maxCoeff());
    if (change <= eps * mag) return cur;
    prev = std::move(cur);
  }
  throw Error(ErrorCode::QuadratureStall, "Chebyshev node doubling did not settle");
}

}  // namespace thetakit
