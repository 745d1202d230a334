#pragma once

#include <functional>

#include "thetakit/theta.hpp"

namespace thetakit {

/// Writes n values of the integrand at u into out.
using VectorIntegrand = std::function<void(double u, cplx* out)>;

/// Adaptive Gauss-Kronrod 7/15 on [a, b]. A panel is accepted when its error estimate is
/// below rel_tol times the panel's L1 mass, or below its length share of
/// max(abs_tol, rel_tol * first-pass L1 mass of [a, b]).
/// Throws QuadratureStall past max_depth bisections.
CVector integrate_gk(const VectorIntegrand& f, int n, double a, double b, double rel_tol,
                     double abs_tol, int max_depth = 48);

/// Midpoint Gauss-Chebyshev rule on [0, pi] with doubling until the change drops below
/// eps * max(1, |I|). f(t, out) receives n values. Returns the settled sums.
CVector integrate_cheb(const VectorIntegrand& f, int n, double eps, int start_nodes = 16,
                       int max_nodes = 1 << 16);

}  // namespace thetakit
