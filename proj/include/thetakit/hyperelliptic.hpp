#pragma once

#include <utility>
#include <vector>

#include "thetakit/quadrature.hpp"
#include "thetakit/theta.hpp"

namespace thetakit {

/// Sign of w relative to the principal branch; Undefined at branch points.
enum class Sheet : int { Minus = -1, Undefined = 0, Plus = 1 };

struct CurvePoint {
  cplx xi;
  Sheet sheet = Sheet::Plus;
};

inline CurvePoint involution(const CurvePoint& p) {
  return {p.xi, static_cast<Sheet>(-static_cast<int>(p.sheet))};
}

struct Divisor {
  std::vector<std::pair<CurvePoint, int>> points;
  int degree() const;
};

/// w^2 = prod (xi - xi_j). Cuts join consecutive sorted branch points; the principal
/// branch of w is the product of per-cut factors, each continuous off its own cut
/// and asymptotic to xi at infinity.
class HyperellipticCurve {
 public:
  int genus() const { return static_cast<int>(bp_.size()) / 2 - 1; }
  const std::vector<cplx>& branch_points() const { return bp_; }
  /// Largest pairwise distance between branch points.
  double spread() const { return spread_; }
  /// Smallest pairwise distance between branch points.
  double min_separation() const { return min_sep_; }

  int cut_count() const { return genus() + 1; }
  cplx cut_start(int c) const { return bp_[2 * c]; }
  cplx cut_end(int c) const { return bp_[2 * c + 1]; }

  cplx factor(int c, cplx xi) const;
  cplx w(cplx xi) const;
  cplx w(const CurvePoint& p) const;
  /// Index of the branch point within tol * spread of xi, or -1.
  int branch_index(cplx xi, double rel_tol = 1e-12) const;
  /// Parameters s in (0,1) where the segment a -> b crosses a cut, sorted.
  /// Throws PathThroughBranchPoint if it passes through a branch point in its interior.
  std::vector<double> cut_crossings(cplx a, cplx b) const;
  double distance_to_cuts(cplx xi) const;

 private:
  friend HyperellipticCurve build_curve(std::vector<cplx> branch_points);
  std::vector<cplx> bp_;
  double spread_ = 0.0, min_sep_ = 0.0;
};

HyperellipticCurve build_curve(std::vector<cplx> branch_points);

/// Values R_j(xi) of an integrand R(xi) dxi / w; writes n values.
using OddNumerator = std::function<void(cplx xi, cplx* out)>;

/// a- and b-periods of the n differentials R_j dxi / w; rows index differentials.
struct CycleIntegrals {
  CMatrix a, b;
};
CycleIntegrals cycle_integrals(const HyperellipticCurve& curve, const OddNumerator& r, int n,
                               double eps);

struct PeriodData {
  CMatrix A;      ///< A(j,k) = integral over a_k of xi^j dxi / w
  CMatrix Bp;     ///< Bp(j,k) = integral over b_k of xi^j dxi / w
  CMatrix A_inv;  ///< normalized differentials: omega_i = sum_j A_inv(i,j) xi^j dxi / w
  RiemannMatrix riemann_matrix;
};

PeriodData period_matrix(const HyperellipticCurve& curve, const Tolerance& tol = {});

/// Path from the first branch point through a short offset leg, then straight to target.
struct PathOptions {
  double waypoint_angle = 1.0;  ///< radians, rotation of the offset leg
  double waypoint_fraction = 0.3;  ///< offset leg length over the minimum separation
};
std::vector<cplx> canonical_path(const HyperellipticCurve& curve, cplx target,
                                 const PathOptions& opt = {});

struct PathIntegral {
  CVector value;
  int end_sign = 1;  ///< sign of w at the end relative to the principal branch
};

/// Coefficient of dxi at xi given w on the tracked sheet; writes n values.
using SheetIntegrand = std::function<void(cplx xi, cplx w, cplx* out)>;

/// Integral of f dxi along a polyline with w continued across cuts (sign flips at each crossing).
PathIntegral integrate_along(const HyperellipticCurve& curve, const std::vector<cplx>& path,
                             int start_sign, const SheetIntegrand& f, int n, double rel_tol);

/// Integral of R dxi / (s w) along a polyline, s the tracked sheet sign starting at
/// start_sign and flipping at each cut crossing.
PathIntegral integrate_on_path(const HyperellipticCurve& curve, const std::vector<cplx>& path,
                               int start_sign, const OddNumerator& r, int n, double rel_tol);

/// Normalized holomorphic differentials at a point: omega(P) dxi.
CVector holomorphic_values(const HyperellipticCurve& curve, const PeriodData& pd,
                           const CurvePoint& p);

/// phi(P) - phi(P0) along canonical paths from the first branch point.
CVector abel_map(const HyperellipticCurve& curve, const PeriodData& pd, const CurvePoint& p,
                 const CurvePoint& p0, const Tolerance& tol = {}, const PathOptions& opt = {});
/// Integral from the first branch point; also reports the path used.
CVector abel_from_base(const HyperellipticCurve& curve, const PeriodData& pd, const CurvePoint& p,
                       const Tolerance& tol = {}, const PathOptions& opt = {},
                       std::vector<cplx>* path_out = nullptr);

struct RiemannConstants {
  CVector delta;
};
RiemannConstants riemann_constants(const HyperellipticCurve& curve, const PeriodData& pd);

/// Argument-principle count of zeros of theta(phi(P) - C) over both sheets.
int zero_count(const HyperellipticCurve& curve, const PeriodData& pd, const CVector& c,
               const Tolerance& tol = {});

struct InversionOptions {
  int mesh = 64;
  unsigned seed = 0;  ///< nonzero jitters the mesh
};
Divisor jacobi_inversion(const HyperellipticCurve& curve, const PeriodData& pd, const CVector& z,
                         const Tolerance& tol = {}, const InversionOptions& opt = {});

/// |theta(C)| over the sum of term moduli, C = sum phi(P_j) + Delta.
double theta_divisor_membership(const HyperellipticCurve& curve, const PeriodData& pd,
                                const std::vector<CurvePoint>& points, const Tolerance& tol = {},
                                const CVector* offset = nullptr);

}  // namespace thetakit
