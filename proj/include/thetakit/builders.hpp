#pragma once

#include <memory>
#include <vector>

#include "thetakit/hyperelliptic.hpp"

namespace thetakit {

/// Meromorphic differential f(P) dxi written as
///   even(xi) dxi + odd(xi) dxi / w + exact_coeff * d(w / (xi - exact_at))
/// minus the holomorphic correction sum_j mono_correction[j] xi^j dxi / w.
/// The even part is a rational function with poles off the cuts; its collapsed
/// cycle integrals vanish, so periods come from the odd part alone.
struct MeromorphicDifferential {
  std::function<cplx(cplx)> even;
  std::function<cplx(cplx)> odd;
  cplx exact_coeff = 0.0;
  cplx exact_at = 0.0;
  CVector mono_correction;
  std::vector<cplx> poles;  ///< xi-coordinates that integration paths keep away from

  /// Coefficient of dxi at a non-branch point.
  cplx value(const HyperellipticCurve& curve, const CurvePoint& p) const;
  /// Integrand pieces for path integration: dxi coefficient excluding the exact term.
  cplx path_density(cplx xi, cplx w) const;
  /// Antiderivative of the exact term at xi with w on the current sheet.
  cplx exact_primitive(cplx xi, cplx w) const;
};

struct ThirdKindDifferential {
  CurvePoint pole_plus, pole_minus;
  CVector normalization_coeffs;  ///< coefficients c_j of the subtracted sum c_j omega_j
  CVector U;                     ///< b-periods
  CVector a_periods;             ///< residual a-periods after normalization
  MeromorphicDifferential form;
};

/// Residue +1 at P and -1 at Q, all a-periods zero.
ThirdKindDifferential third_kind(const HyperellipticCurve& curve, const PeriodData& pd,
                                 const CurvePoint& P, const CurvePoint& Q, const Tolerance& tol = {});

struct SecondKindDifferential {
  CurvePoint pole;
  std::vector<cplx> principal;  ///< q_0 + q_1 z + q_2 z^2 in the local parameter z
  CVector V;                    ///< b-periods
  CVector a_periods;
  double residue = 0.0;  ///< modulus of the contour-measured residue at the pole
  MeromorphicDifferential form;
};

/// Local parameter z with z(Q) = infinity: 1 / (xi - xi_Q) at ordinary points,
/// H / w at a branch point e, H = sqrt(prod_{i != e} (e - e_i)).
cplx local_parameter(const HyperellipticCurve& curve, const CurvePoint& Q, const CurvePoint& P);

/// Normalized differential whose integral near Q behaves like q(z(P)) plus an analytic part.
SecondKindDifferential second_kind(const HyperellipticCurve& curve, const PeriodData& pd,
                                   const CurvePoint& Q, const std::vector<cplx>& principal,
                                   const Tolerance& tol = {});

enum class PathMode {
  Direct,  ///< every query integrates from the base branch point
  Cached,  ///< each query continues from the previous one (not thread safe)
};

/// A * theta(phi(P) - phi(D) + s - Delta) / theta(phi(P) - phi(D) - Delta) * exp(int eta),
/// with s = (b-periods of eta) / (2 pi i); phi and the eta integral share one path.
class ThetaQuotientFunction {
 public:
  ThetaQuotientFunction(HyperellipticCurve curve, PeriodData pd, const Divisor& D,
                        MeromorphicDifferential eta, CVector b_periods, cplx amplitude,
                        PathMode mode, const Tolerance& tol);

  cplx operator()(const CurvePoint& p) const { return evaluate(p).value(); }
  /// The path runs through the optional via points before the target.
  ScaledComplex evaluate(const CurvePoint& p, const std::vector<cplx>& via = {}) const;

  const CVector& shift() const { return shift_; }

 private:
  struct State {
    cplx xi;
    int sign;
    CVector phi;
    cplx eta;
  };
  State advance(State from, std::vector<cplx> path, int target_sign) const;

  HyperellipticCurve curve_;
  PeriodData pd_;
  MeromorphicDifferential eta_;
  CVector shift_, center_;
  cplx amplitude_;
  PathMode mode_;
  Tolerance tol_;
  mutable std::unique_ptr<State> cache_;
};

ThetaQuotientFunction function_with_poles(const HyperellipticCurve& curve, const PeriodData& pd,
                                          const Divisor& D, const ThirdKindDifferential& eta,
                                          cplx A, const Tolerance& tol = {},
                                          PathMode mode = PathMode::Direct);

struct BAData {
  Divisor divisor;
  std::vector<CurvePoint> singular_points;
  std::vector<std::vector<cplx>> principal_polynomials;
};

ThetaQuotientFunction baker_akhiezer(const HyperellipticCurve& curve, const PeriodData& pd,
                                     const BAData& data, const Tolerance& tol = {},
                                     PathMode mode = PathMode::Direct);

}  // namespace thetakit
