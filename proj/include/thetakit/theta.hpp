#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>
#include <vector>

#include "thetakit/error.hpp"
#include "thetakit/scaled_complex.hpp"

namespace thetakit {

using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};
inline constexpr int kMaxGenus = 16;

struct Tolerance {
  double eps = 1e-10;
  double max_radius = 40.0;
};

class RiemannMatrix {
 public:
  int genus() const { return static_cast<int>(b_.rows()); }
  const CMatrix& matrix() const { return b_; }
  const RMatrix& imag() const { return y_; }
  const RMatrix& imag_inverse() const { return y_inv_; }
  /// Lower factor L with Im B = L L^T.
  const RMatrix& cholesky_im() const { return chol_; }

 private:
  friend RiemannMatrix validate_riemann_matrix(const CMatrix&, double);
  CMatrix b_;
  RMatrix y_, y_inv_, chol_;
};

/// Checks symmetry (relative tolerance) and Im B > 0, then symmetrizes.
RiemannMatrix validate_riemann_matrix(const CMatrix& entries, double symmetry_tol = 1e-12);

struct Characteristic {
  RVector alpha;
  RVector beta;

  static Characteristic zero(int g);
  static Characteristic uniform(int g, double a, double b);
  int genus() const { return static_cast<int>(alpha.size()); }
};

enum class Parity { Even, Odd };

ScaledComplex theta(const CVector& z, const RiemannMatrix& B, const Tolerance& tol = {});
ScaledComplex theta_char(const Characteristic& chr, const CVector& z, const RiemannMatrix& B,
                         const Tolerance& tol = {});

/// Value plus log of the sum of term moduli (same log-scale bookkeeping).
/// exp(log|value| - log_abs_sum) is a cancellation measure invariant under lattice shifts.
struct ThetaEval {
  ScaledComplex value;
  double log_abs_sum = 0.0;
  double relative_size() const;
};
ThetaEval theta_char_eval(const Characteristic& chr, const CVector& z, const RiemannMatrix& B,
                          const Tolerance& tol = {});

/// Mixed partial derivative of total order at most 3.
ScaledComplex theta_derivative(const std::vector<int>& multi_index, const Characteristic& chr,
                               const CVector& z, const RiemannMatrix& B, const Tolerance& tol = {});

struct ThetaGradient {
  ScaledComplex value;
  std::vector<ScaledComplex> gradient;
};
ThetaGradient theta_gradient(const Characteristic& chr, const CVector& z, const RiemannMatrix& B,
                             const Tolerance& tol = {});

Parity half_period_parity(const Characteristic& chr);

struct HalfPeriod {
  Characteristic chr;
  Parity parity;
};
std::vector<HalfPeriod> enumerate_half_periods(int g);

/// v = r + n + B m with r small; n, m integer.
struct LatticeReduction {
  CVector residual;
  RVector n;
  RVector m;
};
LatticeReduction reduce_mod_lattice(const CVector& v, const RiemannMatrix& B);

enum class AdditionKind { SquaredSum, SquaredDiff, JacobiAtZero, FourTermRiemann };

/// FourTermRiemann uses w (four g-vectors) and right (four (k,l) characteristics);
/// z and left are derived from them unless supplied, in which case they must match.
struct AdditionInputs {
  CVector z;
  std::vector<CVector> w;
  std::vector<Characteristic> right;
  std::vector<CVector> four_z;
  std::vector<Characteristic> left;
};

double addition_identity_check(AdditionKind kind, const AdditionInputs& in, const RiemannMatrix& B,
                               const Tolerance& tol = {});

}  // namespace thetakit
