#include "thetakit/scaled_complex.hpp"

#include <cmath>

#include "thetakit/error.hpp"

namespace thetakit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::RadiusExceeded: return "RadiusExceeded";
    case ErrorCode::OrderTooHigh: return "OrderTooHigh";
    case ErrorCode::NotHalfPeriod: return "NotHalfPeriod";
    case ErrorCode::GenusTooLarge: return "GenusTooLarge";
    case ErrorCode::BadConfiguration: return "BadConfiguration";
    case ErrorCode::PoleProximity: return "PoleProximity";
    case ErrorCode::ContourFailure: return "ContourFailure";
    case ErrorCode::AbelConditionViolated: return "AbelConditionViolated";
    case ErrorCode::DegenerateCount: return "DegenerateCount";
    case ErrorCode::ResidueSumNonzero: return "ResidueSumNonzero";
    case ErrorCode::CollidingBranchPoints: return "CollidingBranchPoints";
    case ErrorCode::OddCount: return "OddCount";
    case ErrorCode::QuadratureStall: return "QuadratureStall";
    case ErrorCode::MatrixValidation: return "MatrixValidation";
    case ErrorCode::PathThroughBranchPoint: return "PathThroughBranchPoint";
    case ErrorCode::IdenticallyZero: return "IdenticallyZero";
    case ErrorCode::SpecialDivisor: return "SpecialDivisor";
    case ErrorCode::NewtonDivergence: return "NewtonDivergence";
    case ErrorCode::PoleAtBranchPoint: return "PoleAtBranchPoint";
    case ErrorCode::SingularNormalization: return "SingularNormalization";
    case ErrorCode::PathError: return "PathError";
    case ErrorCode::UnsupportedPrincipalPart: return "UnsupportedPrincipalPart";
    case ErrorCode::ResidueLeak: return "ResidueLeak";
    case ErrorCode::UnsupportedConfiguration: return "UnsupportedConfiguration";
    case ErrorCode::ThetaZeroCrossing: return "ThetaZeroCrossing";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::DenominatorVanishes: return "DenominatorVanishes";
    case ErrorCode::StepRejection: return "StepRejection";
    case ErrorCode::SpuriousRootFilterFailure: return "SpuriousRootFilterFailure";
    case ErrorCode::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorCode::CollisionDetected: return "CollisionDetected";
  }
  return "Unknown";
}

ScaledComplex::ScaledComplex(cplx mantissa, double log_scale)
    : mantissa_(mantissa), log_scale_(log_scale) {
  normalize();
}

ScaledComplex ScaledComplex::exp(cplx w) {
  ScaledComplex r;
  r.mantissa_ = std::polar(1.0, w.imag());
  r.log_scale_ = w.real();
  return r;
}

void ScaledComplex::normalize() {
  double a = std::abs(mantissa_);
  if (a == 0.0 || !std::isfinite(a)) {
    if (a == 0.0) log_scale_ = 0.0;
    return;
  }
  if (a < 0.5 || a > 2.0) {
    double l = std::log(a);
    mantissa_ /= a;
    log_scale_ += l;
  }
}

cplx ScaledComplex::value() const {
  if (is_zero()) return 0.0;
  return mantissa_ * std::exp(log_scale_);
}

double ScaledComplex::log_abs() const {
  if (is_zero()) return -HUGE_VAL;
  return log_scale_ + std::log(std::abs(mantissa_));
}

cplx ScaledComplex::log() const { return {log_abs(), std::arg(mantissa_)}; }

ScaledComplex& ScaledComplex::operator*=(const ScaledComplex& o) {
  mantissa_ *= o.mantissa_;
  log_scale_ += o.log_scale_;
  normalize();
  return *this;
}

ScaledComplex& ScaledComplex::operator/=(const ScaledComplex& o) {
  mantissa_ /= o.mantissa_;
  log_scale_ -= o.log_scale_;
  normalize();
  return *this;
}

ScaledComplex& ScaledComplex::operator*=(cplx c) {
  mantissa_ *= c;
  normalize();
  return *this;
}

ScaledComplex& ScaledComplex::operator+=(const ScaledComplex& o) {
  if (o.is_zero()) return *this;
  if (is_zero()) return *this = o;
  double top = std::max(log_scale_, o.log_scale_);
  mantissa_ = mantissa_ * std::exp(log_scale_ - top) + o.mantissa_ * std::exp(o.log_scale_ - top);
  log_scale_ = top;
  normalize();
  return *this;
}

cplx ratio(const ScaledComplex& a, const ScaledComplex& b) {
  return a.mantissa() / b.mantissa() * std::exp(a.log_scale() - b.log_scale());
}

}  // namespace thetakit
