#pragma once

#include <stdexcept>
#include <string>

namespace thetakit {

enum class ErrorCode {
  InvalidArgument,
  NotSymmetric,
  NotPositiveDefinite,
  RadiusExceeded,
  OrderTooHigh,
  NotHalfPeriod,
  GenusTooLarge,
  BadConfiguration,
  PoleProximity,
  ContourFailure,
  AbelConditionViolated,
  DegenerateCount,
  ResidueSumNonzero,
  CollidingBranchPoints,
  OddCount,
  QuadratureStall,
  MatrixValidation,
  PathThroughBranchPoint,
  IdenticallyZero,
  SpecialDivisor,
  NewtonDivergence,
  PoleAtBranchPoint,
  SingularNormalization,
  PathError,
  UnsupportedPrincipalPart,
  ResidueLeak,
  UnsupportedConfiguration,
  ThetaZeroCrossing,
  BudgetExhausted,
  DenominatorVanishes,
  StepRejection,
  SpuriousRootFilterFailure,
  DegenerateSpectrum,
  CollisionDetected,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace thetakit
